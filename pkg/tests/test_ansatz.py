import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import expm_hermitian
from pqcexpr import statevector as sv
from pqcexpr.ansatz import (
    AXES,
    AnsatzSpec,
    Entangler,
    ParameterAssignment,
    Rotation,
    block_partition,
    build_template,
    prepare_state,
    rotation_matrices,
    sample_block_haar_state,
    sample_parameters,
)
from pqcexpr.cli import TABLE1_ROWS


def _connected(n, edges):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(q) for q in range(n)}) == 1


def entropy_across(psi, n, cut):
    """Entanglement entropy between qubits ``< cut`` and the rest."""
    m = psi.reshape(2 ** (n - cut), 2**cut)
    s = np.linalg.svd(m, compute_uv=False) ** 2
    s = s[s > 1e-15]
    return float(-(s * np.log(s)).sum())


class TestSpec:
    @pytest.mark.parametrize("family,n,layers,m,depth,count", TABLE1_ROWS)
    def test_table1_parameter_counts(self, family, n, layers, m, depth, count):
        assert build_template(AnsatzSpec(family, n, layers, m, depth)).parameter_count == count

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(family="ALT", n=4, layers=2, m=3),
            dict(family="ALT", n=6, layers=2, m=4),
            dict(family="TEN", n=4, layers=2, m=8),
            dict(family="TEN", n=4, layers=2),
            dict(family="HEA", n=4, layers=0),
            dict(family="HEA", n=1, layers=1),
            dict(family="XYZ", n=4, layers=1),
            dict(family="ALT", n=4, layers=1, m=2, block_depth=-1),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            AnsatzSpec(**kwargs)

    def test_depth_defaults_to_block_width(self):
        assert AnsatzSpec("ALT", 8, 2, 4).block_depth == 4

    @given(
        st.sampled_from(["TEN", "ALT", "HEA"]),
        st.integers(1, 4),
        st.integers(1, 5),
        st.sampled_from([2, 4]),
        st.integers(0, 4),
    )
    def test_json_roundtrip(self, family, blocks, layers, m, depth):
        spec = AnsatzSpec(family, m * blocks, layers, m, depth) if family != "HEA" else AnsatzSpec(family, m * blocks, layers)
        assert AnsatzSpec.from_json(spec.to_json()) == spec


class TestLayout:
    def test_alt_partitions(self):
        spec = AnsatzSpec("ALT", 8, 3, 4)
        assert block_partition(spec, 0) == [(0, 1, 2, 3), (4, 5, 6, 7)]
        assert block_partition(spec, 1) == [(0, 1), (2, 3, 4, 5), (6, 7)]
        assert block_partition(spec, 2) == block_partition(spec, 0)

    @pytest.mark.parametrize("family", ["TEN", "ALT"])
    @pytest.mark.parametrize("n,m,layers", [(4, 2, 3), (8, 4, 2), (6, 2, 4)])
    def test_gates_stay_in_blocks(self, family, n, m, layers):
        spec = AnsatzSpec(family, n, layers, m, 2)
        t = build_template(spec)
        for layer in range(layers):
            blocks = block_partition(spec, layer)
            assert sorted(q for b in blocks for q in b) == list(range(n))
            for g in t.layer_gates(layer):
                support = {g.qubit} if isinstance(g, Rotation) else {g.control, g.target}
                assert support <= set(blocks[g.block])

    def test_ten_never_crosses_boundary(self):
        t = build_template(AnsatzSpec("TEN", 8, 4, 4))
        for g in t.gates:
            if isinstance(g, Entangler):
                assert g.control // 4 == g.target // 4

    @pytest.mark.parametrize("n,layers", [(4, 4), (6, 2)])
    def test_hea_layers_connected(self, n, layers):
        t = build_template(AnsatzSpec("HEA", n, layers))
        for layer in range(layers):
            edges = [(g.control, g.target) for g in t.layer_gates(layer) if isinstance(g, Entangler)]
            assert _connected(n, edges)

    def test_ladder_direction_alternates(self):
        t = build_template(AnsatzSpec("TEN", 4, 1, 4, 2))
        ents = [(g.control, g.target) for g in t.gates if isinstance(g, Entangler)]
        assert ents == [(0, 1), (1, 2), (2, 3), (3, 2), (2, 1), (1, 0)]


class TestStates:
    def test_rotation_convention(self):
        theta = np.array([0.3, 1.1, 2.5])
        axes = np.array([0, 1, 2])
        r = rotation_matrices(theta, axes)
        for k, a in enumerate(AXES):
            np.testing.assert_allclose(r[k], expm_hermitian(sv.PAULI[a], theta[k] / 2), atol=1e-12)

    def test_zero_angles_give_zero_state(self):
        t = build_template(AnsatzSpec("TEN", 4, 3, 2))
        p = ParameterAssignment(np.zeros(t.parameter_count), np.zeros(t.parameter_count, int))
        np.testing.assert_allclose(prepare_state(t, p), sv.zero_state(4), atol=1e-14)

    @pytest.mark.parametrize("spec", [AnsatzSpec("TEN", 4, 3, 2), AnsatzSpec("ALT", 6, 3, 2), AnsatzSpec("HEA", 5, 3)])
    def test_normalized(self, spec):
        t = build_template(spec)
        psi = prepare_state(t, sample_parameters(t, np.random.default_rng(0), 20))
        np.testing.assert_allclose(np.linalg.norm(psi, axis=-1), 1.0, atol=1e-10)

    def test_ten_is_product(self):
        spec = AnsatzSpec("TEN", 6, 3, 2)
        t = build_template(spec)
        psi = prepare_state(t, sample_parameters(t, np.random.default_rng(1), 10))
        for state in psi:
            for cut in (2, 4):
                assert entropy_across(state, 6, cut) < 1e-10

    def test_alt_entangles_across_boundary(self):
        t = build_template(AnsatzSpec("ALT", 4, 3, 2))
        psi = prepare_state(t, sample_parameters(t, np.random.default_rng(1)))
        assert entropy_across(psi, 4, 2) > 1e-3

    def test_length_mismatch(self):
        t = build_template(AnsatzSpec("HEA", 3, 2))
        with pytest.raises(ValueError):
            prepare_state(t, ParameterAssignment(np.zeros(5), np.zeros(5, int)))

    def test_batched_matches_single(self):
        t = build_template(AnsatzSpec("ALT", 4, 2, 2))
        p = sample_parameters(t, np.random.default_rng(4), 3)
        batch = prepare_state(t, p)
        for i in range(3):
            np.testing.assert_allclose(batch[i], prepare_state(t, ParameterAssignment(p.angles[i], p.axes[i])), atol=1e-12)


class TestSampling:
    def test_deterministic(self):
        t = build_template(AnsatzSpec("ALT", 4, 3, 2))
        a = sample_parameters(t, np.random.default_rng(7))
        b = sample_parameters(t, np.random.default_rng(7))
        np.testing.assert_array_equal(a.angles, b.angles)
        np.testing.assert_array_equal(a.axes, b.axes)

    def test_uniform_marginals(self):
        t = build_template(AnsatzSpec("HEA", 2, 1))
        p = sample_parameters(t, np.random.default_rng(0), 50_000)
        ang = p.angles.ravel()[:100_000]
        assert abs(ang.mean() - np.pi) < 3 * ang.std() / np.sqrt(ang.size)
        assert ang.min() >= 0 and ang.max() < 2 * np.pi
        ax = p.axes.ravel()
        for a in range(3):
            freq = np.mean(ax == a)
            assert abs(freq - 1 / 3) < 3 * np.sqrt(2 / 9 / ax.size)

    def test_invalid_axis_codes(self):
        with pytest.raises(ValueError):
            ParameterAssignment(np.zeros(2), np.array([0, 3]))

    def test_hea_mean_fidelity_one_design(self):
        t = build_template(AnsatzSpec("HEA", 4, 4))
        rng = np.random.default_rng(11)
        a = prepare_state(t, sample_parameters(t, rng, 10_000))
        b = prepare_state(t, sample_parameters(t, rng, 10_000))
        f = sv.fidelity(a, b)
        assert abs(f.mean() - 1 / 16) < 3 * f.std() / np.sqrt(f.size)


class TestBlockHaar:
    def test_ten_product_of_blocks(self):
        psi = sample_block_haar_state(AnsatzSpec("TEN", 4, 2, 2), np.random.default_rng(0))
        assert entropy_across(psi, 4, 2) < 1e-10

    def test_hea_is_haar_state(self):
        psi = sample_block_haar_state(AnsatzSpec("HEA", 3, 2), np.random.default_rng(0), 4)
        assert psi.shape == (4, 8)
        np.testing.assert_allclose(np.linalg.norm(psi, axis=-1), 1.0)

    def test_alt_first_moment(self):
        spec = AnsatzSpec("ALT", 4, 3, 2)
        rng = np.random.default_rng(2)
        f = sv.fidelity(sample_block_haar_state(spec, rng, 20_000), sample_block_haar_state(spec, rng, 20_000))
        assert abs(f.mean() - 1 / 16) < 3 * f.std() / np.sqrt(f.size)
