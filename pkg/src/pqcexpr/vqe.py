"""VQE on a Heisenberg ring with Adam and parameter-shift gradients."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import statevector as sv
from .ansatz import _SIGMA, AnsatzSpec, CircuitTemplate, ParameterAssignment, Rotation, build_template, rotation_matrices, run_circuit

THRESHOLDS = tuple(range(-7, 1))


@dataclass(frozen=True)
class Hamiltonian:
    terms: tuple[sv.PauliString, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if t.max_qubit >= self.n:
                raise ValueError(f"term {t} acts outside {self.n} qubits")

    def matrix(self) -> np.ndarray:
        return sv.hamiltonian_matrix(self.terms, self.n)

    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix())

    def ground_energy(self) -> float:
        return float(self.spectrum()[0])

    def expectation(self, state: np.ndarray):
        return sv.expectation(state, self.terms)


def build_heisenberg_ring(n: int) -> Hamiltonian:
    """Sum of XX + YY + ZZ over the bonds of an ``n``-site ring."""
    if n < 3:
        raise ValueError("a ring needs at least 3 sites")
    terms = [
        sv.PauliString(1.0, ((i, a), ((i + 1) % n, a)))
        for i in range(n)
        for a in ("X", "Y", "Z")
    ]
    return Hamiltonian(tuple(terms), n)


def _energies(template: CircuitTemplate, angles: np.ndarray, axes: np.ndarray, hmat: np.ndarray) -> np.ndarray:
    psi = run_circuit(template, rotation_matrices(angles, axes))
    return np.einsum("...i,ij,...j->...", psi.conj(), hmat, psi).real


def _value_and_gradient(template, angles, axes, hmat):
    """Energy and shift-rule gradient for a batch of angle vectors ``(..., P)``.

    All 2P shifted circuits and the unshifted one run as one batch.
    """
    p = angles.shape[-1]
    shifts = np.concatenate([np.zeros((1, p)), np.eye(p) * (np.pi / 2), -np.eye(p) * (np.pi / 2)])
    batch = angles[..., None, :] + shifts
    e = _energies(template, batch, np.broadcast_to(axes[..., None, :], batch.shape), hmat)
    return e[..., 0], (e[..., 1 : p + 1] - e[..., p + 1 :]) / 2


def _adjoint_value_and_gradient(template, angles, axes, hmat):
    """Same result as the shift rule from one forward and one reverse sweep.

    With ``lam = U_after^dag H psi`` at rotation ``p``, the derivative is
    ``Im <lam| sigma |psi_p>`` for ``exp(-i theta sigma / 2)`` gates.
    """
    gates = rotation_matrices(angles, axes)
    psi = run_circuit(template, gates)
    lam = psi @ hmat.T
    e = np.einsum("...i,...i->...", psi.conj(), lam).real
    grad = np.empty(angles.shape)
    inv = np.conj(np.swapaxes(gates, -1, -2))
    sigma = _SIGMA[axes]
    for g in reversed(template.gates):
        if isinstance(g, Rotation):
            s_psi = sv.apply_single_qubit(psi, sigma[..., g.slot, :, :], g.qubit)
            grad[..., g.slot] = np.einsum("...i,...i->...", lam.conj(), s_psi).imag
            psi = sv.apply_single_qubit(psi, inv[..., g.slot, :, :], g.qubit)
            lam = sv.apply_single_qubit(lam, inv[..., g.slot, :, :], g.qubit)
        else:
            perm = template._perm(g)  # CNOT is its own inverse
            psi = psi[..., perm]
            lam = lam[..., perm]
    return e, grad


def gradient(template: CircuitTemplate, params: ParameterAssignment, h: Hamiltonian) -> np.ndarray:
    """Exact gradient of the energy with respect to every rotation angle."""
    if len(params) != template.parameter_count:
        raise ValueError(
            f"assignment has {len(params)} angles, template needs {template.parameter_count}"
        )
    return _value_and_gradient(template, params.angles, params.axes, h.matrix())[1]


def energy(template: CircuitTemplate, params: ParameterAssignment, h: Hamiltonian):
    e = _energies(template, params.angles, params.axes, h.matrix())
    return float(e) if e.ndim == 0 else e


def gradient_norm(grad: np.ndarray) -> np.ndarray:
    """Mean absolute partial derivative."""
    return np.mean(np.abs(grad), axis=-1)


@dataclass
class AdamState:
    """Adam moments for a batch of parameter vectors; updates are in place."""

    size: int
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch: tuple[int, ...] = ()
    step_count: int = 0
    first: np.ndarray = field(init=False)
    second: np.ndarray = field(init=False)

    def __post_init__(self):
        self.first = np.zeros(self.batch + (self.size,))
        self.second = np.zeros(self.batch + (self.size,))

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if grad.shape != self.first.shape:
            raise ValueError(f"gradient shape {grad.shape} != {self.first.shape}")
        self.step_count += 1
        self.first = self.beta1 * self.first + (1 - self.beta1) * grad
        self.second = self.beta2 * self.second + (1 - self.beta2) * grad**2
        mhat = self.first / (1 - self.beta1**self.step_count)
        vhat = self.second / (1 - self.beta2**self.step_count)
        return params - self.learning_rate * mhat / (np.sqrt(vhat) + self.eps)


@dataclass(frozen=True)
class VqeTrialRecord:
    spec: AnsatzSpec
    seed: int
    energies: np.ndarray
    gradient_norms: np.ndarray
    final_angles: np.ndarray
    axes: np.ndarray

    @property
    def final_energy(self) -> float:
        return float(self.energies[-1])


def _initial(template: CircuitTemplate, seed: int):
    rng = np.random.default_rng(seed)
    p = template.parameter_count
    return rng.uniform(0.0, 2 * np.pi, p), rng.integers(0, 3, p)


def trial_seeds(seed: int, trials: int) -> list[int]:
    """Per-trial seeds spawned from a master seed."""
    return [int(c.generate_state(1)[0]) for c in np.random.SeedSequence(seed).spawn(trials)]


def run_trials(
    spec: AnsatzSpec,
    h: Hamiltonian,
    iterations: int,
    seeds: list[int],
    learning_rate: float = 0.001,
) -> list[VqeTrialRecord]:
    """Optimize one trajectory per seed, all advanced together as a batch.

    Energies and gradient norms are recorded at steps ``0..iterations``.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if h.n != spec.n:
        raise ValueError(f"Hamiltonian has {h.n} qubits, ansatz has {spec.n}")
    if not seeds:
        raise ValueError("need at least one seed")
    template = build_template(spec)
    hmat = h.matrix()
    init = [_initial(template, s) for s in seeds]
    angles = np.stack([a for a, _ in init])
    axes = np.stack([x for _, x in init])
    opt = AdamState(template.parameter_count, learning_rate, batch=(len(seeds),))
    energies = np.empty((len(seeds), iterations + 1))
    norms = np.empty_like(energies)
    for t in range(iterations + 1):
        e, g = _adjoint_value_and_gradient(template, angles, axes, hmat)
        energies[:, t] = e
        norms[:, t] = gradient_norm(g)
        if t < iterations:
            angles = opt.step(angles, g)
    return [
        VqeTrialRecord(spec, s, energies[i], norms[i], angles[i], axes[i])
        for i, s in enumerate(seeds)
    ]


def run_trial(spec: AnsatzSpec, h: Hamiltonian, iterations: int, seed: int, learning_rate: float = 0.001) -> VqeTrialRecord:
    return run_trials(spec, h, iterations, [seed], learning_rate)[0]


@dataclass(frozen=True)
class GradientProfile:
    """Gradient norm at first passage below each energy threshold.

    ``mean`` and ``std`` are NaN where no trajectory reached the threshold.
    """

    thresholds: tuple[int, ...]
    mean: np.ndarray
    std: np.ndarray
    reached: np.ndarray

    def rows(self) -> list[dict]:
        return [
            {
                "threshold": e,
                "mean": None if c == 0 else float(mu),
                "std": None if c == 0 else float(sd),
                "reached": int(c),
            }
            for e, mu, sd, c in zip(self.thresholds, self.mean, self.std, self.reached)
        ]

    def at(self, threshold: int) -> dict:
        return self.rows()[self.thresholds.index(threshold)]


def first_passage(energies: np.ndarray, threshold: float) -> int | None:
    hits = np.flatnonzero(energies <= threshold)
    return int(hits[0]) if hits.size else None


def gradient_profile(records: list[VqeTrialRecord], thresholds=THRESHOLDS) -> GradientProfile:
    if not records:
        raise ValueError("no trial records")
    thresholds = tuple(thresholds)
    mean, std, reached = [], [], []
    for e in thresholds:
        vals = []
        for r in records:
            t = first_passage(r.energies, e)
            if t is not None:
                vals.append(r.gradient_norms[t])
        reached.append(len(vals))
        if vals:
            mean.append(float(np.mean(vals)))
            std.append(float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0)
        else:
            mean.append(math.nan)
            std.append(math.nan)
    return GradientProfile(thresholds, np.array(mean), np.array(std), np.array(reached))


def product_state_minimum(h: Hamiltonian, blocks: list[tuple[int, ...]], restarts: int = 10, sweeps: int = 2000, seed: int = 0) -> float:
    """Lowest energy over product states of the given blocks.

    Alternating minimization: each block in turn is replaced by the ground
    state of its mean-field Hamiltonian, from several random starts.
    """
    n = h.n
    hmat = h.matrix()
    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(restarts):
        parts = [sv.haar_random_state(len(b), rng) for b in blocks]
        prev = math.inf
        for _ in range(sweeps):
            for i, b in enumerate(blocks):
                heff = _mean_field(hmat, n, blocks, parts, i)
                w, v = np.linalg.eigh(heff)
                parts[i] = v[:, 0]
            cur = float(w[0])
            if prev - cur < 1e-13:
                break
            prev = cur
        best = min(best, cur)
    return best


def _mean_field(hmat, n, blocks, parts, i):
    # contract every block except i against its current state
    t = hmat.reshape((2,) * (2 * n))
    order = [q for b in blocks for q in b]
    keep = blocks[i]
    ket_axes = {q: n - 1 - q for q in range(n)}
    bra_axes = {q: 2 * n - 1 - q for q in range(n)}
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    sub = [letters[k] for k in range(2 * n)]
    operands = [t]
    specs = []
    for j, b in enumerate(blocks):
        if j == i:
            continue
        ket = "".join(sub[ket_axes[q]] for q in b)
        bra = "".join(sub[bra_axes[q]] for q in b)
        psi = parts[j].reshape((2,) * len(b))
        operands += [psi.conj(), psi]
        specs += [ket, bra]
    out = "".join(sub[ket_axes[q]] for q in keep) + "".join(sub[bra_axes[q]] for q in keep)
    expr = "".join(sub) + "," + ",".join(specs) + "->" + out
    d = 2 ** len(keep)
    return np.einsum(expr, *operands).reshape(d, d)


def records_csv(records: list[VqeTrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "iteration", "energy", "grad_norm"])
    for i, r in enumerate(records):
        for t, (e, g) in enumerate(zip(r.energies, r.gradient_norms)):
            w.writerow([i, t, repr(float(e)), repr(float(g))])
    return buf.getvalue()


def summary(records: list[VqeTrialRecord], profile: GradientProfile | None = None) -> dict:
    e = np.stack([r.energies for r in records])
    out = {
        "spec": records[0].spec.to_dict(),
        "seeds": [r.seed for r in records],
        "mean_energy": e.mean(axis=0).tolist(),
        "std_energy": e.std(axis=0).tolist(),
        "final_energies": e[:, -1].tolist(),
        "best_final_energy": float(e[:, -1].min()),
    }
    if profile is not None:
        out["gradient_profile"] = profile.rows()
    return out


def summary_json(records: list[VqeTrialRecord], profile: GradientProfile | None = None) -> str:
    return json.dumps(summary(records, profile), sort_keys=True)
