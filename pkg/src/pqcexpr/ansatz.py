"""Layered circuit families: tensor-product (TEN), alternating (ALT), hardware-efficient (HEA).

Qubits and layers are 0-indexed here, so the "odd" layers of the usual
1-indexed description are layers 0, 2, 4, ... .
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np

from . import statevector as sv

FAMILIES = ("TEN", "ALT", "HEA")
AXES = ("X", "Y", "Z")
_SIGMA = np.stack([sv.X, sv.Y, sv.Z])


@dataclass(frozen=True)
class AnsatzSpec:
    family: str
    n: int
    layers: int
    m: int | None = None
    block_depth: int | None = None

    def __post_init__(self):
        family = str(self.family).upper()
        object.__setattr__(self, "family", family)
        if family not in FAMILIES:
            raise ValueError(f"unknown ansatz family {self.family!r}")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if family == "HEA":
            if self.block_depth not in (None, 1):
                raise ValueError("HEA has no block depth")
            object.__setattr__(self, "m", None)
            object.__setattr__(self, "block_depth", None)
            return
        if self.m is None:
            raise ValueError(f"{family} needs a block width m")
        if self.m < 2 or self.m % 2 or self.n % self.m or self.m > self.n:
            raise ValueError(
                f"block width m={self.m} must be even, >= 2 and divide n={self.n}"
            )
        if self.block_depth is None:
            object.__setattr__(self, "block_depth", self.m)
        elif self.block_depth < 0:
            raise ValueError("block_depth must be >= 0")

    @property
    def label(self) -> str:
        if self.family == "HEA":
            return f"HEA(l={self.layers},n={self.n})"
        return f"{self.family}(l={self.layers},m={self.m},n={self.n},depth={self.block_depth})"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "AnsatzSpec":
        return cls(
            family=data["family"],
            n=int(data["n"]),
            layers=int(data["layers"]),
            m=None if data.get("m") is None else int(data["m"]),
            block_depth=None if data.get("block_depth") is None else int(data["block_depth"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "AnsatzSpec":
        return cls.from_dict(json.loads(text))


def block_partition(spec: AnsatzSpec, layer: int) -> list[tuple[int, ...]]:
    """Qubit blocks of one layer."""
    n, m = spec.n, spec.m
    if spec.family == "HEA":
        return [tuple(range(n))]
    if spec.family == "ALT" and layer % 2 == 1:
        h = m // 2
        blocks = [tuple(range(h))]
        blocks += [tuple(range(s, s + m)) for s in range(h, n - h, m)]
        blocks.append(tuple(range(n - h, n)))
        return blocks
    return [tuple(range(s, s + m)) for s in range(0, n, m)]


@dataclass(frozen=True)
class Rotation:
    slot: int
    qubit: int
    layer: int
    block: int


@dataclass(frozen=True)
class Entangler:
    control: int
    target: int
    layer: int
    block: int


Gate = Union[Rotation, Entangler]


@dataclass(frozen=True)
class CircuitTemplate:
    spec: AnsatzSpec
    gates: tuple[Gate, ...]
    parameter_count: int
    _perms: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.spec.n

    def layer_gates(self, layer: int) -> list[Gate]:
        return [g for g in self.gates if g.layer == layer]

    def _perm(self, gate: Entangler) -> np.ndarray:
        key = (gate.control, gate.target)
        if key not in self._perms:
            self._perms[key] = sv.cnot_permutation(self.n, *key)
        return self._perms[key]


def _ladder(qubits: tuple[int, ...], reverse: bool = False) -> list[tuple[int, int]]:
    pairs = [(qubits[i], qubits[i + 1]) for i in range(len(qubits) - 1)]
    if reverse:
        return [(t, c) for c, t in reversed(pairs)]
    return pairs


def build_template(spec: AnsatzSpec) -> CircuitTemplate:
    """Rotation + CNOT-ladder units laid out in the family's block structure.

    Every unit is one rotation per qubit of the block followed by CNOTs on
    adjacent pairs. The ladder runs downward (control ``q``, target ``q+1``)
    in even units and upward (control ``q+1``, target ``q``, last pair
    first) in odd ones, counting units within a block; HEA counts layers.
    A fixed one-way ladder leaves 2-qubit blocks of depth 2 far from a
    2-design.
    """
    gates: list[Gate] = []
    slot = 0
    for layer in range(spec.layers):
        depth = 1 if spec.family == "HEA" else spec.block_depth
        for b, qubits in enumerate(block_partition(spec, layer)):
            for unit in range(depth):
                for q in qubits:
                    gates.append(Rotation(slot, q, layer, b))
                    slot += 1
                upward = (layer if spec.family == "HEA" else unit) % 2 == 1
                for c, t in _ladder(qubits, upward):
                    gates.append(Entangler(c, t, layer, b))
    return CircuitTemplate(spec, tuple(gates), slot)


@dataclass(frozen=True)
class ParameterAssignment:
    """Angles in [0, 2pi) and axis codes (0, 1, 2 for X, Y, Z); leading axes batch."""

    angles: np.ndarray
    axes: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        axes = np.asarray(self.axes, dtype=np.int64)
        if angles.shape != axes.shape:
            raise ValueError(f"angles {angles.shape} and axes {axes.shape} differ in shape")
        if np.any((axes < 0) | (axes > 2)):
            raise ValueError("axis codes must be 0, 1 or 2")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "axes", axes)

    def __len__(self) -> int:
        return self.angles.shape[-1]

    @property
    def axis_labels(self) -> np.ndarray:
        return np.asarray(AXES)[self.axes]


def sample_parameters(
    template: CircuitTemplate, rng: np.random.Generator, size: int | None = None
) -> ParameterAssignment:
    shape = (template.parameter_count,) if size is None else (size, template.parameter_count)
    angles = rng.uniform(0.0, 2 * np.pi, size=shape)
    axes = rng.integers(0, 3, size=shape)
    return ParameterAssignment(angles, axes)


def rotation_matrices(angles: np.ndarray, axes: np.ndarray) -> np.ndarray:
    """``exp(-i theta sigma_a / 2)`` for every entry, shape ``angles.shape + (2, 2)``."""
    c = np.cos(angles / 2)[..., None, None]
    s = np.sin(angles / 2)[..., None, None]
    return c * sv.I2 - 1j * s * _SIGMA[axes]


def run_circuit(template: CircuitTemplate, rotations: np.ndarray, state: np.ndarray | None = None) -> np.ndarray:
    """Apply the template with precomputed rotation matrices ``(..., P, 2, 2)``."""
    batch = rotations.shape[:-3]
    if state is None:
        state = np.zeros(batch + (1 << template.n,), dtype=complex)
        state[..., 0] = 1.0
    psi = state
    for g in template.gates:
        if isinstance(g, Rotation):
            psi = sv.apply_single_qubit(psi, rotations[..., g.slot, :, :], g.qubit)
        else:
            psi = psi[..., template._perm(g)]
    return psi


def prepare_state(template: CircuitTemplate, params: ParameterAssignment) -> np.ndarray:
    """``U_C(theta)|0...0>``; batched when ``params`` carries leading axes."""
    if len(params) != template.parameter_count:
        raise ValueError(
            f"assignment has {len(params)} angles, template needs {template.parameter_count}"
        )
    return run_circuit(template, rotation_matrices(params.angles, params.axes))


def sample_block_haar_state(
    spec: AnsatzSpec, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """State from the idealized ensemble where every block is an exact Haar unitary.

    For HEA the whole circuit is a single block, so the output is a Haar state.
    """
    if spec.family == "HEA":
        return sv.haar_random_state(spec.n, rng, size)
    shape = () if size is None else (size,)
    psi = np.zeros(shape + (1 << spec.n,), dtype=complex)
    psi[..., 0] = 1.0
    for layer in range(spec.layers):
        for qubits in block_partition(spec, layer):
            u = sv.haar_random_unitary(len(qubits), rng, size)
            psi = sv.apply_gate(psi, u, qubits)
    return psi
