"""Dense statevector simulation for small qubit registers.

States are numpy arrays of shape ``(..., 2**n)``; any leading axes are batch
axes. Qubit 0 is the least significant bit of the amplitude index, so the
basis state ``|q_{n-1} ... q_1 q_0>`` has index ``sum(q_k << k)``.

A gate acting on ``targets = (t_0, ..., t_{k-1})`` is a ``2**k x 2**k``
matrix whose local index has ``t_0`` as its *most* significant bit, which is
the usual textbook layout (``CNOT`` with ``targets=(control, target)``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def num_qubits(state: np.ndarray) -> int:
    dim = state.shape[-1]
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise ValueError(f"state length {dim} is not a power of two")
    return n


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(n: int, index: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = 1.0
    return psi


def _check_targets(targets: Sequence[int], n: int) -> None:
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets must be distinct, got {tuple(targets)}")
    for t in targets:
        if not 0 <= t < n:
            raise ValueError(f"target qubit {t} out of range for {n} qubits")


def apply_gate(state: np.ndarray, gate: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``gate`` on ``targets`` (identity elsewhere) and return a new state.

    ``gate`` may carry the same leading batch axes as ``state``, in which
    case each batch element gets its own matrix.
    """
    state = np.asarray(state)
    gate = np.asarray(gate)
    targets = tuple(int(t) for t in targets)
    n = num_qubits(state)
    k = len(targets)
    _check_targets(targets, n)
    if gate.shape[-2:] != (1 << k, 1 << k):
        raise ValueError(
            f"gate of shape {gate.shape[-2:]} does not act on {k} target qubit(s)"
        )

    batch = state.shape[:-1]
    nb = len(batch)
    psi = state.reshape(batch + (2,) * n)
    # axis holding qubit q once the index is split big-endian
    axes = [nb + n - 1 - t for t in targets]
    psi = np.moveaxis(psi, axes, list(range(nb, nb + k)))
    moved = psi.shape
    psi = psi.reshape(batch + (1 << k, -1))
    if gate.ndim == 2:
        out = np.matmul(gate, psi)
    else:
        out = np.matmul(np.broadcast_to(gate, batch + gate.shape[-2:]), psi)
    out = np.moveaxis(out.reshape(moved), list(range(nb, nb + k)), axes)
    return out.reshape(state.shape)


def apply_single_qubit(state: np.ndarray, gate: np.ndarray, qubit: int) -> np.ndarray:
    """Fast path of :func:`apply_gate` for one target; ``gate`` may be batched."""
    n = num_qubits(state)
    _check_targets((qubit,), n)
    batch = state.shape[:-1]
    psi = state.reshape(batch + (1 << (n - 1 - qubit), 2, 1 << qubit))
    if gate.ndim == 2:
        out = np.einsum("ij,...hjl->...hil", gate, psi)
        return out.reshape(state.shape)
    # batched einsum is slow; spell out the 2x2 product elementwise
    lo, hi = psi[..., 0, :], psi[..., 1, :]
    g = gate[..., None, :, :, None]
    out = np.stack([g[..., 0, 0, :] * lo + g[..., 0, 1, :] * hi, g[..., 1, 0, :] * lo + g[..., 1, 1, :] * hi], axis=-2)
    return out.reshape(state.shape)


def cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    """Index map ``perm`` with ``(CNOT psi)[i] == psi[perm[i]]``."""
    _check_targets((control, target), n)
    idx = np.arange(1 << n)
    return np.where((idx >> control) & 1, idx ^ (1 << target), idx)


def fidelity(a: np.ndarray, b: np.ndarray) -> np.ndarray | float:
    """``|<a|b>|**2``, broadcast over batch axes."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")
    f = np.abs(np.sum(a.conj() * b, axis=-1)) ** 2
    # rounding can push a unit overlap a hair above 1
    f = np.clip(f, 0.0, 1.0)
    return float(f) if f.ndim == 0 else f


def haar_random_unitary(k: int, rng: np.random.Generator, size: int | tuple | None = None) -> np.ndarray:
    """Haar-distributed unitary on ``k`` qubits.

    QR of a complex Ginibre matrix, with the columns of ``Q`` rephased so the
    diagonal of ``R`` is real positive; without that fix the factorization is
    not unique and the result is not Haar.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    d = 1 << k
    shape = () if size is None else tuple(np.atleast_1d(size))
    z = rng.standard_normal(shape + (d, d, 2)).view(complex)[..., 0] / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[..., None, :]


def haar_random_state(n: int, rng: np.random.Generator, size: int | tuple | None = None) -> np.ndarray:
    """Haar-random pure state, a normalized complex Gaussian vector."""
    shape = () if size is None else tuple(np.atleast_1d(size))
    v = rng.standard_normal(shape + (1 << n, 2)).view(complex)[..., 0]
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def is_unitary(u: np.ndarray, atol: float = 1e-10) -> bool:
    u = np.asarray(u)
    eye = np.eye(u.shape[-1])
    return bool(np.allclose(np.swapaxes(u.conj(), -1, -2) @ u, eye, atol=atol, rtol=0))


@dataclass(frozen=True)
class PauliString:
    """``coefficient * prod(sigma_axis on qubit)`` over ``factors``."""

    coefficient: float
    factors: tuple[tuple[int, str], ...]

    def __post_init__(self):
        factors = tuple((int(q), str(a).upper()) for q, a in self.factors)
        qubits = [q for q, _ in factors]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in Pauli string {factors}")
        for q, a in factors:
            if a not in ("X", "Y", "Z"):
                raise ValueError(f"unknown Pauli axis {a!r}")
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @classmethod
    def from_label(cls, label: str, coefficient: float = 1.0) -> "PauliString":
        """``"XIZ"`` style label; the rightmost character is qubit 0."""
        factors = [
            (q, a) for q, a in enumerate(reversed(label.upper())) if a != "I"
        ]
        return cls(coefficient, tuple(factors))

    @property
    def max_qubit(self) -> int:
        return max((q for q, _ in self.factors), default=-1)

    def masks(self) -> tuple[int, int, int]:
        """Bit masks (flip, phase, number of Y factors)."""
        xmask = zmask = ny = 0
        for q, a in self.factors:
            if a in ("X", "Y"):
                xmask |= 1 << q
            if a in ("Z", "Y"):
                zmask |= 1 << q
            ny += a == "Y"
        return xmask, zmask, ny

    def apply(self, state: np.ndarray) -> np.ndarray:
        """``P |state>`` including the coefficient."""
        n = num_qubits(state)
        if self.max_qubit >= n:
            raise ValueError(
                f"Pauli string acts on qubit {self.max_qubit}, state has {n} qubits"
            )
        xmask, zmask, ny = self.masks()
        idx = np.arange(1 << n)
        parity = np.zeros(1 << n, dtype=np.int64)
        bits = idx & zmask
        while np.any(bits):
            parity ^= bits & 1
            bits = bits >> 1
        phase = (1j) ** ny * (1 - 2 * parity)
        out = np.empty_like(state, dtype=complex)
        out[..., idx ^ xmask] = self.coefficient * phase * state
        return out

    def matrix(self, n: int) -> np.ndarray:
        """Dense ``2**n`` matrix built from explicit Kronecker products."""
        ops = dict(self.factors)
        m = np.array([[1.0 + 0j]])
        for q in reversed(range(n)):
            m = np.kron(m, PAULI[ops.get(q, "I")])
        return self.coefficient * m


def expectation(state: np.ndarray, h: Iterable[PauliString]) -> np.ndarray | float:
    """Exact ``<state| sum_k P_k |state>`` for a list of Pauli strings."""
    state = np.asarray(state)
    total = np.zeros(state.shape[:-1])
    for p in h:
        val = np.sum(state.conj() * p.apply(state), axis=-1)
        total = total + val.real
    return float(total) if np.ndim(total) == 0 else total


def hamiltonian_matrix(h: Iterable[PauliString], n: int) -> np.ndarray:
    """Dense matrix of a Pauli sum, assembled by applying each string to the basis."""
    eye = np.eye(1 << n, dtype=complex)
    out = np.zeros((1 << n, 1 << n), dtype=complex)
    for p in h:
        # rows of eye are basis kets; apply acts on the last axis
        out += p.apply(eye).T
    return out
