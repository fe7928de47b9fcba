"""Exact second frame potentials of block-2-design circuits.

Every 2-design block average is a weighted sum of Kronecker-delta patterns.
Summing such a product over free indices of dimension ``d`` gives
``weight * d**(number of free components)``, so a whole integral becomes a
count of connected components. The alternating ansatz integrals split into
one piece per half-block, chained left to right by a transfer matrix.

Indices of an ``m``-qubit block split into two half-block indices of
dimension ``d = 2**(m/2)``; a delta on block indices is the product of the
deltas on both halves with the same pattern.
"""
from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

CONST = "0"
CACHE_ENV = "PQCEXPR_CACHE_DIR"

# Slot order of a degree-(2,2) moment U_{i1 j1} U_{i2 j2} U*_{i1' j1'} U*_{i2' j2'}.
# Pattern r pairs slots that the delta of term r sets equal: rows and columns
# are matched either straight or crossed between the two conjugate copies.
PATTERNS: dict[int, tuple[tuple[int, int], ...]] = {
    1: ((0, 4), (1, 5), (2, 6), (3, 7)),
    2: ((0, 6), (1, 7), (2, 4), (3, 5)),
    3: ((0, 4), (1, 7), (2, 6), (3, 5)),
    4: ((0, 6), (1, 5), (2, 4), (3, 7)),
}
KS = (1, 2, 3, 4)


@dataclass
class DeltaNetwork:
    """Product of Kronecker deltas times an exact weight.

    ``nodes`` are index names of a common dimension; :data:`CONST` is the
    fixed basis index 0 and is not summed.
    """

    nodes: set[str] = field(default_factory=set)
    edges: list[tuple[str, str]] = field(default_factory=list)
    weight: Fraction = Fraction(1)

    def add_delta(self, a: str, b: str) -> None:
        for x in (a, b):
            if x != CONST:
                self.nodes.add(x)
        self.edges.append((a, b))

    def add_node(self, name: str) -> None:
        self.nodes.add(name)

    def add_pattern(self, r: int, slots: Sequence[str]) -> None:
        if len(slots) != 8:
            raise ValueError("a degree-(2,2) pattern needs 8 index slots")
        for x, y in PATTERNS[r]:
            self.add_delta(slots[x], slots[y])

    def merge(self, other: "DeltaNetwork") -> "DeltaNetwork":
        out = DeltaNetwork(self.nodes | other.nodes, self.edges + other.edges, self.weight * other.weight)
        return out

    def free_components(self) -> int:
        """Connected components of the equality graph not tied to ``CONST``."""
        parent = {x: x for x in self.nodes}
        parent[CONST] = CONST

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        const = find(CONST)
        roots = {find(x) for x in self.nodes}
        roots.discard(const)
        return len(roots)


def contract(network: DeltaNetwork, d: int) -> Fraction:
    """Sum the network over all free indices of dimension ``d``."""
    if d < 2:
        raise ValueError("dimension must be >= 2")
    return network.weight * Fraction(d) ** network.free_components()


def weingarten(k: int) -> dict[int, Fraction]:
    """Coefficients of the four delta patterns for a ``k``-qubit 2-design."""
    if k < 1:
        raise ValueError("k must be >= 1")
    dd = 4**k - 1
    same = Fraction(1, dd)
    cross = Fraction(-1, dd * 2**k)
    return {1: same, 2: same, 3: cross, 4: cross}


def one_design_moment(k: int) -> Callable[[str, str, str, str], DeltaNetwork]:
    """Average of ``U_{ij} U*_{ml}`` for a ``k``-qubit 1-design as a network builder."""
    if k < 1:
        raise ValueError("k must be >= 1")

    def rule(i: str, j: str, m: str, l: str) -> DeltaNetwork:
        net = DeltaNetwork(weight=Fraction(1, 2**k))
        net.add_delta(i, m)
        net.add_delta(j, l)
        return net

    return rule


def two_design_expand(k: int) -> list[tuple[Fraction, int]]:
    """``[(coefficient, pattern id)]`` of a ``k``-qubit 2-design moment."""
    lam = weingarten(k)
    return [(lam[r], r) for r in KS]


def two_design_network(k: int, slots: Sequence[str]) -> list[DeltaNetwork]:
    """The four weighted networks of ``E[U U U* U*]`` on the given index names."""
    out = []
    for coef, r in two_design_expand(k):
        net = DeltaNetwork(weight=coef)
        net.add_pattern(r, slots)
        out.append(net)
    return out


# --- alternating ansatz: one half-block of the chain -------------------------
#
# Index names per half-block s (primes are the second replica):
#   u, i     outputs of the first-layer block of circuit a (ket / bra side)
#   p, q     the same for circuit b
#   two layers: j, l are the rows of the top layer P (circuit a) and Q (b)
#   three layers: t, j are rows of P (ket / bra), l, r rows of Q, and the
#   third-layer blocks of both circuits merge into one 2-design V = Ua^dag Ub


def _names(s: int, letters: str) -> dict[str, str]:
    out = {}
    for c in letters:
        out[c] = f"{c}{s}"
        out[c + "'"] = f"{c}'{s}"
    return out


def half_block_network(ell: int, ks: Sequence[int], kp: int, kq: int, s: int = 0) -> DeltaNetwork:
    """Delta network of one half-block for block patterns ``ks`` and top-unitary patterns.

    ``ks`` is ``(ka, kb)`` for two layers (first-layer blocks of circuits a
    and b) and ``(ka, kb, kc)`` for three (first layer of a, merged third
    layer, first layer of b).
    """
    net = DeltaNetwork()
    o = CONST
    if ell == 2:
        ka, kb = ks
        v = _names(s, "uipqjl")
        net.add_pattern(ka, [v["u"], o, v["u'"], o, v["i"], o, v["i'"], o])
        net.add_pattern(kb, [v["p"], o, v["p'"], o, v["q"], o, v["q'"], o])
        net.add_pattern(kp, [v["j"], v["u"], v["j'"], v["u'"], v["l"], v["i"], v["l'"], v["i'"]])
        net.add_pattern(kq, [v["l"], v["p"], v["l'"], v["p'"], v["j"], v["q"], v["j'"], v["q'"]])
    elif ell == 3:
        ka, kb, kc = ks
        v = _names(s, "uipqjltr")
        net.add_pattern(ka, [v["u"], o, v["u'"], o, v["i"], o, v["i'"], o])
        net.add_pattern(kb, [v["j"], v["l"], v["j'"], v["l'"], v["t"], v["r"], v["t'"], v["r'"]])
        net.add_pattern(kc, [v["p"], o, v["p'"], o, v["q"], o, v["q'"], o])
        net.add_pattern(kp, [v["t"], v["u"], v["t'"], v["u'"], v["j"], v["i"], v["j'"], v["i'"]])
        net.add_pattern(kq, [v["l"], v["p"], v["l'"], v["p'"], v["r"], v["q"], v["r'"], v["q'"]])
    else:
        raise ValueError(f"only two or three layers are supported, got {ell}")
    return net


def index_set(ell: int) -> list[tuple[int, ...]]:
    """Block-pattern tuples in chain order; position ``16(ka-1)+4(kb-1)+kc`` is 1-based."""
    return list(itertools.product(KS, repeat=ell))


@lru_cache(maxsize=None)
def edge_exponents(ell: int) -> dict[tuple, int]:
    """Free-component count of every half-block network, keyed ``(ks, kp, kq)``."""
    return {
        (ks, kp, kq): half_block_network(ell, ks, kp, kq).free_components()
        for ks in index_set(ell)
        for kp in KS
        for kq in KS
    }


@lru_cache(maxsize=None)
def core_exponents(ell: int) -> dict[tuple, int]:
    """Free-component count of the two half-blocks under one middle unitary.

    The middle unitary spans the right half of block ``ks`` and the left
    half of block ``ks2``; its pattern applies to both halves.
    """
    out = {}
    for ks in index_set(ell):
        for ks2 in index_set(ell):
            for kp in KS:
                for kq in KS:
                    net = half_block_network(ell, ks, kp, kq, s=0).merge(
                        half_block_network(ell, ks2, kp, kq, s=1)
                    )
                    out[(ks, ks2, kp, kq)] = net.free_components()
    return out


def _check_m(m: int) -> None:
    if m < 2 or m % 2:
        raise ValueError(f"block width m must be even and >= 2, got {m}")


def _check_mn(m: int, n: int) -> None:
    _check_m(m)
    if n < m or n % m:
        raise ValueError(f"n={n} must be a positive multiple of m={m}")


def block_weights(ell: int, m: int) -> list[Fraction]:
    """Product of the ``m``-qubit pattern coefficients of each block tuple."""
    lam = weingarten(m)
    out = []
    for ks in index_set(ell):
        w = Fraction(1)
        for k in ks:
            w *= lam[k]
        out.append(w)
    return out


def edge_vector(ell: int, m: int) -> list[Fraction]:
    """Edge half-block integrals with no block coefficients attached."""
    _check_m(m)
    d = 2 ** (m // 2)
    lam = weingarten(m // 2)
    exps = edge_exponents(ell)
    return [
        sum(lam[kp] * lam[kq] * Fraction(d) ** exps[(ks, kp, kq)] for kp in KS for kq in KS)
        for ks in index_set(ell)
    ]


def core_matrix(ell: int, m: int) -> list[list[Fraction]]:
    """Middle-unitary integrals linking neighbouring blocks, no block coefficients."""
    _check_m(m)
    d = 2 ** (m // 2)
    lam = weingarten(m)
    exps = core_exponents(ell)
    idx = index_set(ell)
    powers: dict[int, Fraction] = {}

    def dp(e):
        if e not in powers:
            powers[e] = Fraction(d) ** e
        return powers[e]

    return [
        [
            sum(lam[kp] * lam[kq] * dp(exps[(r, c, kp, kq)]) for kp in KS for kq in KS)
            for c in idx
        ]
        for r in idx
    ]


@dataclass(frozen=True)
class MomentChain:
    """Transfer-matrix data for the ``ell``-layer alternating ansatz with block width ``m``.

    The exact value is ``left @ B**(n/m - 1) @ right`` where each block's
    coefficient product sits on the chain factor to its left: ``left`` is
    the edge vector times the weights, ``B`` is the core matrix with column
    ``c`` scaled by weight ``c`` and ``right`` is the bare edge vector. Every
    coefficient product reaches the total exactly once, so this equals the
    square-root-split symmetric form while staying rational.
    """

    ell: int
    m: int
    edge: tuple[Fraction, ...]
    core: tuple[tuple[Fraction, ...], ...]
    weights: tuple[Fraction, ...]

    @property
    def size(self) -> int:
        return len(self.edge)

    @property
    def left(self) -> list[Fraction]:
        return [w * e for w, e in zip(self.weights, self.edge)]

    @property
    def right(self) -> list[Fraction]:
        return list(self.edge)

    @property
    def B(self) -> list[list[Fraction]]:
        return [[c * w for c, w in zip(row, self.weights)] for row in self.core]

    def evaluate(self, blocks: int) -> Fraction:
        """Chain value for ``blocks = n/m`` first-layer blocks."""
        if blocks < 1:
            raise ValueError("need at least one block")
        v = self.left
        b = self.B
        size = self.size
        for _ in range(blocks - 1):
            v = [sum(v[r] * b[r][c] for r in range(size) if v[r]) for c in range(size)]
        return sum(x * y for x, y in zip(v, self.right))

    def symmetric_a_squared(self) -> list[Fraction]:
        """Squares of the symmetric-form vector entries, ``weight * edge**2``."""
        return [w * e * e for w, e in zip(self.weights, self.edge)]

    def symmetric_B_squared(self) -> list[list[Fraction]]:
        """Squares of the symmetric-form matrix entries up to sign, ``|w_r w_c| core**2``."""
        return [
            [abs(wr * wc) * c * c for c, wc in zip(row, self.weights)]
            for row, wr in zip(self.core, self.weights)
        ]

    def to_json(self) -> str:
        enc = lambda x: {"num": str(x.numerator), "den": str(x.denominator)}
        return json.dumps(
            {
                "ell": self.ell,
                "m": self.m,
                "edge": [enc(x) for x in self.edge],
                "core": [[enc(x) for x in row] for row in self.core],
                "weights": [enc(x) for x in self.weights],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "MomentChain":
        data = json.loads(text)
        dec = lambda x: Fraction(int(x["num"]), int(x["den"]))
        return cls(
            int(data["ell"]),
            int(data["m"]),
            tuple(dec(x) for x in data["edge"]),
            tuple(tuple(dec(x) for x in row) for row in data["core"]),
            tuple(dec(x) for x in data["weights"]),
        )


def _cache_dir(cache_dir: str | os.PathLike | None) -> Path | None:
    if cache_dir is None:
        cache_dir = os.environ.get(CACHE_ENV)
    return Path(cache_dir) if cache_dir else None


_chains: dict[tuple[int, int], MomentChain] = {}


def moment_chain(ell: int, m: int, cache_dir: str | os.PathLike | None = None) -> MomentChain:
    """Build (or load) the chain for ``(ell, m)``.

    Tables are memoized in-process and, when ``cache_dir`` or the
    ``PQCEXPR_CACHE_DIR`` environment variable is set, stored there as JSON.
    """
    if ell not in (2, 3):
        raise ValueError(f"only two or three layers are supported, got {ell}")
    _check_m(m)
    key = (ell, m)
    if key in _chains:
        return _chains[key]
    directory = _cache_dir(cache_dir)
    path = directory / f"chain_l{ell}_m{m}.json" if directory else None
    if path is not None and path.exists():
        chain = MomentChain.from_json(path.read_text())
    else:
        chain = MomentChain(
            ell,
            m,
            tuple(edge_vector(ell, m)),
            tuple(tuple(row) for row in core_matrix(ell, m)),
            tuple(block_weights(ell, m)),
        )
        if path is not None:
            directory.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(f".{os.getpid()}.tmp")
            tmp.write_text(chain.to_json())
            tmp.replace(path)
    _chains[key] = chain
    return chain


def build_a(ell: int, m: int) -> list[Fraction]:
    """Left chain vector: edge integrals with the first block's coefficients attached."""
    return moment_chain(ell, m).left


def build_b(ell: int, m: int) -> list[list[Fraction]]:
    """Transfer matrix with each column scaled by its block's coefficients."""
    return moment_chain(ell, m).B


def haar_second_frame_potential(n: int) -> Fraction:
    return Fraction(1, 2 ** (n - 1) * (2**n + 1))


def alt_second_frame_potential(ell: int, m: int, n: int, exact: bool = False) -> float | Fraction:
    """Second frame potential of the alternating ansatz with 2-design blocks."""
    _check_mn(m, n)
    value = moment_chain(ell, m).evaluate(n // m)
    return value if exact else float(value)


def ten_second_frame_potential(m: int, n: int, exact: bool = False) -> float | Fraction:
    """Tensor-product ansatz: product of ``n/m`` independent ``m``-qubit Haar values."""
    _check_mn(m, n)
    value = haar_second_frame_potential(m) ** (n // m)
    return value if exact else float(value)


class Bound(NamedTuple):
    ratio: float
    value: float


def theorem4_ratio(ell: int, m: int, n: int) -> Fraction:
    """Exact upper bound on ``F2(ALT) / F2_Haar`` for two or three layers."""
    _check_mn(m, n)
    if ell == 2:
        factor, growth = 8, Fraction(104, 5)
    elif ell == 3:
        factor, growth = 32, Fraction(416, 5)
    else:
        raise ValueError(f"only two or three layers are supported, got {ell}")
    h = 2 ** (m // 2)
    return (
        (1 + Fraction(1, 2**n))
        * (1 + Fraction(6, 5 * 2**m)) ** 2
        * (1 + factor * ((1 + growth / h) ** (n // m - 1) - 1))
    )


def theorem4_bound(ell: int, m: int, n: int) -> Bound:
    ratio = theorem4_ratio(ell, m, n)
    return Bound(float(ratio), float(ratio * haar_second_frame_potential(n)))


class CorollaryResult(NamedTuple):
    condition: float
    applicable: bool
    ratio: float | None
    value: float | None


def corollary1_bound(a: float, n: int, ell: int) -> CorollaryResult:
    """Bound for block width ``m = 2 a log2(n)``; ``applicable`` is False when its condition fails."""
    import math

    if n < 2:
        raise ValueError("n must be >= 2")
    if a <= 0:
        raise ValueError("a must be positive")
    const = {2: 143.0, 3: 2288.0}.get(ell)
    if const is None:
        raise ValueError(f"only two or three layers are supported, got {ell}")
    log_n = math.log2(n)
    condition = const / (a * n ** (a - 1) * log_n)
    if not condition < 1:
        return CorollaryResult(condition, False, None, None)
    tail = 2.0 ** -n if n < 1075 else 0.0
    ratio = (1 + tail) * (1 + 1.2 / n ** (2 * a)) ** 2 * (1 + condition)
    haar = 2.0 ** -(2 * n - 1) / (1 + tail) if n < 540 else 0.0
    return CorollaryResult(condition, True, ratio, ratio * haar)


# --- expansion structure of the three-layer chain -----------------------------


class ExpansionCheck(NamedTuple):
    m: int
    a_leading: tuple[int, ...]
    max_a_correction: float
    a_ok: bool
    b_leading: tuple[tuple[int, int], ...]
    max_b_correction: float
    b_ok: bool


def expansion_check(m: int, ell: int = 3) -> ExpansionCheck:
    """Split the symmetric-form chain into leading parts and bounded corrections.

    With ``a`` and ``B`` in the square-root-split form, checks exactly that
    ``2**m a = v0 + (1.2 / 2**(m/2)) v1`` with ``v0`` the indicator of the
    all-1 and all-2 pattern tuples and ``|v1| < 1``, and that
    ``2**(2m) B = D + (1.3 / 2**(m/2 - 6)) X`` with ``D`` the matching
    diagonal indicator and ``|X| < 1/64``. Positions are 1-based.
    """
    chain = moment_chain(ell, m)
    idx = index_set(ell)
    lead = {idx.index((1,) * ell), idx.index((2,) * ell)}
    h = 2 ** (m // 2)
    tol_a = Fraction(6, 5 * h)
    tol_b = Fraction(13, 10 * h)  # (1.3 / 2**(m/2-6)) * (1/64)

    a_ok = True
    worst_a = 0.0
    for pos, sq in enumerate(chain.symmetric_a_squared()):
        x2 = 4**m * sq
        if pos in lead:
            # real positive leading entries: |x - 1| < tol  <=>  (1-tol)^2 < x^2 < (1+tol)^2
            good = chain.edge[pos] > 0 and chain.weights[pos] > 0 and (1 - tol_a) ** 2 < x2 < (1 + tol_a) ** 2
            dev = abs(float(x2) ** 0.5 - 1)
        else:
            good = abs(x2) < tol_a**2
            dev = float(abs(x2)) ** 0.5
        a_ok &= bool(good)
        worst_a = max(worst_a, dev / float(tol_a))

    b_ok = True
    worst_b = 0.0
    for r, row in enumerate(chain.core):
        for c, val in enumerate(row):
            if r == c and r in lead:
                x = 4**m * chain.weights[r] * val
                good = abs(x - 1) < tol_b
                dev = float(abs(x - 1))
            else:
                x2 = 16**m * abs(chain.weights[r] * chain.weights[c]) * val * val
                good = x2 < tol_b**2
                dev = float(x2) ** 0.5
            b_ok &= bool(good)
            worst_b = max(worst_b, dev / float(tol_b) / 64)
    return ExpansionCheck(
        m,
        tuple(sorted(p + 1 for p in lead)),
        worst_a,
        a_ok,
        tuple(sorted((p + 1, p + 1) for p in lead)),
        worst_b,
        b_ok,
    )
