"""Monte-Carlo frame potentials and KL expressibility from fidelity samples."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import statevector as sv
from .ansatz import AnsatzSpec, build_template, prepare_state, sample_block_haar_state, sample_parameters

CHUNK = 4096

Mode = Literal["parameterized", "haar_block"]


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream ``index`` split off the master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _chunks(total: int):
    for i, start in enumerate(range(0, total, CHUNK)):
        yield i, min(CHUNK, total - start)


@dataclass(frozen=True)
class FidelitySample:
    values: np.ndarray
    source: AnsatzSpec | str
    seed: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if np.any((values < 0) | (values > 1)):
            raise ValueError("fidelities must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def source_label(self) -> str:
        return self.source if isinstance(self.source, str) else self.source.label


def sample_fidelities(
    spec: AnsatzSpec, pairs: int, mode: Mode = "parameterized", seed: int = 0
) -> FidelitySample:
    """Fidelities of ``pairs`` independent pairs of circuit outputs.

    Pairs are drawn in fixed-size chunks, each from its own stream split off
    ``seed``, so the values do not depend on how the work is scheduled.
    """
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    if mode not in ("parameterized", "haar_block"):
        raise ValueError(f"unknown sampling mode {mode!r}")
    template = build_template(spec) if mode == "parameterized" else None
    out = []
    for i, size in _chunks(pairs):
        rng = chunk_rng(seed, i)
        if template is not None:
            a = prepare_state(template, sample_parameters(template, rng, size))
            b = prepare_state(template, sample_parameters(template, rng, size))
        else:
            a = sample_block_haar_state(spec, rng, size)
            b = sample_block_haar_state(spec, rng, size)
        out.append(sv.fidelity(a, b))
    return FidelitySample(np.concatenate(out), spec, seed)


def sample_haar_fidelities(n: int, pairs: int, seed: int = 0) -> FidelitySample:
    """Fidelities between independent Haar-random ``n``-qubit states."""
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    out = []
    for i, size in _chunks(pairs):
        rng = chunk_rng(seed, i)
        a = sv.haar_random_state(n, rng, size)
        b = sv.haar_random_state(n, rng, size)
        out.append(sv.fidelity(a, b))
    return FidelitySample(np.concatenate(out), "Haar", seed)


@dataclass(frozen=True)
class FramePotentialEstimate:
    t: int
    mean: float
    standard_error: float
    count: int

    def to_dict(self) -> dict:
        return {"t": self.t, "mean": self.mean, "stderr": self.standard_error, "count": self.count}


def frame_potential(sample: FidelitySample, t: int) -> FramePotentialEstimate:
    """Sample mean of ``F**t`` with its standard error."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if len(sample) == 0:
        raise ValueError("empty fidelity sample")
    ft = sample.values ** t
    se = float(ft.std(ddof=1) / math.sqrt(ft.size)) if ft.size > 1 else 0.0
    return FramePotentialEstimate(t, float(ft.mean()), se, int(ft.size))


def haar_frame_potential(t: int, n: int) -> float:
    """Frame potential of Haar-random ``n``-qubit states for ``t`` in {1, 2}."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if t == 1:
        return 1.0 / 2**n
    if t == 2:
        return 1.0 / (2 ** (n - 1) * (2**n + 1))
    raise ValueError(f"no closed form implemented for t={t}")


def expressibility_deviation(estimate: FramePotentialEstimate, n: int) -> tuple[float, float]:
    """Estimated frame potential minus the Haar value, with its standard error.

    Can come out slightly negative from sampling noise.
    """
    if estimate.t not in (1, 2):
        raise ValueError(f"no Haar reference for t={estimate.t}")
    return estimate.mean - haar_frame_potential(estimate.t, n), estimate.standard_error


def haar_bin_masses(n: int, bins: int) -> np.ndarray:
    """Exact Haar fidelity mass of each equal-width bin on [0, 1].

    The fidelity density is ``(N-1)(1-F)**(N-2)``, so the mass of
    ``[l, r)`` is ``(1-l)**(N-1) - (1-r)**(N-1)``.
    """
    return np.exp(_log_haar_bin_masses(n, bins))


def _log_haar_bin_masses(n: int, bins: int) -> np.ndarray:
    # log-space so the upper bins of large N do not underflow to zero
    k = 2**n - 1
    edges = np.linspace(0.0, 1.0, bins + 1)
    lo, hi = 1.0 - edges[:-1], 1.0 - edges[1:]
    with np.errstate(divide="ignore"):
        ratio = np.where(hi > 0, np.exp(k * (np.log(hi) - np.log(lo))), 0.0)
        return k * np.log(lo) + np.log1p(-ratio)


@dataclass(frozen=True)
class ExprResult:
    kl: float
    bins: int
    sample_count: int
    counts: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"kl": self.kl, "bins": self.bins, "sample_count": self.sample_count}


def kl_expressibility(sample: FidelitySample, n: int, bins: int = 1000) -> ExprResult:
    """KL divergence of the binned fidelity histogram from the Haar bin masses."""
    if len(sample) == 0:
        raise ValueError("empty fidelity sample")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    counts, _ = np.histogram(sample.values, bins=bins, range=(0.0, 1.0))
    q = counts / counts.sum()
    logp = _log_haar_bin_masses(n, bins)
    occupied = counts > 0
    kl = float(np.sum(q[occupied] * (np.log(q[occupied]) - logp[occupied])))
    return ExprResult(max(kl, 0.0), bins, len(sample), counts)


def histogram_csv(result: ExprResult, n: int) -> str:
    """Rows ``bin_left, bin_right, count, haar_mass``."""
    if result.counts is None:
        raise ValueError("result carries no histogram")
    edges = np.linspace(0.0, 1.0, result.bins + 1)
    masses = haar_bin_masses(n, result.bins)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_left", "bin_right", "count", "haar_mass"])
    for left, right, c, p in zip(edges[:-1], edges[1:], result.counts, masses):
        w.writerow([repr(float(left)), repr(float(right)), int(c), repr(float(p))])
    return buf.getvalue()


def estimate_json(spec: AnsatzSpec | str, estimate: FramePotentialEstimate, seed: int) -> str:
    spec_field = spec if isinstance(spec, str) else spec.to_dict()
    payload = {"spec": spec_field, "seed": seed, **estimate.to_dict()}
    return json.dumps(payload, sort_keys=True)


def kl_trials(
    spec: AnsatzSpec,
    trials: int = 10,
    pairs: int = 200,
    bins: int = 1000,
    seed: int = 0,
    mode: Mode = "parameterized",
) -> np.ndarray:
    """KL expressibility of ``trials`` independent fidelity samples."""
    root = np.random.SeedSequence(seed)
    seeds = [int(c.generate_state(1)[0]) for c in root.spawn(trials)]
    return np.array(
        [kl_expressibility(sample_fidelities(spec, pairs, mode, s), spec.n, bins).kl for s in seeds]
    )
