"""Command-line front end: ``pqcexpr <command> ...``.

Every command writes ``<name>.json`` (config, seed, summary) and
``<name>.csv`` (bulk rows) into ``--out``. The CSV starts with one
``# config: {...}`` comment line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import moments, sampling, vqe
from .ansatz import AnsatzSpec

# (family, n, layers, m, block depth, parameter count)
TABLE1_ROWS = [
    ("TEN", 4, 2, 2, 2, 16),
    ("TEN", 4, 3, 2, 2, 24),
    ("ALT", 4, 2, 2, 2, 16),
    ("ALT", 4, 3, 2, 2, 24),
    ("HEA", 4, 4, None, None, 16),
    ("TEN", 6, 2, 2, 2, 24),
    ("TEN", 6, 3, 2, 2, 36),
    ("ALT", 6, 2, 2, 2, 24),
    ("ALT", 6, 3, 2, 2, 36),
    ("HEA", 6, 6, None, None, 36),
    ("TEN", 8, 2, 2, 2, 32),
    ("TEN", 8, 2, 4, 4, 64),
    ("TEN", 8, 3, 2, 2, 48),
    ("TEN", 8, 3, 4, 4, 96),
    ("ALT", 8, 2, 2, 2, 32),
    ("ALT", 8, 2, 4, 4, 64),
    ("ALT", 8, 3, 2, 2, 48),
    ("ALT", 8, 3, 4, 4, 96),
    ("HEA", 8, 8, None, None, 64),
]

FIG2_M = (2, 4, 10)
FIG2_BLOCKS = tuple(range(1, 11))
FIG2_ELL = (2, 3)

SECTION4_SPECS = (
    AnsatzSpec("TEN", 4, 3, 2, 2),
    AnsatzSpec("ALT", 4, 3, 2, 2),
    AnsatzSpec("HEA", 4, 4),
)
PRESETS = ("table1", "fig2-grid", "section4")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    specs: list[AnsatzSpec] = field(default_factory=list)
    grid: list[tuple[int, int, int]] = field(default_factory=list)  # (ell, m, n)
    pairs: int = 200
    trials: int = 10
    iterations: int = 2000
    bins: int = 1000
    learning_rate: float = 0.001
    seed: int | None = None
    mode: str = "parameterized"
    corollary_a: float | None = None
    thresholds: tuple[int, ...] = vqe.THRESHOLDS
    input: str | None = None
    preset: str | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["specs"] = [s.to_dict() for s in self.specs]
        d["grid"] = [list(g) for g in self.grid]
        d["thresholds"] = list(self.thresholds)
        return d


def table1_specs() -> list[AnsatzSpec]:
    return [AnsatzSpec(f, n, l, m, d) for f, n, l, m, d, _ in TABLE1_ROWS]


def fig2_grid() -> list[tuple[int, int, int]]:
    return [(ell, m, m * k) for ell in FIG2_ELL for m in FIG2_M for k in FIG2_BLOCKS]


def preset(name: str, command: str | None = None) -> ExperimentConfig:
    """Fully resolved configuration of a named experiment."""
    if name == "table1":
        return ExperimentConfig(command or "expressibility kl", specs=table1_specs(), pairs=200, trials=10, bins=1000, preset=name)
    if name == "fig2-grid":
        return ExperimentConfig(command or "frame-potential analytic", grid=fig2_grid(), preset=name)
    if name == "section4":
        return ExperimentConfig(
            command or "vqe run", specs=list(SECTION4_SPECS), trials=100, iterations=2000, learning_rate=0.001, preset=name
        )
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


# --- output -------------------------------------------------------------------


def _write(out: Path, name: str, config: ExperimentConfig, summary: dict, rows: list[dict] | None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    payload = {"config": config.to_dict(), "seed": config.seed, "result": summary}
    (out / f"{name}.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if rows:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(config.to_dict(), sort_keys=True) + "\n")
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        (out / f"{name}.csv").write_text(buf.getvalue())


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# --- commands -------------------------------------------------------------------


def _analytic_rows(config: ExperimentConfig) -> list[dict]:
    rows = []
    for ell, m, n in config.grid:
        haar = moments.haar_second_frame_potential(n)
        alt = moments.alt_second_frame_potential(ell, m, n, exact=True)
        ten = moments.ten_second_frame_potential(m, n, exact=True)
        rows.append(
            {
                "ell": ell,
                "m": m,
                "n": n,
                "value": repr(float(alt)),
                "ratio_to_haar": repr(float(alt / haar)),
                "bound": repr(float(moments.theorem4_ratio(ell, m, n))),
                "ten_value": repr(float(ten)),
                "ten_ratio_to_haar": repr(float(ten / haar)),
            }
        )
    return rows


def cmd_frame_potential_analytic(config: ExperimentConfig) -> tuple[dict, list[dict]]:
    rows = _analytic_rows(config)
    return {"rows": len(rows)}, rows


def cmd_frame_potential_sample(config: ExperimentConfig) -> tuple[dict, list[dict]]:
    rows = []
    for spec in config.specs:
        sample = sampling.sample_fidelities(spec, config.pairs, config.mode, config.seed)
        for t in (1, 2):
            est = sampling.frame_potential(sample, t)
            haar = sampling.haar_frame_potential(t, spec.n)
            rows.append(
                {
                    "ansatz": spec.label,
                    "t": t,
                    "mean": repr(est.mean),
                    "stderr": repr(est.standard_error),
                    "count": est.count,
                    "haar": repr(haar),
                    "ratio_to_haar": repr(est.mean / haar),
                }
            )
    return {"rows": len(rows)}, rows


def cmd_expressibility(config: ExperimentConfig) -> tuple[dict, list[dict]]:
    rows, summary = [], {}
    for spec in config.specs:
        kl = sampling.kl_trials(spec, config.trials, config.pairs, config.bins, config.seed, config.mode)
        summary[spec.label] = {"mean": float(kl.mean()), "std": float(kl.std(ddof=1)) if kl.size > 1 else 0.0}
        rows += [{"ansatz": spec.label, "trial": i, "kl": repr(float(v))} for i, v in enumerate(kl)]
    return summary, rows


def cmd_bounds(config: ExperimentConfig) -> tuple[dict, list[dict]]:
    rows = []
    for ell, m, n in config.grid:
        exact = moments.alt_second_frame_potential(ell, m, n, exact=True)
        ratio = moments.theorem4_ratio(ell, m, n)
        haar = moments.haar_second_frame_potential(n)
        rows.append(
            {
                "ell": ell,
                "m": m,
                "n": n,
                "exact_ratio": repr(float(exact / haar)),
                "bound_ratio": repr(float(ratio)),
                "bound_holds": bool(ratio * haar >= exact),
            }
        )
    summary: dict = {"all_hold": all(r["bound_holds"] for r in rows)}
    if config.corollary_a is not None:
        cor = {}
        for ell in sorted({g[0] for g in config.grid}) or [2, 3]:
            for n in sorted({g[2] for g in config.grid}):
                if n < 2:
                    continue
                res = moments.corollary1_bound(config.corollary_a, n, ell)
                cor[f"ell={ell},n={n}"] = res._asdict()
        summary["corollary"] = cor
    return summary, rows


def cmd_vqe(config: ExperimentConfig) -> tuple[dict, list[dict]]:
    rows, summary = [], {}
    seeds = vqe.trial_seeds(config.seed, config.trials)
    for spec in config.specs:
        h = vqe.build_heisenberg_ring(spec.n)
        records = vqe.run_trials(spec, h, config.iterations, seeds, config.learning_rate)
        profile = vqe.gradient_profile(records, config.thresholds)
        summary[spec.label] = vqe.summary(records, profile)
        for i, r in enumerate(records):
            for t, (e, g) in enumerate(zip(r.energies, r.gradient_norms)):
                rows.append({"ansatz": spec.label, "trial": i, "iteration": t, "energy": repr(float(e)), "grad_norm": repr(float(g))})
    return summary, rows


def profile_from_rows(rows: list[dict], thresholds=vqe.THRESHOLDS) -> dict:
    """Gradient profiles per ansatz from trajectory rows of ``vqe run``."""
    grouped: dict[str, dict[int, list[tuple[int, float, float]]]] = {}
    for r in rows:
        grouped.setdefault(r.get("ansatz", "?"), {}).setdefault(int(r["trial"]), []).append(
            (int(r["iteration"]), float(r["energy"]), float(r["grad_norm"]))
        )
    out = {}
    for label, trials in grouped.items():
        records = []
        for i, pts in sorted(trials.items()):
            pts.sort()
            e = np.array([p[1] for p in pts])
            g = np.array([p[2] for p in pts])
            records.append(vqe.VqeTrialRecord(None, i, e, g, np.empty(0), np.empty(0)))
        out[label] = vqe.gradient_profile(records, thresholds).rows()
    return out


def cmd_gradient_profile(config: ExperimentConfig) -> tuple[dict, list[dict]]:
    if not config.input:
        raise ConfigError("gradient-profile needs --input with a trajectory CSV from 'vqe run'")
    profiles = profile_from_rows(read_csv(config.input), config.thresholds)
    rows = [{"ansatz": label, **row} for label, prof in profiles.items() for row in prof]
    return profiles, rows


COMMANDS = {
    "frame-potential analytic": ("frame_potential_analytic", cmd_frame_potential_analytic),
    "frame-potential sample": ("frame_potential_sample", cmd_frame_potential_sample),
    "expressibility kl": ("expressibility_kl", cmd_expressibility),
    "bounds": ("bounds", cmd_bounds),
    "vqe run": ("vqe_run", cmd_vqe),
    "gradient-profile": ("gradient_profile", cmd_gradient_profile),
}


def run(config: ExperimentConfig, out: str | Path) -> dict:
    """Execute a config and write its files; returns the JSON summary."""
    if config.command not in COMMANDS:
        raise ConfigError(f"unknown command {config.command!r}")
    if config.seed is None:
        config = replace(config, seed=int(np.random.SeedSequence().generate_state(1)[0]))
    _validate(config)
    name, fn = COMMANDS[config.command]
    summary, rows = fn(config)
    _write(Path(out), name, config, summary, rows)
    return summary


def _validate(config: ExperimentConfig) -> None:
    needs_specs = config.command in ("frame-potential sample", "expressibility kl", "vqe run")
    needs_grid = config.command in ("frame-potential analytic", "bounds")
    if needs_specs and not config.specs:
        raise ConfigError(f"{config.command} needs --ansatz/--n (or a preset)")
    if needs_grid and not config.grid:
        raise ConfigError(f"{config.command} needs --ell/--m/--n (or --preset fig2-grid)")
    for ell, m, n in config.grid:
        if ell not in (2, 3):
            raise ConfigError(f"--ell must be 2 or 3, got {ell}")
        if m < 2 or m % 2 or n % m:
            raise ConfigError(f"need even m >= 2 dividing n, got m={m}, n={n}")
    for name in ("pairs", "trials", "iterations", "bins"):
        if getattr(config, name) < 1:
            raise ConfigError(f"--{name} must be positive")
    if config.mode not in ("parameterized", "haar_block"):
        raise ConfigError(f"unknown sampling mode {config.mode!r}")


# --- argument parsing ---------------------------------------------------------------


def _common(p: argparse.ArgumentParser, **defaults) -> None:
    p.add_argument("--preset")
    p.add_argument("--ansatz", choices=("TEN", "ALT", "HEA"), type=str.upper)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--ell", type=int)
    p.add_argument("--block-depth", type=int)
    p.add_argument("--pairs", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="results")
    p.set_defaults(**defaults)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pqcexpr", description="Expressibility and VQE experiments for layered circuits.")
    sub = parser.add_subparsers(dest="group", required=True)

    fp = sub.add_parser("frame-potential", help="second frame potentials")
    fp_sub = fp.add_subparsers(dest="kind", required=True)
    a = fp_sub.add_parser("analytic", help="exact values for 2-design blocks")
    _common(a, command="frame-potential analytic")
    s = fp_sub.add_parser("sample", help="Monte-Carlo estimates")
    _common(s, command="frame-potential sample")
    s.add_argument("--mode", choices=("parameterized", "haar-block"), default="parameterized")

    ex = sub.add_parser("expressibility", help="KL expressibility")
    ex_sub = ex.add_subparsers(dest="kind", required=True)
    kl = ex_sub.add_parser("kl")
    _common(kl, command="expressibility kl")
    kl.add_argument("--mode", choices=("parameterized", "haar-block"), default="parameterized")

    b = sub.add_parser("bounds", help="upper bounds against exact values")
    _common(b, command="bounds")
    b.add_argument("--corollary-a", type=float)

    v = sub.add_parser("vqe", help="VQE on the Heisenberg ring")
    v_sub = v.add_subparsers(dest="kind", required=True)
    r = v_sub.add_parser("run")
    _common(r, command="vqe run")
    r.add_argument("--learning-rate", type=float)

    g = sub.add_parser("gradient-profile", help="gradient norm at first passage, from a vqe run CSV")
    _common(g, command="gradient-profile")
    g.add_argument("--input", required=True)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    config = preset(args.preset, args.command) if args.preset else ExperimentConfig(args.command)
    if args.ansatz:
        if args.n is None:
            raise ConfigError("--ansatz needs --n")
        layers = args.ell if args.ell is not None else (args.n if args.ansatz == "HEA" else 3)
        m = None if args.ansatz == "HEA" else (args.m if args.m is not None else 2)
        config.specs = [AnsatzSpec(args.ansatz, args.n, layers, m, args.block_depth)]
    if config.command in ("frame-potential analytic", "bounds") and not args.preset:
        if None in (args.ell, args.m, args.n):
            raise ConfigError(f"{config.command} needs --ell, --m and --n (or --preset fig2-grid)")
        config.grid = [(args.ell, args.m, args.n)]
    for name in ("pairs", "trials", "iterations", "bins", "seed"):
        value = getattr(args, name)
        if value is not None:
            setattr(config, name, value)
    if getattr(args, "mode", None):
        config.mode = args.mode.replace("-", "_")
    if getattr(args, "learning_rate", None) is not None:
        config.learning_rate = args.learning_rate
    if getattr(args, "corollary_a", None) is not None:
        config.corollary_a = args.corollary_a
    if getattr(args, "input", None):
        config.input = args.input
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        summary = run(config, args.out)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
