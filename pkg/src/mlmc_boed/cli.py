"""Command-line front end.

Three subcommands drive the library:

* ``decay``     -- per-level mean-square diagnostics and the fitted decay
  exponent beta_hat (CSV + summary JSON).
* ``optimize``  -- projected stochastic gradient ascent on the expected
  information gain, tracing iterates, realized cost and periodic EIG
  evaluations (CSV + summary JSON).
* ``eig``       -- a single EIG evaluation at a fixed design (JSON).

Configuration lives in one JSON document (``--config PATH``); individual
flags override single fields.  All outputs are UTF-8 with '.' decimals and
are byte-identical for a fixed seed regardless of ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, default_config
from .decay import decay_study
from .eig import eig_nested, eig_unbiased_mlmc
from .errors import (
    ConfigurationError,
    ContractViolationError,
    DomainError,
    NumericalDomainError,
)
from .gradient import standard_gradient, unbiased_gradient
from .optim import optimize
from .rng import PHASE_EIG, PHASE_OPTIMIZE, chunk_sizes

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _fmt(x) -> str:
    """Full-precision, locale-independent decimal rendering."""
    return repr(float(x))


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlmc-boed",
        description="Gradient-based Bayesian experimental design via "
        "debiased multilevel Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("decay", "estimate per-level correction mean squares and beta_hat"),
        ("optimize", "run stochastic gradient ascent on the EIG"),
        ("eig", "evaluate the EIG at a fixed design"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON config document")
        p.add_argument("--seed", type=int, help="64-bit master seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: MLMC_BOED_THREADS or CPU count)")
        p.add_argument("--out", type=Path, default=Path("."),
                       help="output directory for CSV/JSON artifacts")
        p.add_argument("--problem", choices=("testcase", "pk"))
        p.add_argument("--estimator", choices=("stdmc", "mlmc", "mlmc-naive"))
        p.add_argument("--tau", type=float)
        p.add_argument("--m0", type=int)
        p.add_argument("--w0", type=float)
        p.add_argument("--inner-m", type=int, dest="inner_m")
        p.add_argument("--proposal", choices=("prior", "laplace"))
        p.add_argument("--optimizer", choices=("rm", "amsgrad"))
        p.add_argument("--lr", type=float,
                       help="step-size constant (RM c, or AMSGrad alpha)")
        p.add_argument("--n-outer", type=int, dest="n_outer")
        p.add_argument("--iters", type=int, dest="max_iters")
        p.add_argument("--eig-every", type=int, dest="eig_every")
        p.add_argument("--levels", type=int)
        p.add_argument("--samples-per-level", type=int, dest="samples_per_level")
        p.add_argument("--xi0", type=_parse_floats,
                       help="initial design, comma-separated")
    return parser


def resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("MLMC_BOED_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def load_config(args) -> RunConfig:
    if args.config is not None:
        cfg = RunConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
        if args.problem is not None and args.problem != cfg.problem:
            cfg = default_config(args.problem).with_overrides(seed=cfg.seed)
    else:
        cfg = default_config(args.problem or "testcase")
    overrides = {
        name: getattr(args, name)
        for name in (
            "estimator", "tau", "m0", "w0", "inner_m", "proposal", "optimizer",
            "n_outer", "max_iters", "seed", "eig_every", "levels",
            "samples_per_level", "xi0",
        )
    }
    if args.lr is not None:
        key = "rm_c" if (overrides.get("optimizer") or cfg.optimizer) == "rm" \
            else "amsgrad_alpha"
        overrides[key] = args.lr
    return cfg.with_overrides(**overrides)


def _eig_at(cfg: RunConfig, model, design, threads: int, base_index: int = 0):
    factory = cfg.make_proposal_factory()
    if cfg.estimator == "stdmc":
        return eig_nested(
            model, design, cfg.eig_n_outer, cfg.inner_m, factory, cfg.seed,
            threads=threads, base_index=base_index,
        )
    return eig_unbiased_mlmc(
        model, design, cfg.eig_n_outer, cfg.make_weights(), factory, cfg.seed,
        threads=threads, base_index=base_index,
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_decay(cfg: RunConfig, out_dir: Path, threads: int) -> dict:
    model = cfg.make_model()
    design = cfg.make_design()
    report = decay_study(
        model, design, cfg.levels, cfg.samples_per_level, cfg.make_weights(),
        cfg.make_proposal_factory(), cfg.seed,
        antithetic=(cfg.estimator != "mlmc-naive"),
    )
    csv_path = out_dir / "decay.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["level", "mean_sq_psi", "mean_sq_delta", "n"])
        for row in report.rows:
            writer.writerow(
                [row.level, _fmt(row.mean_sq_psi), _fmt(row.mean_sq_delta), row.n_samples]
            )
    summary = {
        "beta_hat": report.beta_hat,
        "fit_range": list(report.fit_range),
        "reliable": report.reliable,
        "levels": cfg.levels,
        "samples_per_level": cfg.samples_per_level,
        "csv": csv_path.name,
    }
    (out_dir / "decay.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"beta_hat = {report.beta_hat:.4f} "
          f"(fit over levels {report.fit_range[0]}..{report.fit_range[1]}"
          f"{'' if report.reliable else ', UNRELIABLE: too few samples'})")
    print(json.dumps(summary, sort_keys=True))
    return summary


def cmd_optimize(cfg: RunConfig, out_dir: Path, threads: int) -> dict:
    model = cfg.make_model()
    base = cfg.make_design()
    box = cfg.make_box()
    weights = cfg.make_weights() if cfg.estimator != "stdmc" else None
    factory = cfg.make_proposal_factory()
    chunks_per_iter = len(chunk_sizes(cfg.n_outer))

    def gradient_fn(t: int, values: np.ndarray):
        design = base.replace(values)
        if cfg.estimator == "stdmc":
            est = standard_gradient(
                model, design, cfg.n_outer, cfg.inner_m, factory, cfg.seed,
                threads=threads, phase=PHASE_OPTIMIZE,
                base_index=t * chunks_per_iter,
            )
        else:
            est = unbiased_gradient(
                model, design, cfg.n_outer, weights, factory, cfg.seed,
                threads=threads, phase=PHASE_OPTIMIZE,
                base_index=t * chunks_per_iter,
                antithetic=(cfg.estimator == "mlmc"),
            )
        return est.grad, est.total_cost

    trace = optimize(
        base.values, box, gradient_fn, cfg.max_iters,
        optimizer=cfg.optimizer,
        rm_c=cfg.rm_c,
        amsgrad_alpha=cfg.amsgrad_alpha,
        amsgrad_beta1=cfg.amsgrad_beta1,
        amsgrad_beta2=cfg.amsgrad_beta2,
        polyak=cfg.polyak,
    )

    # Periodic EIG evaluations on the Polyak/raw iterate, on disjoint
    # sub-streams indexed by evaluation order.
    eig_chunks = len(chunk_sizes(cfg.eig_n_outer))
    eig_values: dict[int, float] = {}
    eval_points = sorted(
        {row.t for row in trace if row.t % cfg.eig_every == 0} | {trace[-1].t}
    )
    for k, t in enumerate(eval_points):
        design_t = base.replace(trace[t].polyak)
        est = _eig_at(cfg, model, design_t, threads, base_index=k * eig_chunks)
        eig_values[t] = est.value

    d = base.dim
    csv_path = out_dir / "trace.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = (["t", "cost_cumulative"]
                  + [f"design_{j + 1}" for j in range(d)]
                  + [f"polyak_{j + 1}" for j in range(d)]
                  + ["grad_norm", "eig_periodic"])
        writer.writerow(header)
        for row in trace:
            eig_cell = _fmt(eig_values[row.t]) if row.t in eig_values else ""
            writer.writerow(
                [row.t, row.cost_cumulative]
                + [_fmt(v) for v in row.design]
                + [_fmt(v) for v in row.polyak]
                + [_fmt(row.grad_norm) if np.isfinite(row.grad_norm) else "", eig_cell]
            )

    final = trace[-1]
    summary = {
        "final_design": [float(v) for v in final.design],
        "polyak_average": [float(v) for v in final.polyak],
        "total_cost": final.cost_cumulative,
        "iterations": cfg.max_iters,
        "final_eig": eig_values[final.t],
        "csv": csv_path.name,
    }
    (out_dir / "optimize.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(json.dumps(summary, sort_keys=True))
    return summary


def cmd_eig(cfg: RunConfig, out_dir: Path, threads: int) -> dict:
    model = cfg.make_model()
    design = cfg.make_design()
    est = _eig_at(cfg.with_overrides(eig_n_outer=cfg.n_outer), model, design, threads)
    summary = {
        "design": [float(v) for v in design.values],
        "eig": est.value,
        "std_error": est.std_error,
        "n_outer": est.n_outer,
        "total_inner_cost": est.total_inner_cost,
    }
    (out_dir / "eig.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(json.dumps(summary, sort_keys=True))
    return summary


# ---------------------------------------------------------------------------
# entry point

_CATEGORY = {
    ConfigurationError: "configuration",
    ContractViolationError: "contract",
    NumericalDomainError: "numerical",
    DomainError: "domain",
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = resolve_threads(args)
        cfg = load_config(args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(json.dumps({"error": "configuration", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_CONFIG

    handler = {"decay": cmd_decay, "optimize": cmd_optimize, "eig": cmd_eig}[args.command]
    try:
        handler(cfg, out_dir, threads)
    except Exception as exc:
        category = "internal"
        for klass, name in _CATEGORY.items():
            if isinstance(exc, klass):
                category = name
                break
        print(json.dumps({"error": category, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_CONFIG if category == "configuration" else EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
