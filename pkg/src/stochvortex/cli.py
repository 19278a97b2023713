"""Command-line interface.

Exit codes: 0 pass, 1 check failure, 2 usage or configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import acceptance
from .ensemble import ConfigError, EnsembleSummary, ExperimentConfig, compare_autocovariance, run_ensemble
from .galerkin import NumericalFailure
from .wick import SymmetricKernelSpec, exact_r_mean, exact_r_second_moment, exact_second_moment

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _wave(text: str) -> tuple:
    a, b = (int(v) for v in text.split(","))
    return a, b


def _add_experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, required=True, help="master seed (required)")
    p.add_argument("--config", help="JSON experiment file; flags override its fields")
    p.add_argument("--experiment")
    p.add_argument("--vortex-count", type=int)
    p.add_argument("--noise-cutoff", type=int)
    p.add_argument("--galerkin-cutoff", type=int)
    p.add_argument("--kernel-cutoff", type=int)
    p.add_argument("--grid-resolution", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--sample-times", type=_floats, help="comma separated")
    p.add_argument("--lags", type=_floats, help="comma separated")
    p.add_argument("--ensemble-size", type=int)
    p.add_argument("--observables", help="comma separated, e.g. 'w[1,0],sobolev'")
    p.add_argument("--scheme", choices=("euler", "heun"))
    p.add_argument("--output", help="path prefix for <prefix>.json and <prefix>.csv")
    p.add_argument("--workers", type=int, default=1)


def _experiment_config(args, system: str) -> ExperimentConfig:
    d = ExperimentConfig.load(args.config).to_dict() if args.config else {}
    d["system"] = system
    d["master_seed"] = args.seed
    for key in ("experiment", "vortex_count", "noise_cutoff", "galerkin_cutoff",
                "kernel_cutoff", "grid_resolution", "dt", "t_final", "sample_times",
                "lags", "ensemble_size", "scheme", "output"):
        v = getattr(args, key)
        if v is not None:
            d[key] = list(v) if isinstance(v, tuple) else v
    if args.observables:
        d["observables"] = [o for o in _split_observables(args.observables)]
    return ExperimentConfig.from_dict(d)


def _split_observables(text: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in text:
        depth += ch == "["
        depth -= ch == "]"
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        out.append(cur.strip())
    return out


def _emit(summary: EnsembleSummary, cfg: ExperimentConfig) -> None:
    if not cfg.output:
        print(summary.to_json())
        return
    os.makedirs(os.path.dirname(cfg.output) or ".", exist_ok=True)
    summary.write(cfg.output + ".json")
    with open(cfg.output + ".csv", "w") as fh:
        fh.write(f"# config_hash={summary.config_hash} master_seed={summary.master_seed}\n")
        fh.write("t,name,value\n")
        for t, name, v in summary.timeseries_rows():
            fh.write(f"{t!r},{name},{v!r}\n")
    print(f"wrote {cfg.output}.json and {cfg.output}.csv "
          f"(runs {summary.count}/{summary.ensemble_size}, "
          f"degenerate {summary.degenerate_count}, failed {len(summary.failed_runs)})")


def cmd_ensemble(args, system: str) -> int:
    cfg = _experiment_config(args, system)
    summary = run_ensemble(cfg, workers=args.workers)
    _emit(summary, cfg)
    if summary.count == 0:
        print("every run failed", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_identities(args) -> int:
    res = acceptance.run_all([1, 2, 3], log=print)
    return EXIT_OK if all(r.passed for r in res) else EXIT_FAIL


def cmd_moments(args) -> int:
    out = {}
    if args.kind == "quadratic":
        f = SymmetricKernelSpec.outer(args.l) if args.l else SymmetricKernelSpec.constant()
        out["kernel"] = "e_l(x) e_l(y)" if args.l else "1"
        out["second_moment"] = exact_second_moment(f, args.vortices)
    else:
        l, m = args.l or (1, 0), args.m or args.l or (1, 0)
        res = exact_r_second_moment(l, m, args.cutoff, args.vortices,
                                    max_cutoff=args.max_cutoff)
        out.update(l=list(l), m=list(m), cutoff=args.cutoff, second_moment=res.value,
                   mean=exact_r_mean(l, m, args.cutoff), route=res.method,
                   terms={k: float(v) for k, v in res.terms.items()})
    out["vortices"] = args.vortices
    print(json.dumps(out, indent=1, sort_keys=True))
    return EXIT_OK


def cmd_compare(args) -> int:
    with open(args.a) as fa, open(args.b) as fb:
        a = EnsembleSummary.from_json(fa.read())
        b = EnsembleSummary.from_json(fb.read())
    rep = compare_autocovariance(a, b, args.lags, args.observable, args.n_se, args.abs_tol)
    print(f"observable {rep.observable}: pass if |diff| <= {rep.n_se:g} SE"
          + (f" or |diff| < {rep.abs_tol:g}" if rep.abs_tol is not None else ""))
    for line in rep.lines():
        print("  " + line)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_accept(args) -> int:
    numbers = [int(v) for v in args.only.split(",")] if args.only else None
    res = acceptance.run_all(numbers, scale=args.scale, log=print)
    passed = sum(r.passed for r in res)
    print(f"{passed}/{len(res)} criteria passed")
    return EXIT_OK if passed == len(res) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stochvortex",
                                description="Stochastic point vortices with transport noise.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("identities", help="exact algebraic and kernel checks")
    for name, system in (("simulate", "particle"), ("galerkin", "galerkin")):
        sp = sub.add_parser(name, help=f"run a {system} ensemble")
        _add_experiment_flags(sp)
        sp.set_defaults(system=system)
    mp = sub.add_parser("moments", help="exact Gaussian-moment oracle values")
    mp.add_argument("kind", choices=("quadratic", "r"))
    mp.add_argument("--l", type=_wave)
    mp.add_argument("--m", type=_wave)
    mp.add_argument("--cutoff", type=int, default=4)
    mp.add_argument("--vortices", type=int, default=4)
    mp.add_argument("--max-cutoff", type=int, default=16)
    cp = sub.add_parser("compare", help="compare autocovariances of two summaries")
    cp.add_argument("a")
    cp.add_argument("b")
    cp.add_argument("--lags", type=_floats)
    cp.add_argument("--observable")
    cp.add_argument("--n-se", type=float, default=3.0)
    cp.add_argument("--abs-tol", type=float)
    ap = sub.add_parser("accept", help="run the acceptance suite")
    ap.add_argument("--only", help="comma separated criterion numbers")
    ap.add_argument("--scale", type=float, default=1.0,
                    help="Monte Carlo size factor (1 = full sizes)")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("simulate", "galerkin"):
            return cmd_ensemble(args, args.system)
        return {"identities": cmd_identities, "moments": cmd_moments,
                "compare": cmd_compare, "accept": cmd_accept}[args.command](args)
    except (ConfigError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
