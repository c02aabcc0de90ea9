"""Command-line entry point.

Subcommands mirror the harness: ``simulate`` dumps one trial, ``sweep`` and
``heatmap`` write the CSV schemas, ``verify-propositions``,
``verify-coupling`` and ``oracle-check`` emit machine-readable pass/fail
reports. Every config-file field can be overridden by a flag.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

import numpy as np

from .experiments import (CoefficientMode, ExperimentConfig, HorizonSpec,
                          SizeSpec, heatmap_mask, run_sweep, run_trial_detail,
                          verify_propositions, write_mask_csv, write_sweep_csv,
                          _parse_grid)
from .model import Cluster, ModelParams
from .oracle import check_block_decomposition, exact_de
from .randomization import Design, DesignSpec
from .verification import (Contrast, DominanceSpec, check_dominance,
                           check_marginal_validity)


def _parse_size(text: str) -> SizeSpec:
    text = text.strip().lower().replace(" ", "")
    if "pois" in text:
        shift, rest = text.split("+", 1)
        lam = rest[rest.index("(") + 1:rest.index(")")]
        return SizeSpec(kind="poisson_shifted", shift=int(shift), lam=float(lam))
    return SizeSpec(kind="fixed", n=int(text))


def _parse_horizon(text: str) -> HorizonSpec:
    text = text.strip().lower().replace(" ", "")
    if text.startswith("exp(") and text.endswith(")"):
        return HorizonSpec(kind="exponential", value=float(text[4:-1]))
    return HorizonSpec(kind="fixed", value=float(text))


def _parse_grid_arg(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        lo, hi, step = (float(v) for v in text.split(":"))
        return _parse_grid({"min": lo, "max": hi, "step": step})
    return _parse_grid([v for v in text.split(",") if v])


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--design", choices=[d.value for d in Design])
    parser.add_argument("--p", type=float, help="treatment probability / block fraction")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--eta-mean", type=float)
    parser.add_argument("--eta-sd", type=float)
    parser.add_argument("--xi-mean", type=float)
    parser.add_argument("--xi-sd", type=float)
    parser.add_argument("--cluster-size", type=_parse_size, dest="size_dist",
                        help="fixed size like '4' or '2+pois(2)'")
    parser.add_argument("--horizon", type=_parse_horizon, dest="horizon_dist",
                        help="fixed time like '10' or 'exp(10)'")
    parser.add_argument("--n-clusters", type=int)
    parser.add_argument("--n-replicates", type=int)
    parser.add_argument("--gammas", type=_parse_grid_arg,
                        help="comma list or min:max:step")
    parser.add_argument("--betas", type=_parse_grid_arg,
                        help="comma list or min:max:step")
    parser.add_argument("--coefficient-mode",
                        choices=[m.value for m in CoefficientMode])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--paper-scale", action="store_true",
                        help="use the production cluster/replicate counts")


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    config = (ExperimentConfig.from_json_file(args.config)
              if args.config else ExperimentConfig())
    updates = {}
    if args.design is not None or args.p is not None:
        updates["design"] = DesignSpec(
            kind=Design(args.design) if args.design else config.design.kind,
            p=args.p if args.p is not None else config.design.p)
    params_updates = {}
    if args.alpha is not None:
        params_updates["alpha"] = args.alpha
    if args.eta_mean is not None or args.eta_sd is not None:
        dist = config.params.eta_dist
        params_updates["eta_dist"] = dataclasses.replace(
            dist,
            mean=args.eta_mean if args.eta_mean is not None else dist.mean,
            sd=args.eta_sd if args.eta_sd is not None else dist.sd)
    if args.xi_mean is not None or args.xi_sd is not None:
        dist = config.params.xi_dist
        params_updates["xi_dist"] = dataclasses.replace(
            dist,
            mean=args.xi_mean if args.xi_mean is not None else dist.mean,
            sd=args.xi_sd if args.xi_sd is not None else dist.sd)
    if params_updates:
        updates["params"] = dataclasses.replace(config.params, **params_updates)
    for name in ("size_dist", "horizon_dist", "n_clusters", "n_replicates",
                 "gammas", "betas", "seed", "coefficient_mode"):
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = value
    if updates:
        config = dataclasses.replace(config, **updates)
    if args.paper_scale:
        config = config.paper_scale()
    return config


def _write_report(report: dict, out_path: str | None) -> None:
    text = json.dumps(report, indent=2, default=str)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_simulate(args) -> int:
    config = _build_config(args)
    detail = run_trial_detail(config, args.beta, args.gamma, args.replicate)
    _write_report(detail, args.out)
    return 0


def _cmd_sweep(args) -> int:
    config = _build_config(args)
    run_sweep(config, threads=args.threads, out_path=args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_heatmap(args) -> int:
    config = _build_config(args)
    if config.betas is None:
        config = dataclasses.replace(config, betas=config.gammas)
    result = run_sweep(config, threads=args.threads, out_path=args.out)
    mask = heatmap_mask(result)
    write_mask_csv(mask, args.mask_out)
    print(f"wrote {args.out} and {args.mask_out}")
    return 0


def _cmd_verify_propositions(args) -> int:
    config = _build_config(args)
    report = verify_propositions(config, threads=args.threads)
    _write_report(report, args.out)
    for check in report["checks"]:
        verdict = check.get("verdict", "no verdict")
        print(f"{check['design']:<9} gamma={check['gamma']:+.1f} "
              f"de_mean={check['de_mean']:+.5f} expected={check['expected']:<8} "
              f"{verdict}")
    if report["insufficient_replication"]:
        print("insufficient replication: no verdicts")
        return 1
    return 0 if report["all_pass"] else 1


def _verification_cluster(config: ExperimentConfig, n: int,
                          rng: np.random.Generator) -> Cluster:
    return Cluster(size=n,
                   eta=config.params.eta_dist.draw(n, rng),
                   xi=config.params.xi_dist.draw(n, rng),
                   treatment=np.zeros(n, dtype=np.int64),
                   horizon=(config.horizon_dist.value
                            if config.horizon_dist.kind == "fixed" else 10.0))


def _cmd_verify_coupling(args) -> int:
    config = _build_config(args)
    rng = np.random.default_rng(config.seed)
    n = args.cluster_n
    cluster = _verification_cluster(config, n, rng)
    checks = []
    for gamma in (-1.0, 0.0, 1.0):
        params = config.params.with_effects(beta=0.0, gamma=gamma)
        for contrast in (Contrast.CLUSTER_ALL_VS_NONE, Contrast.BLOCK_SWAP_PAIR):
            spec = (DominanceSpec(contrast=contrast, gamma=gamma)
                    if contrast is Contrast.CLUSTER_ALL_VS_NONE
                    else DominanceSpec(contrast=contrast, gamma=gamma, j=0, k=1))
            report = check_dominance(spec, params, cluster, args.dominance_samples, rng)
            checks.append({
                "check": "dominance", "contrast": contrast.value, "gamma": gamma,
                "n_samples": report.n_samples, "violations": report.violations,
                "strict_opportunities": report.strict_opportunities,
                "strict_failures": report.strict_failures,
                "pass": report.passed,
            })
    for gamma in (-1.0, 1.0):
        params = config.params.with_effects(beta=0.0, gamma=gamma)
        x1 = (rng.random(n) < 0.5).astype(np.int64)
        x0 = (rng.random(n) < 0.5).astype(np.int64)
        report = check_marginal_validity(params, cluster, x1, x0,
                                         args.marginal_samples, rng)
        checks.append({
            "check": "marginal_validity", "gamma": gamma,
            "x1": x1.tolist(), "x0": x0.tolist(),
            "n_samples": report.n_samples,
            "p_value_treated": report.arm_treated.p_value,
            "p_value_control": report.arm_control.p_value,
            "pass": report.passed(),
        })
    all_pass = all(c["pass"] for c in checks)
    _write_report({"checks": checks, "all_pass": all_pass}, args.out)
    for c in checks:
        print(f"{c['check']:<17} gamma={c['gamma']:+.1f} "
              f"{'PASS' if c['pass'] else 'FAIL'}")
    return 0 if all_pass else 1


def _cmd_oracle_check(args) -> int:
    config = _build_config(args)
    horizon = (config.horizon_dist.value
               if config.horizon_dist.kind == "fixed" else 10.0)
    alpha = config.params.alpha
    checks = []
    for kind in (Design.BERNOULLI, Design.BLOCK, Design.CLUSTER):
        design = DesignSpec(kind, config.design.p)
        for n in (2, 3, 4, 5):
            cluster = Cluster(size=n, eta=np.zeros(n), xi=np.zeros(n),
                              treatment=np.zeros(n, dtype=np.int64),
                              horizon=horizon)
            for gamma in (-1.0, 0.0, 1.0):
                params = ModelParams(alpha=alpha, beta=0.0, gamma=gamma)
                de = exact_de(params, cluster, design, horizon)
                if kind is Design.BERNOULLI or gamma == 0.0:
                    ok = bool(np.all(np.abs(de.per_individual) < 1e-10))
                    expected = "zero"
                else:
                    # block flips the sign of gamma; cluster preserves it
                    sign = 1.0 if ((kind is Design.BLOCK and gamma < 0.0)
                                   or (kind is Design.CLUSTER and gamma > 0.0)) else -1.0
                    ok = bool(np.all(sign * de.per_individual > 1e-10))
                    expected = "positive" if sign > 0 else "negative"
                checks.append({"check": "de_sign", "design": kind.value, "n": n,
                               "gamma": gamma, "de_mean": de.cluster_mean,
                               "expected": expected, "pass": ok})
    rng = np.random.default_rng(config.seed)
    for n, m in ((3, 1), (4, 2), (5, 2)):
        cluster = Cluster(size=n, eta=rng.normal(0, 0.1, n),
                          xi=rng.normal(0, 0.1, n),
                          treatment=np.zeros(n, dtype=np.int64), horizon=horizon)
        params = ModelParams(alpha=alpha, beta=0.0,
                             gamma=float(rng.uniform(-2, 2)))
        residual = check_block_decomposition(params, cluster, m, 0, horizon)
        checks.append({"check": "block_decomposition", "n": n, "m": m,
                       "residual": residual, "pass": bool(residual < 1e-10)})
    for n in range(2, 21):
        for m in range(1, n):
            if m * math.comb(n - 1, m) != (n - m) * math.comb(n - 1, m - 1):
                checks.append({"check": "binomial_identity", "n": n, "m": m,
                               "pass": False})
    all_pass = all(c["pass"] for c in checks)
    _write_report({"checks": checks, "all_pass": all_pass}, args.out)
    print(f"{sum(c['pass'] for c in checks)}/{len(checks)} oracle checks passed")
    return 0 if all_pass else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epitrial",
        description="Simulate randomized trials with contagious outcomes and "
                    "study direct-effect estimators.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one trial and dump outcomes")
    _add_config_flags(p)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a gamma sweep and write CSV")
    _add_config_flags(p)
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("heatmap", help="run a (beta, gamma) grid and write CSVs")
    _add_config_flags(p)
    p.add_argument("--out", default="heatmap.csv")
    p.add_argument("--mask-out", default="heatmap_mask.csv")
    p.set_defaults(func=_cmd_heatmap)

    p = sub.add_parser("verify-propositions",
                       help="check the three designs' DE signs at beta=0")
    _add_config_flags(p)
    p.add_argument("--out", help="JSON report path (default stdout)")
    p.set_defaults(func=_cmd_verify_propositions)

    p = sub.add_parser("verify-coupling",
                       help="coupling marginal-validity and dominance checks")
    _add_config_flags(p)
    p.add_argument("--cluster-n", type=int, default=3)
    p.add_argument("--marginal-samples", type=int, default=20000)
    p.add_argument("--dominance-samples", type=int, default=5000)
    p.add_argument("--out", help="JSON report path (default stdout)")
    p.set_defaults(func=_cmd_verify_coupling)

    p = sub.add_parser("oracle-check",
                       help="exact small-cluster sign and identity checks")
    _add_config_flags(p)
    p.add_argument("--out", help="JSON report path (default stdout)")
    p.set_defaults(func=_cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
