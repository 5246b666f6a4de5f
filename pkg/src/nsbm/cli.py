"""Command-line pipeline: simulate -> fit -> summarize -> eval.

Exit codes: 0 on success, 2 on usage or input errors, 1 on internal errors.
The seed is taken from --seed, then the config file (simulate), then the
NSBM_SEED environment variable, then 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import io
from .metrics import mean_xi_nmi, nmi, summarize_min_vi
from .model import Hyper
from .numerics import derive_seed
from .samplers import SAMPLERS, ChainOptions, run_chain
from .simgen import SimConfig, gen_collection, personality_benchmark

__all__ = ["main"]


class UsageError(Exception):
    pass


@dataclass
class RunRecord:
    """Provenance of one fit invocation."""

    run_id: str
    sampler: str
    hyper: Hyper
    seed: int
    elapsed_ms: float
    samples_path: str
    trace_path: str | None


def _resolve_seed(arg_seed, config_seed=None) -> int:
    if arg_seed is not None:
        return int(arg_seed)
    if config_seed is not None:
        return int(config_seed)
    env = os.environ.get("NSBM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as e:
            raise UsageError(f"NSBM_SEED is not an integer: {env!r}") from e
    return 0


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e}") from e


def cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    seed = _resolve_seed(args.seed, cfg.get("seed"))
    try:
        if cfg.get("benchmark") == "personality":
            out = personality_benchmark(
                J_per_school=int(cfg.get("J_per_school", 40)),
                n_range=tuple(cfg.get("n_range", (20, 100))),
                seed=seed,
            )
        else:
            sim = SimConfig(
                J=cfg["J"],
                n=cfg["n"],
                K=cfg["K"],
                L=cfg["L"],
                gamma=float(cfg.get("gamma", 0.0)),
                lam=float(cfg.get("lambda", cfg.get("lam", 10.0))),
                tau=float(cfg.get("tau", 0.0)),
                seed=seed,
                even_z=bool(cfg.get("even_z", True)),
            )
            out = gen_collection(sim)
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"bad simulation config: {e}") from e
    io.write_collection(args.out, out.collection)
    print(f"wrote {out.collection.J} networks to {args.out}")
    return 0


def _read_data(path, fmt):
    try:
        if fmt == "edgelist":
            return io.read_edgelist_dir(path)
        return io.read_collection(path)
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read data: {e}") from e


def _fit_one(payload):
    data = io.read_collection(payload["data"]) if payload["fmt"] == "ndjson" else io.read_edgelist_dir(payload["data"])
    h = Hyper(**payload["hyper"])
    opts = ChainOptions(**payload["opts"])
    return run_chain(payload["sampler"], data, h, opts)


def cmd_fit(args) -> int:
    sampler = args.sampler.lower()
    if sampler not in SAMPLERS:
        raise UsageError(f"invalid sampler {args.sampler!r}; choose from {', '.join(SAMPLERS)}")
    data = _read_data(args.data, args.format)
    if data.J == 0:
        raise UsageError("data file contains no networks")
    seed = _resolve_seed(args.seed)
    K = args.K if args.K is not None else max(1, min(data.J, 20))
    try:
        hyper = Hyper(K=K, L=args.L, alpha=args.alpha, beta=args.beta, w0=args.w0, pi0=args.pi0)
        base_opts = dict(
            iterations=args.iters,
            burnin=args.burnin,
            thin=args.thin,
            init=args.init,
        )
        ChainOptions(seed=seed, **base_opts)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if args.replicates < 1 or args.parallel < 1:
        raise UsageError("replicates and parallel must be >= 1")

    seeds = [seed] if args.replicates == 1 else [derive_seed(seed, r) for r in range(args.replicates)]
    payloads = [
        {
            "data": args.data,
            "fmt": args.format,
            "sampler": sampler,
            "hyper": {"K": hyper.K, "L": hyper.L, "alpha": hyper.alpha, "beta": hyper.beta, "w0": hyper.w0, "pi0": hyper.pi0},
            "opts": dict(seed=s, **base_opts),
        }
        for s in seeds
    ]
    if len(payloads) == 1 or args.parallel == 1:
        results = [_fit_one(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            results = list(pool.map(_fit_one, payloads))

    single = args.replicates == 1
    for r, samples in enumerate(results):
        io.write_samples(args.out, samples, replicate=None if single else r)
        if args.trace:
            io.write_trace(args.trace, samples, replicate=None if single else r)
    for r, samples in enumerate(results):
        rec = RunRecord(
            run_id=f"{sampler}-seed{seeds[r]}",
            sampler=sampler,
            hyper=hyper,
            seed=seeds[r],
            elapsed_ms=samples.trace[-1].elapsed_ms if samples.trace else 0.0,
            samples_path=args.out,
            trace_path=args.trace,
        )
        print(f"run {rec.run_id}: {samples.n_draws} draws -> {args.out}")
    return 0


def cmd_summarize(args) -> int:
    try:
        samples = io.read_samples(args.samples)
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read samples: {e}") from e
    if samples.n_draws == 0:
        raise UsageError("samples file contains no draws")
    z_hat = summarize_min_vi(samples, "z")
    J = len(samples.xi_draws[0])
    xi_hat = [summarize_min_vi(samples, ("xi", j)) for j in range(J)]
    run_id = os.path.splitext(os.path.basename(args.samples))[0]
    io.write_labels(args.out, run_id, z_hat, xi_hat)
    print(f"wrote point estimates for {J} networks to {args.out}")
    return 0


def cmd_eval(args) -> int:
    try:
        run_id, z_hat, xi_hat = io.read_labels(args.labels)
        truth = io.read_collection(args.truth)
    except (OSError, ValueError) as e:
        raise UsageError(f"cannot read inputs: {e}") from e
    if truth.z_true is None or truth.xi_true is None:
        raise UsageError("truth file is missing z_true/xi_true labels")
    if len(z_hat) != truth.J or len(xi_hat) != truth.J:
        raise UsageError(f"labels cover {len(z_hat)} networks but truth has {truth.J}")
    for j, (x, A) in enumerate(zip(xi_hat, truth.networks)):
        if len(x) != A.n:
            raise UsageError(f"network {j}: labels have {len(x)} nodes but truth has {A.n}")
    z_score = nmi(z_hat, truth.z_true)
    xi_score = mean_xi_nmi(xi_hat, truth.xi_true)
    io.write_metrics_csv(args.out, [(run_id or os.path.splitext(os.path.basename(args.labels))[0], z_score, xi_score)])
    print(f"z_nmi={z_score:.4f} mean_xi_nmi={xi_score:.4f} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsbm", description="Nested stochastic block model pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="generate a synthetic network collection")
    ps.add_argument("--config", required=True, help="JSON generator config")
    ps.add_argument("--out", required=True, help="output NDJSON network file")
    ps.add_argument("--seed", type=int, default=None)
    ps.set_defaults(func=cmd_simulate)

    pf = sub.add_parser("fit", help="run a sampler on a network collection")
    pf.add_argument("--data", required=True, help="NDJSON network file (or edge-list directory)")
    pf.add_argument("--format", choices=("ndjson", "edgelist"), default="ndjson")
    pf.add_argument("--sampler", required=True, help="one of g, cg, bg, ibg")
    pf.add_argument("--iters", type=int, default=1000)
    pf.add_argument("--burnin", type=int, default=500)
    pf.add_argument("--thin", type=int, default=5)
    pf.add_argument("-K", type=int, default=None, help="class truncation (default min(J, 20))")
    pf.add_argument("-L", type=int, default=20, help="community truncation")
    pf.add_argument("--alpha", type=float, default=1.0)
    pf.add_argument("--beta", type=float, default=1.0)
    pf.add_argument("--w0", type=float, default=1.0)
    pf.add_argument("--pi0", type=float, default=1.0)
    pf.add_argument("--init", choices=("dpsbm-warm", "random"), default="dpsbm-warm")
    pf.add_argument("--seed", type=int, default=None)
    pf.add_argument("--out", required=True, help="output NDJSON samples file")
    pf.add_argument("--trace", default=None, help="output CSV trace file")
    pf.add_argument("--replicates", type=int, default=1)
    pf.add_argument("--parallel", type=int, default=1)
    pf.set_defaults(func=cmd_fit)

    pm = sub.add_parser("summarize", help="point estimates minimizing posterior expected VI")
    pm.add_argument("--samples", required=True)
    pm.add_argument("--out", required=True, help="output JSON labels file")
    pm.set_defaults(func=cmd_summarize)

    pe = sub.add_parser("eval", help="score estimated labels against truth")
    pe.add_argument("--labels", required=True, help="labels JSON from summarize")
    pe.add_argument("--truth", required=True, help="NDJSON network file carrying truth labels")
    pe.add_argument("--out", required=True, help="output metrics CSV")
    pe.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
