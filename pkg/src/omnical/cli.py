"""Command-line entry point.

Subcommands run the pipelines over seeded synthetic streams and emit one
JSON report per trial plus a CSV summary row; `gen` exports streams, `eval`
recomputes metrics from a saved trace, `verify` runs the counterexample and
oracle property suites, `rates` runs the horizon-doubling study, and `bench`
times the numba kernels against the pure-numpy fallback.

Exit codes: 0 success, 1 contract violation (a suite failed or a solver
missed its certificate), 2 bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import accel, counterexamples as cx, omni
from .core import Rng, SolverConvergenceError, build_simplex_net
from .datagen import Stream, StreamSpec, generate, read_csv, write_csv
from .metrics import MetricsReport
from .oracles import (BinaryOracleInput, binary_mixture_payoff, binary_cmloo,
                      calibration_adjoint, exact_game_value, mixture_payoff_at_vertices,
                      multiaccuracy_adjoint, multiclass_mloo, solve_matrix_game)

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"unreadable config file {path}: {exc}") from exc


def _resolve(args, file_cfg: dict, key: str, default):
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    if key in file_cfg:
        return file_cfg[key]
    return default


def _trial_seeds(seed: int, trials: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(trials)]


def _run_trial(task) -> dict:
    kind, cfg_kwargs, stream_kind, trial_id, trial_seed, trace_path, families = task
    cfg = omni.PipelineConfig(**{**cfg_kwargs, "seed": trial_seed})
    T = cfg.horizon()
    if kind == "binary-online":
        spec = StreamSpec(kind=stream_kind, d=cfg.d, k=2, T=T, seed=trial_seed)
        stream = generate(spec)
        result = omni.fit_online_binary(stream, cfg)
        report = result.report
        if trace_path:
            omni.write_trace(trace_path, "binary", cfg, stream.X[:T], stream.labels[:T],
                             result.preds, result.pred_idx, result.state)
    elif kind == "multiclass-online":
        spec = StreamSpec(kind=stream_kind, d=cfg.d, k=cfg.k, T=T, seed=trial_seed)
        stream = generate(spec)
        fam_objs = [omni.FAMILY_REGISTRY[name](cfg.d) for name in families]
        result = omni.fit_union(stream, cfg, fam_objs) if len(families) > 1 else \
            omni.fit_online_multiclass(stream, cfg)
        report = result.report
        if trace_path:
            omni.write_trace(trace_path, "multiclass", cfg, stream.X[:T], stream.labels[:T],
                             result.preds, result.pred_idx, result.state)
    elif kind == "binary-stat":
        spec = StreamSpec(kind=stream_kind, d=cfg.d, k=2, T=2 * T, seed=trial_seed)
        stream = generate(spec)
        train = Stream(X=stream.X[:T], labels=stream.labels[:T], truth=stream.truth)
        held = Stream(X=stream.X[T:], labels=stream.labels[T:], truth=stream.truth)
        pred = omni.fit_statistical_binary(train, cfg)
        report = omni.evaluate_binary_predictor(pred, held, cfg)
    elif kind == "multiclass-stat":
        spec = StreamSpec(kind=stream_kind, d=cfg.d, k=cfg.k, T=2 * T, seed=trial_seed)
        stream = generate(spec)
        train = Stream(X=stream.X[:T], labels=stream.labels[:T], truth=stream.truth)
        held = Stream(X=stream.X[T:], labels=stream.labels[T:], truth=stream.truth)
        pred = omni.fit_statistical_multiclass(train, cfg)
        report = omni.evaluate_multiclass_predictor(pred, held, cfg)
    else:
        raise ConfigError(f"unknown pipeline kind {kind}")
    report.timestamp = _utc_now()
    return {"trial_id": trial_id, "report": report.to_dict()}


def _write_outputs(results: list[dict], out_dir: Path, label: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    gap_names = sorted(results[0]["report"]["gaps"].keys())
    csv_path = out_dir / f"{label}.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial_id", "seed", "k", "eps", "T", "calibration",
                         "multiaccuracy"] + [f"gap_{g}" for g in gap_names]
                        + ["wallclock_ms"])
        for res in results:
            rep = res["report"]
            writer.writerow([res["trial_id"], rep["seed"], rep["k"], rep["eps"], rep["T"],
                             repr(rep["calibration"]), repr(rep["multiaccuracy"])]
                            + [repr(rep["gaps"][g]) for g in gap_names]
                            + [repr(rep["wallclock_ms"])])
    for res in results:
        path = out_dir / f"{label}-trial{res['trial_id']}.json"
        with open(path, "w") as fh:
            json.dump(res["report"], fh, sort_keys=True, indent=1)
    print(f"wrote {csv_path} and {len(results)} report(s) to {out_dir}")


def _cmd_run(args, kind: str) -> int:
    file_cfg = _load_config_file(args.config)
    k = int(_resolve(args, file_cfg, "k", 2 if kind.startswith("binary") else 3))
    stream_default = "logistic-binary" if kind.startswith("binary") else "softmax-linear"
    cfg_kwargs = {
        "k": k,
        "d": int(_resolve(args, file_cfg, "d", 5)),
        "eps": float(_resolve(args, file_cfg, "eps", 0.1 if k == 2 else 0.25)),
        "T": _resolve(args, file_cfg, "T", None),
        "delta": float(_resolve(args, file_cfg, "delta", 0.01)),
        "seed": 0,
        "erm_iters": int(_resolve(args, file_cfg, "erm_iters", 200)),
    }
    if cfg_kwargs["T"] is not None:
        cfg_kwargs["T"] = int(cfg_kwargs["T"])
    stream_kind = _resolve(args, file_cfg, "stream-kind", stream_default)
    seed = int(_resolve(args, file_cfg, "seed", 0))
    trials = int(_resolve(args, file_cfg, "trials", 1))
    workers = int(_resolve(args, file_cfg, "workers", 1))
    families = [f.strip() for f in _resolve(args, file_cfg, "families", "linear").split(",")]
    for fam in families:
        if fam not in omni.FAMILY_REGISTRY:
            raise ConfigError(f"unknown comparator family {fam!r}")
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    out_dir = Path(args.out_dir)
    tasks = []
    for trial_id, trial_seed in enumerate(_trial_seeds(seed, trials)):
        trace = args.trace if (args.trace and trials == 1) else (
            str(out_dir / f"{kind}-trial{trial_id}.trace.jsonl") if args.trace else None)
        tasks.append((kind, cfg_kwargs, stream_kind, trial_id, trial_seed, trace, families))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_trial, tasks))
    else:
        results = [_run_trial(t) for t in tasks]
    _write_outputs(results, out_dir, kind)
    return EXIT_OK


def _cmd_gen(args) -> int:
    q = np.array([float(v) for v in args.q.split(",")]) if args.q else None
    spec = StreamSpec(kind=args.kind, d=args.d, k=args.k, T=args.T, seed=args.seed, q=q)
    stream = generate(spec)
    write_csv(stream, args.out)
    print(f"wrote {args.T} examples to {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    report = omni.report_from_trace(args.trace)
    report.timestamp = _utc_now()
    out = args.out or (args.trace + ".report.json")
    with open(out, "w") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=1)
    print(f"recomputed metrics -> {out}")
    print(f"calibration={report.calibration:.6f} multiaccuracy={report.multiaccuracy:.6f} "
          f"max_gap={report.max_gap():.6f}")
    return EXIT_OK


def _check(name: str, ok: bool, detail: str, failures: list) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if not ok:
        failures.append(name)


def _cmd_verify(args) -> int:
    failures: list[str] = []
    rng = Rng(20240 if not args.full else 20241)

    rep = cx.demo_mloo_impossibility(100, rng=rng)
    sums_ok = True
    for s in range(100):
        r = cx.demo_mloo_impossibility(50, rng=rng)
        sums_ok = sums_ok and r.sum_is_one and r.max_at_least_half
    _check("impossibility", rep.sum_is_one and rep.max_at_least_half and sums_ok,
           f"sum=1 within 1e-12 on {100} random sequences, max >= 1/2", failures)

    iso = cx.verify_isotonic_counterexample()
    _check("isotonic", iso.passed,
           f"matrix err {iso.margin_matrix:.2e} <= 1e-6, |log_t - 3/7| = {iso.margin_t:.3e} > 1e-3",
           failures)

    n_oracle = 10_000 if args.full else 2_000
    eps = 0.05
    net = build_simplex_net(2, eps)
    grid = np.sort(net.points[:, 1])
    gen = rng.generator
    worst = -np.inf
    for _ in range(n_oracle):
        q = gen.uniform()
        u = gen.dirichlet(np.ones(grid.shape[0]))
        inp = BinaryOracleInput(q=q, r=1.0 - q, u=u, d=gen.uniform(-1, 1))
        a = binary_cmloo(inp, grid)
        worst = max(worst, binary_mixture_payoff(a, grid, inp, 0.0),
                    binary_mixture_payoff(a, grid, inp, 1.0))
    _check("binary-oracle", worst <= eps + 1e-12,
           f"worst f(a,b) = {worst:.6f} <= {eps} over {n_oracle} random inputs", failures)

    n_mloo = 1000 if args.full else 150
    worst_margin = -np.inf
    for k, eps_k in ((2, 0.05), (3, 0.25), (4, 0.8)):
        net_k = build_simplex_net(k, eps_k)
        adjoints = [calibration_adjoint, multiaccuracy_adjoint(len(net_k))]
        for _ in range(n_mloo // 3):
            w1 = gen.uniform()
            u1 = gen.uniform(-1, 1, size=(len(net_k), k))
            u2 = gen.uniform(-1, 1, size=k)
            res = multiclass_mloo([w1, 1 - w1], [u1, u2], adjoints, net_k, R=1.0)
            payoffs = mixture_payoff_at_vertices(res.a, [w1, 1 - w1], [u1, u2], adjoints, net_k)
            worst_margin = max(worst_margin, float(payoffs.max()) - (net_k.eps + res.gap))
    _check("multiclass-mloo", worst_margin <= 1e-9,
           f"worst payoff minus (eps + certificate gap) = {worst_margin:.3e} <= 0", failures)

    n_games = 100 if args.full else 20
    worst_err = 0.0
    for _ in range(n_games):
        k = int(gen.integers(2, 5))
        n = int(gen.integers(2, 51))
        M = gen.uniform(-1, 1, size=(k, n))
        sol = solve_matrix_game(M, eps=0.01)
        exact, _ = exact_game_value(M)
        worst_err = max(worst_err, abs(sol.value - exact))
    _check("game-solver", worst_err <= 0.01 + 1e-9,
           f"max |value - exact| = {worst_err:.6f} <= 0.01 over {n_games} matrices", failures)

    if failures:
        print(f"FAILED: {', '.join(failures)}")
        return EXIT_CONTRACT
    print("all verification suites passed")
    return EXIT_OK


def _cmd_rates(args) -> int:
    ratios = []
    rows = []
    for s, trial_seed in enumerate(_trial_seeds(args.seed, args.seeds)):
        cals = {}
        for T in (args.T, 2 * args.T):
            cfg = omni.PipelineConfig(k=2, d=args.d, eps=args.eps, T=T, seed=trial_seed)
            stream = generate(StreamSpec(kind="logistic-binary", d=args.d, k=2, T=T,
                                         seed=trial_seed))
            result = omni.fit_online_binary(stream, cfg)
            cals[T] = result.report.calibration
        ratio = cals[2 * args.T] / max(cals[args.T], 1e-300)
        ratios.append(ratio)
        rows.append({"seed": trial_seed, "cal_T": cals[args.T],
                     "cal_2T": cals[2 * args.T], "ratio": ratio})
        print(f"seed {trial_seed}: cal(T)={cals[args.T]:.5f} "
              f"cal(2T)={cals[2 * args.T]:.5f} ratio={ratio:.3f}")
    med = float(np.median(ratios))
    print(f"median ratio over {args.seeds} seeds: {med:.3f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"T": args.T, "eps": args.eps, "median_ratio": med, "rows": rows},
                      fh, indent=1, sort_keys=True)
    return EXIT_OK


def _cmd_bench(args) -> int:
    from .bench import run_benchmarks

    run_benchmarks(repeats=args.repeats, out=args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omnical",
                                     description="approachability-based omniprediction")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run(name: str):
        p = sub.add_parser(name)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--d", type=int, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--T", type=int, default=None)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--erm-iters", type=int, default=None, dest="erm_iters")
        p.add_argument("--stream-kind", default=None, dest="stream_kind")
        p.add_argument("--families", default=None)
        p.add_argument("--config", default=None, help="JSON config file; flags override")
        p.add_argument("--out-dir", default="runs", dest="out_dir")
        p.add_argument("--trace", default=None, help="write a JSONL round trace")
        return p

    add_run("run-binary-online")
    add_run("run-binary-stat")
    add_run("run-multiclass-online")
    add_run("run-multiclass-stat")
    add_run("run-union")

    p = sub.add_parser("gen")
    p.add_argument("--kind", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q", default=None, help="comma-separated label law for fixed-marginal")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", default=None)

    p = sub.add_parser("verify")
    p.add_argument("--full", action="store_true", help="acceptance-scale suite sizes")

    p = sub.add_parser("rates")
    p.add_argument("--T", type=int, default=10_000)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("bench")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out", default=None)
    return parser


_RUN_KINDS = {
    "run-binary-online": "binary-online",
    "run-binary-stat": "binary-stat",
    "run-multiclass-online": "multiclass-online",
    "run-multiclass-stat": "multiclass-stat",
    "run-union": "multiclass-online",
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in _RUN_KINDS:
            if args.command == "run-union" and not args.families:
                args.families = "linear,square"
            return _cmd_run(args, _RUN_KINDS[args.command])
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "rates":
            return _cmd_rates(args)
        if args.command == "bench":
            return _cmd_bench(args)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverConvergenceError as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
