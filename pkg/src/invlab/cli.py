"""Command line interface: invert / bench / plot / selfcheck.

Exit codes: 0 success, 1 partial failures (benchmark rows or failed checks),
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiment, inverter, kernels, plots
from .experiment import ExperimentConfig, default_config
from .inverter import InversionConfig
from .predictor import Condition


def _load_config(args) -> ExperimentConfig:
    if args.config:
        return ExperimentConfig.from_json(args.config)
    return default_config()


def _method_from_args(args) -> InversionConfig:
    if args.method in inverter.PRESETS and args.eta is None and args.window is None:
        cfg = inverter.PRESETS[args.method]
    else:
        method = args.method
        kwargs = {}
        if method in inverter.PRESETS:
            preset = inverter.PRESETS[method]
            method = preset.method
            kwargs = {"eta": preset.eta, "window": preset.window, "label": preset.label}
        if args.eta is not None:
            kwargs["eta"] = args.eta
        if args.window is not None:
            kwargs["window"] = tuple(args.window)
        if args.inner_iters is not None:
            kwargs["inner_iters"] = args.inner_iters
        elif method == "fixed_point":
            kwargs["inner_iters"] = 3
        elif method == "renoise":
            kwargs["inner_iters"] = 2
        cfg = InversionConfig(method, **kwargs)
    if args.steps is not None:
        cfg = InversionConfig.from_dict({**cfg.to_dict(), "steps": args.steps})
    return cfg


def _single_run(args):
    cfg = _load_config(args)
    method = _method_from_args(args)
    sched = cfg.schedule.build(method.steps)
    z0 = experiment.gen_dataset(cfg.gmm, args.seed + 1, cfg.seed, cfg.grid)[args.seed]
    predictor = experiment.make_predictor(cfg, sched)
    y = Condition(cfg.condition) if cfg.condition else None
    traj = inverter.invert(sched, predictor, z0, method, y)
    return cfg, sched, z0, traj


def cmd_invert(args) -> int:
    cfg, sched, z0, traj = _single_run(args)
    out = Path(args.out)
    traj.to_csv(out)
    if args.dump:
        traj.save_npz(args.dump)
    print(f"inverted seed {args.seed} with {args.method}: T={sched.T}, "
          f"evals={traj.predictor_evals}, wall={traj.wall_seconds() * 1e3:.2f} ms -> {out}")
    return 0


def cmd_plot(args) -> int:
    cfg, sched, z0, traj = _single_run(args)
    plots.plot_trajectory(traj, z0, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    if args.out:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "out_dir": args.out})
    if args.seeds:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "n_seeds": args.seeds})
    report = experiment.run_benchmark(cfg, workers=args.workers)
    agg = report.aggregate()
    print(f"kernel backend: {kernels.active_backend()}")
    print(f"{'method':<16} {'runs':>5} {'mse':>12} {'psnr_db':>9} {'ssim':>8} "
          f"{'evals':>7} {'wall_ms':>9}")
    for method, stats in agg.items():
        print(f"{method:<16} {stats['runs']:>5} {stats['mse_mean']:>12.3e} "
              f"{stats['psnr_db_mean']:>9.3f} {stats['ssim_mean']:>8.4f} "
              f"{stats['evals_mean']:>7.0f} {stats['wall_ms_mean']:>9.3f}")
    claim = experiment.parity_claim(report)
    if claim is not None:
        status = "holds" if claim["holds"] else "VIOLATED"
        print(f"easyinv-vs-{claim['baseline']} mse claim {status}: "
              f"best {claim['best_easyinv']} ratio {claim['ratio']:.4f}")
    failures = report.failures()
    if failures:
        print(f"{len(failures)} failed rows (see summary.json)", file=sys.stderr)
        return 1
    return 0


def cmd_selfcheck(args) -> int:
    result = experiment.selfcheck()
    text = json.dumps(result, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0 if result["passed"] else 1


def _add_method_flags(sub):
    sub.add_argument("--method", default="vanilla",
                     help="vanilla | fixed_point | renoise | easyinv | preset name "
                          f"({', '.join(inverter.PRESETS)})")
    sub.add_argument("--eta", type=float, default=None)
    sub.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"), default=None)
    sub.add_argument("--inner-iters", type=int, default=None,
                     help="refinement calls per step (defaults: fixed_point 3, renoise 2)")
    sub.add_argument("--steps", type=int, default=None)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--config", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invlab",
                                     description="deterministic diffusion inversion lab")
    commands = parser.add_subparsers(dest="command", required=True)

    inv = commands.add_parser("invert", help="run one inversion, write the trajectory CSV")
    _add_method_flags(inv)
    inv.add_argument("--out", default="trajectory.csv")
    inv.add_argument("--dump", default=None, help="also write a binary .npz replay dump")
    inv.set_defaults(fn=cmd_invert)

    plot = commands.add_parser("plot", help="run one inversion, write an SVG plot")
    _add_method_flags(plot)
    plot.add_argument("--out", default="trajectory.svg")
    plot.set_defaults(fn=cmd_plot)

    bench = commands.add_parser("bench", help="run the method-matrix benchmark")
    bench.add_argument("--config", default=None)
    bench.add_argument("--out", default=None, help="output directory for CSV/JSON reports")
    bench.add_argument("--seeds", type=int, default=None, help="override n_seeds")
    bench.add_argument("--workers", type=int, default=1)
    bench.set_defaults(fn=cmd_bench)

    check = commands.add_parser("selfcheck", help="run the invariant suites")
    check.add_argument("--out", default=None, help="write the JSON report here too")
    check.set_defaults(fn=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
