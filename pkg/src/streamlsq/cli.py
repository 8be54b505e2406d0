"""Command-line front end.

Subcommands:
  simulate      generate a configured signal and its sample stream
  reconstruct   estimate packet coefficients from a sample CSV
  analyze       lag tables and conditioning for a config, or the
                random-sampling Monte Carlo study
  experiment    run a stock end-to-end reproduction (level-crossing or
                delay-doppler)

Configs are JSON trees (see ``streamlsq.experiment``); ``--seed``,
``--lmax`` and ``--out-dir`` override the corresponding config entries.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, experiment, stream_solver
from .basis import basis_from_config, synthesize
from .errors import StreamlsqError
from .measurement import SampleStream, assemble_point, batch_index, batch_stream


def _load_config(args, default_factory=None) -> experiment.ExperimentConfig:
    if args.config is not None:
        cfg = experiment.ExperimentConfig.from_file(args.config)
    elif default_factory is not None:
        cfg = default_factory()
    else:
        raise SystemExit("a --config file is required for this command")
    return cfg.with_overrides(
        seed=args.seed,
        l_max=args.lmax if args.lmax is not None else "unset",
        out_dir=getattr(args, "out_dir", None),
    )


def _add_common(parser):
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument(
        "--lmax",
        type=lambda v: None if v.lower() == "none" else int(v),
        default=None,
        help="backward sweep depth (integer or 'none' for unlimited)",
    )
    parser.add_argument("--out-dir", type=Path, default=Path("run"), help="output directory")


def cmd_experiment(args) -> int:
    factories = {
        "level-crossing": experiment.level_crossing_config,
        "delay-doppler": experiment.delay_doppler_config,
    }
    cfg = _load_config(args, factories[args.name])
    result = experiment.run_experiment(cfg, out_dir=args.out_dir)
    print(f"{cfg.name}: seed={cfg.seed} samples={len(result.stream)} rmse={result.rmse:.6f}")
    if result.lag is not None:
        print(result.lag.pretty())
    print(f"artifacts in {args.out_dir}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    signal = experiment._build_signal(cfg)
    stream = experiment._sample(cfg, signal)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(cfg.to_json(), encoding="utf-8")
    stream.to_csv(out / "samples.csv")
    spacing = cfg.output["nyquist_spacing"]
    lo, hi = cfg.sampling["window"]
    grid = lo + spacing * np.arange(int(round((hi - lo) / spacing)) + 1)
    values = signal(grid)
    SampleStream(grid, values).to_csv(out / "signal.csv")
    print(f"wrote {len(stream)} samples to {out / 'samples.csv'}")
    return 0


def cmd_reconstruct(args) -> int:
    cfg = _load_config(args)
    basis = basis_from_config(cfg.basis)
    stream = SampleStream.from_csv(args.samples)
    if len(stream) == 0:
        raise SystemExit("sample file is empty")
    # A leading empty batch gives signal energy from before the first sample
    # a boundary packet to land on.
    k_first = int(batch_index(stream.times[:1], basis.eta)[0]) - 1
    batches = [
        assemble_point(b, basis)
        for b in batch_stream(stream, basis.eta, k_first=k_first)
    ]
    state, alphas = experiment.solve_batches(batches, cfg.solver, basis.n_funcs)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    first = state.k_first
    stream_solver.write_converged_csv(
        {first + i: alphas[i] for i in range(alphas.shape[0])}, out / "coefficients.csv"
    )
    state.history.to_csv(out / "estimates.csv")
    spacing = cfg.output.get("nyquist_spacing", 1.0 / 64.0)
    lo = stream.times[0]
    hi = stream.times[-1]
    grid = lo + spacing * np.arange(int(np.floor((hi - lo) / spacing)) + 1)
    x_hat = synthesize(basis, {first + i: alphas[i] for i in range(alphas.shape[0])}, grid)
    SampleStream(grid, x_hat).to_csv(out / "reconstruction.csv")
    print(f"estimated {alphas.shape[0]} packets from {len(stream)} samples; artifacts in {out}")
    return 0


def cmd_analyze(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.monte_carlo:
        basis = basis_from_config(
            experiment.ExperimentConfig.from_file(args.config).basis
            if args.config
            else {"family": "lot", "n": args.n, "eta": 0.25}
        )
        m_grid = [float(v) for v in args.m_grid.split(",")]
        result = analysis.sampling_monte_carlo(
            basis,
            m_grid,
            trials=args.trials,
            delta_target=args.delta_target,
            seed=args.seed if args.seed is not None else 0,
        )
        result.to_csv(out / "monte_carlo.csv")
        print(
            f"monte carlo (N={basis.n_funcs}): smallest M with "
            f"delta<={args.delta_target}: {result.m_required}"
        )
        return 0

    cfg = _load_config(args)
    result = experiment.run_experiment(cfg, out_dir=out)
    print(result.report)
    if result.lag is not None:
        print(result.lag.pretty())
        print(f"lag fit slope: {result.lag.fit_slope():.2f} decades per lag")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamlsq",
        description="Streaming least-squares signal reconstruction from local measurements",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_exp = sub.add_parser("experiment", help="run a stock end-to-end experiment")
    p_exp.add_argument("name", choices=["level-crossing", "delay-doppler"])
    _add_common(p_exp)
    p_exp.set_defaults(func=cmd_experiment)

    p_sim = sub.add_parser("simulate", help="generate a signal and its samples")
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_rec = sub.add_parser("reconstruct", help="estimate coefficients from a sample CSV")
    p_rec.add_argument("--samples", type=Path, required=True, help="input t,y CSV")
    _add_common(p_rec)
    p_rec.set_defaults(func=cmd_reconstruct)

    p_ana = sub.add_parser("analyze", help="lag/conditioning analysis or Monte Carlo study")
    _add_common(p_ana)
    p_ana.add_argument("--monte-carlo", action="store_true", help="run the sampling study")
    p_ana.add_argument("--n", type=int, default=16, help="basis depth for Monte Carlo")
    p_ana.add_argument("--m-grid", type=str, default="64,128,256,512", help="sampling rates")
    p_ana.add_argument("--trials", type=int, default=50)
    p_ana.add_argument("--delta-target", type=float, default=0.2)
    p_ana.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StreamlsqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
