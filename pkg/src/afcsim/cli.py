"""Command-line entry point.

Three subcommands:

* simulate: run one episode plus its matched baseline (feedforward off)
  and noise-floor runs, writing trace, spectra, attenuation report,
  feedforward coefficient snapshots and a reproducibility manifest.
* compare: run the inverse-based and swapped update laws on identical
  seeds, report attenuation side by side and per-update timing.
* spectrum: project any column of a trace CSV onto harmonic bins.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import attenuation_report, harmonic_spectrum
from .config import apply_overrides, config_to_dict, load_config
from .feedforward import FeedforwardState, NumeratorEvaluator, ResponseSmoother
from .presets import preset, preset_names
from .regressors import HarmonicSet, parse_index_spec, regressor_table
from .servo_sim import (
    ConfigError,
    LoopConfig,
    SimulationDivergence,
    SimulationTrace,
    disturbance_only,
    run_episode,
    without_feedforward,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

OUT_ROOT_ENV = "AFCSIM_OUT_ROOT"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_run_input(args) -> tuple[LoopConfig, dict, str]:
    """Resolve --preset/--config plus overrides into a config and options."""
    options = {"trace_decimation": args.trace_decimation, "margin": args.margin}
    if args.preset is not None and args.config is not None:
        raise ConfigError("give either --preset or --config, not both")
    if args.preset is not None:
        try:
            cfg = preset(args.preset)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        name = args.preset
    elif args.config is not None:
        path = Path(args.config)
        cfg = load_config(path)
        name = path.stem
        if path.suffix.lower() == ".json":
            data = json.loads(path.read_text())
            if isinstance(data, dict) and "options" in data:
                stored = data["options"]
                if args.trace_decimation is None:
                    options["trace_decimation"] = stored.get("trace_decimation")
                if args.margin is None:
                    options["margin"] = stored.get("margin")
    else:
        raise ConfigError("one of --preset or --config is required")
    if options["trace_decimation"] is None:
        options["trace_decimation"] = 1
    if options["margin"] is None:
        options["margin"] = 2.0
    if options["trace_decimation"] < 1:
        raise ConfigError("trace decimation must be >= 1")
    cfg = apply_overrides(
        cfg,
        seed=args.seed_override,
        revolutions=args.revolutions_override,
        variant=args.variant,
    )
    return cfg, options, name


def _out_dir(args, run_name: str) -> Path:
    if args.out is not None:
        out = Path(args.out)
    else:
        root = os.environ.get(OUT_ROOT_ENV, "afcsim_runs")
        out = Path(root) / run_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _terminal_spectra(cfg: LoopConfig, traces: dict[str, SimulationTrace]):
    indices = cfg.targeted_indices()
    window_rev = cfg.effective_analysis_revolutions()
    spectra = {}
    for label, trace in traces.items():
        window = trace.terminal_window(window_rev)
        spectra[label] = harmonic_spectrum(
            trace.e[window], cfg.samples_per_rev, indices
        )
    return spectra


def _write_manifest(out: Path, command: str, cfg: LoopConfig, options: dict) -> Path:
    outputs = {}
    for p in sorted(out.iterdir()):
        if p.name == "manifest.json" or p.is_dir():
            continue
        outputs[p.name] = _sha256(p)
    manifest = {
        "artifact": {"name": "afcsim", "version": __version__},
        "command": command,
        "config": config_to_dict(cfg),
        "options": options,
        "outputs": outputs,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def cmd_simulate(args) -> int:
    cfg, options, name = _load_run_input(args)
    out = _out_dir(args, name)

    adaptive = run_episode(cfg)
    baseline = run_episode(without_feedforward(cfg))
    floor = run_episode(disturbance_only(cfg))

    spectra = _terminal_spectra(
        cfg, {"after": adaptive, "before": baseline, "floor": floor}
    )
    report = attenuation_report(
        spectra["before"], spectra["after"], spectra["floor"], margin=options["margin"]
    )

    adaptive.write_csv(out / "trace.csv", decimation=options["trace_decimation"])
    adaptive.write_ffwd_csv(out / "ffwd_coeffs.csv")
    spectra["before"].to_csv(out / "spectrum_before.csv")
    spectra["after"].to_csv(out / "spectrum_after.csv")
    spectra["floor"].to_csv(out / "spectrum_floor.csv")
    report.to_csv(out / "attenuation.csv")
    lines = [
        f"afcsim simulate: {name}",
        f"samples/rev {cfg.samples_per_rev}, revolutions {cfg.revolutions}, "
        f"analysis window {cfg.effective_analysis_revolutions()} rev",
        f"episode wall time {adaptive.wall_seconds:.2f} s",
        "",
        report.render(),
        "",
    ]
    for st in adaptive.stages:
        lines.append(
            f"stage {st.name}: final max |coeff| "
            f"{np.max(np.abs(st.final_coeffs)):.6g}, "
            f"frozen harmonic-samples {st.freeze_samples}"
        )
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    _write_manifest(out, "simulate", cfg, options)

    print(f"wrote {out}")
    print(report.render())
    return EXIT_OK


def _update_benchmark(n_iters: int = 2000) -> list[tuple[str, int, float]]:
    """Per-update wall time of each variant's coefficient update path."""
    rows = []
    rng = np.random.default_rng(7)
    for n_r in (10, 58, 173):
        harmonics = HarmonicSet(120.0, 420, tuple(range(1, n_r + 1)))
        table = regressor_table(harmonics)
        theta_b = rng.uniform(0.5, 1.5, size=3)
        theta_m = rng.standard_normal(harmonics.dimension) * 1e-3

        state = FeedforwardState(harmonics.dimension, alpha=1e-4, n_taps=3)
        t0 = time.perf_counter()
        for k in range(n_iters):
            phi_r = table[k % 420]
            filtered = state.filter_regressor(theta_b, phi_r)
            state.update_improved(filtered, float(np.dot(theta_m, phi_r)))
        rows.append(("improved", n_r, (time.perf_counter() - t0) / n_iters * 1e6))

        state = FeedforwardState(harmonics.dimension, alpha=1e-4)
        smoother = ResponseSmoother(beta=0.95, floor=1e-4)
        evaluator = NumeratorEvaluator(harmonics.omegas, theta_b.size)
        t0 = time.perf_counter()
        for k in range(n_iters):
            resp = evaluator.response(theta_b)
            blocks = smoother.update(np.abs(resp), np.angle(resp))
            state.update_basic(blocks, theta_m)
        rows.append(("basic", n_r, (time.perf_counter() - t0) / n_iters * 1e6))
    return rows


def cmd_compare(args) -> int:
    cfg, options, name = _load_run_input(args)
    out = _out_dir(args, name)

    runs = {}
    for variant in ("basic", "improved"):
        vcfg = replace(
            cfg,
            stages=tuple(
                replace(st, feedforward=replace(st.feedforward, variant=variant))
                for st in cfg.stages
            ),
        )
        runs[variant] = (vcfg, run_episode(vcfg))

    baseline = run_episode(without_feedforward(cfg))
    floor = run_episode(disturbance_only(cfg))
    spectra = _terminal_spectra(
        cfg,
        {
            "before": baseline,
            "floor": floor,
            "basic": runs["basic"][1],
            "improved": runs["improved"][1],
        },
    )
    reports = {
        v: attenuation_report(
            spectra["before"], spectra[v], spectra["floor"], margin=options["margin"]
        )
        for v in ("basic", "improved")
    }
    for v in ("basic", "improved"):
        reports[v].to_csv(out / f"attenuation_{v}.csv")

    bench = _update_benchmark()
    with open(out / "timing.csv", "w", newline="") as fh:
        fh.write("variant,n_harmonics,microseconds_per_update\n")
        for variant, n_r, us in bench:
            fh.write(f"{variant},{n_r},{us:.3f}\n")

    lines = [f"afcsim compare: {name}", ""]
    for v in ("basic", "improved"):
        trace = runs[v][1]
        lines.append(
            f"{v:>9}: wall {trace.wall_seconds:.2f} s, at floor "
            f"{reports[v].n_at_floor}/{len(reports[v].indices)}, "
            f"max residual {reports[v].max_residual:.6g}"
        )
        for st in trace.stages:
            lines.append(
                f"           stage {st.name}: frozen harmonic-samples "
                f"{st.freeze_samples}"
            )
    agreement = []
    for sb, si in zip(runs["basic"][1].stages, runs["improved"][1].stages):
        agreement.append(
            f"stage {sb.name}: max |coeff difference| "
            f"{np.max(np.abs(sb.final_coeffs - si.final_coeffs)):.6g}"
        )
    lines += ["", "variant agreement:"] + agreement
    lines += ["", "per-update timing (microseconds):"]
    for variant, n_r, us in bench:
        lines.append(f"  {variant:>9} n_r={n_r:>4}: {us:8.2f}")
    (out / "compare.txt").write_text("\n".join(lines) + "\n")
    _write_manifest(out, "compare", cfg, options)

    print(f"wrote {out}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    trace_path = Path(args.trace)
    if not trace_path.exists():
        raise ConfigError(f"trace file not found: {trace_path}")
    import csv as csv_mod

    with open(trace_path, newline="") as fh:
        reader = csv_mod.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"trace file is empty: {trace_path}") from None
        if args.column not in header:
            raise ConfigError(
                f"column {args.column!r} not in trace (have: {', '.join(header)})"
            )
        col = header.index(args.column)
        values = []
        for row in reader:
            values.append(float(row[col]))
    if not values:
        raise ConfigError(f"trace file has no data rows: {trace_path}")
    indices = parse_index_spec(args.indices)
    try:
        spec = harmonic_spectrum(values, args.samples_per_rev, indices)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out_path = Path(args.out) if args.out else trace_path.with_name(
        f"spectrum_{args.column}.csv"
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    spec.to_csv(out_path)
    print(f"wrote {out_path}")
    return EXIT_OK


def _add_run_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help=f"one of: {', '.join(preset_names())}")
    p.add_argument("--config", help="TOML config, JSON config, or manifest.json")
    p.add_argument("--out", help="output directory (default: $AFCSIM_OUT_ROOT/<name>)")
    p.add_argument("--seed-override", type=int, default=None)
    p.add_argument("--revolutions-override", type=int, default=None)
    p.add_argument("--variant", choices=("basic", "improved"), default=None)
    p.add_argument("--trace-decimation", type=int, default=None)
    p.add_argument("--margin", type=float, default=None,
                   help="noise-floor margin for the at-floor flag (default 2.0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="afcsim",
        description="Adaptive feedforward cancellation of periodic runout: "
        "simulation, variant comparison, harmonic analysis.",
    )
    parser.add_argument("--version", action="version", version=f"afcsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario end to end")
    _add_run_arguments(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="run both update laws on equal seeds")
    _add_run_arguments(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_spec = sub.add_parser("spectrum", help="harmonic spectrum of a trace column")
    p_spec.add_argument("trace", help="trace CSV path")
    p_spec.add_argument("--column", default="e")
    p_spec.add_argument("--samples-per-rev", type=int, required=True)
    p_spec.add_argument("--indices", required=True, help='e.g. "1-58" or "1,3,5"')
    p_spec.add_argument("--out", default=None)
    p_spec.set_defaults(func=cmd_spectrum)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDivergence as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
