"""Command-line front end: linearize, synthesize, simulate, verify.

All outputs are plain-text files (labeled matrices, CSV records, key-value
reports); plots are optional PNG renderings of the logged channels.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from wecsim import acceptance, fuzzy, linearize, lpv, sim, turbine, wind
from wecsim.acceptance import TABLE2
from wecsim.config import ConfigError

SCENARIOS = ("fig7", "fig8", "fig9", "fig10", "const")
PLOT_CHANNELS = ("v", "omega_g", "beta", "tg", "ps", "delta")


def _load_params(path: str | None) -> turbine.TurbineParams:
    if path is None:
        return turbine.TurbineParams()
    return turbine.load_params(path)


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_linearize(args: argparse.Namespace) -> int:
    p = _load_params(args.params)
    out = _out_dir(args.out)
    top, bottom = linearize.vertex_models(p)
    linearize.export_model(out / "vertex_vmax.txt", top)
    linearize.export_model(out / "vertex_vmin.txt", bottom)
    lines = ["# linearization coefficients vs published values"]
    for name, model, tol in (("vmin", bottom, 0.10), ("vmax", top, 0.15)):
        got = (model.coeffs.k_omega, model.coeffs.k_wind, model.coeffs.k_pitch)
        for label, value, ref in zip(("k_omega", "k_wind", "k_pitch"), got, TABLE2[name]):
            rel = abs(value - ref) / abs(ref)
            sign = "-" if value < 0 else "+"
            lines.append(f"{name}.{label} = {value!r}  sign={sign}  reference={ref!r}  "
                         f"rel_error={rel:.4f}  tolerance={tol}")
    (out / "coefficients.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote vertex models and coefficient report to {out}")
    return 0


def cmd_synthesize(args: argparse.Namespace) -> int:
    p = _load_params(args.params)
    out = _out_dir(args.out)
    gamma_range = (args.gamma_min, args.gamma_max)
    ctrl = lpv.synthesize_lpv(p, gamma_range=gamma_range)
    lpv.save_controller(out / "controller.txt", ctrl)
    report = [
        f"gamma_vmax_vertex = {ctrl.gamma_top!r}",
        f"gamma_vmin_vertex = {ctrl.gamma_bottom!r}",
        f"controller_states = {ctrl.n_states}",
        f"scheduling_range = [{ctrl.vmin}, {ctrl.vmax}] m/s",
    ]
    (out / "gamma_report.txt").write_text("\n".join(report) + "\n")
    print(f"wrote controller.txt and gamma_report.txt to {out}")
    print("\n".join(report))
    return 0


def _get_controller(args: argparse.Namespace, p: turbine.TurbineParams) -> lpv.LpvController:
    if getattr(args, "controller_file", None):
        return lpv.load_controller(args.controller_file)
    return lpv.synthesize_lpv(p)


def _build_scenario(name: str, controller: str, seed: int) -> sim.Scenario:
    if name == "fig8":
        profile = wind.SmoothSweep(11.0, 24.0, duration=300.0)
        return sim.Scenario(profile, controller="open", name=name)
    if name == "fig9":
        profile = wind.StepRampNoise(duration=100.0, seed=seed)
        return sim.Scenario(profile, controller=controller, name=name)
    if name == "fig10":
        profile = wind.VonKarmanWind(duration=300.0, seed=seed)
        return sim.Scenario(profile, controller=controller, name=name)
    if name == "const":
        profile = wind.ConstantWind(17.5, duration=60.0)
        return sim.Scenario(profile, controller=controller, name=name)
    raise ValueError(name)


def _plot_record(rec: sim.SimRecord, path: Path) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise SystemExit(f"plotting requires matplotlib: {exc}")
    fig, axes = plt.subplots(len(PLOT_CHANNELS), 1, figsize=(9, 12), sharex=True)
    labels = {"v": "wind [m/s]", "omega_g": "generator speed [rad/s]",
              "beta": "pitch [deg]", "tg": "generator torque [N m]",
              "ps": "generator power [W]", "delta": "shaft twist [rad]"}
    stride = max(1, len(rec.t) // 20000)
    for ax, ch in zip(axes, PLOT_CHANNELS):
        ax.plot(rec.t[::stride], rec.data[ch][::stride], lw=0.8)
        ax.set_ylabel(labels[ch])
        ax.grid(True, alpha=0.4)
    axes[-1].set_xlabel("time [s]")
    fig.suptitle(f"{rec.meta.get('scenario')} ({rec.meta.get('controller')})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_simulate(args: argparse.Namespace) -> int:
    p = _load_params(args.params)
    out = _out_dir(args.out)
    if args.scenario == "fig7":
        rows = sim.open_loop_step_comparison(p, (24.5, 22.0, 19.0, 16.0))
        lines = ["wind_target,delta_wg_linear,delta_wg_nonlinear,relative_discrepancy"]
        lines += [f"{r.wind_target!r},{r.delta_wg_linear!r},{r.delta_wg_nonlinear!r},"
                  f"{r.relative_discrepancy!r}" for r in rows]
        (out / "fig7_step_comparison.csv").write_text("\n".join(lines) + "\n")
        print(f"wrote fig7_step_comparison.csv to {out}")
        return 0

    controllers = ["lpv", "piflc"] if args.controller == "both" else [args.controller]
    if args.scenario == "fig8":
        controllers = ["open"]
    needs_lpv = "lpv" in controllers
    ctrl = _get_controller(args, p) if needs_lpv else None
    cfg = fuzzy.FuzzyConfig(pitch_min=p.pitch_min, pitch_max=p.pitch_max)
    records = {}
    for mode in controllers:
        scenario = _build_scenario(args.scenario, mode, args.seed)
        rec = sim.run(scenario, p, controller=ctrl, fuzzy_cfg=cfg)
        base = f"{args.scenario}_{mode}"
        rec.save_csv(out / f"{base}.csv", stride=args.stride)
        report = sim.metrics(rec, p=p)
        (out / f"{base}_metrics.txt").write_text(report.as_text())
        if args.plots:
            _plot_record(rec, out / f"{base}.png")
        records[mode] = rec
        print(f"wrote {base}.csv and {base}_metrics.txt to {out}")
    if set(records) >= {"lpv", "piflc"}:
        comparison = sim.compare(records["lpv"], records["piflc"], p=p)
        (out / f"{args.scenario}_comparison.txt").write_text(comparison.as_text())
        print(f"wrote {args.scenario}_comparison.txt to {out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    p = _load_params(args.params)
    numbers = None
    if args.criteria:
        numbers = tuple(int(x) for x in args.criteria.split(","))
    results = acceptance.run_criteria(p, numbers)
    report = "\n\n".join(r.report() for r in results)
    print(report)
    if args.out:
        out = _out_dir(args.out)
        (out / "acceptance_report.txt").write_text(report + "\n")
    failed = [r for r in results if not r.passed]
    print(f"\n{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wecsim",
        description="Wind turbine control workbench: models, synthesis, simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--params", help="INI parameter file (defaults built in)")
        sp.add_argument("--out", default="out", help="output directory")

    sp = sub.add_parser("linearize", help="export vertex models and coefficients")
    common(sp)
    sp.set_defaults(func=cmd_linearize)

    sp = sub.add_parser("synthesize", help="synthesize and save the scheduled controller")
    common(sp)
    sp.add_argument("--gamma-min", type=float, default=1e-3)
    sp.add_argument("--gamma-max", type=float, default=1e4)
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("simulate", help="run a scenario and write CSV/metrics")
    common(sp)
    sp.add_argument("--scenario", required=True, choices=SCENARIOS,
                    help=f"one of {', '.join(SCENARIOS)}")
    sp.add_argument("--controller", default="lpv", choices=("lpv", "piflc", "open", "both"))
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--controller-file", help="load a synthesized controller instead")
    sp.add_argument("--stride", type=int, default=1, help="CSV decimation factor")
    sp.add_argument("--plots", action="store_true", help="write PNG channel plots")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="run the acceptance battery")
    common(sp)
    sp.add_argument("--criteria", help="comma-separated criterion numbers (default all)")
    sp.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, turbine.ParamFileError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 2
    except linearize.TrimError as exc:
        print(f"equilibrium error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
