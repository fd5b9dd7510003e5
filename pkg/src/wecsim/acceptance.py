"""The workbench's acceptance battery.

Each criterion checks one published/derived property of the shipped system at
a pinned tolerance; ``run_criteria`` executes any subset and reports one
pass/fail line per criterion.  The same battery backs the CLI ``verify``
command and the test suite.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from wecsim import fuzzy, linearize, lpv, sim, turbine, wind
from wecsim.hinf import close_loop, hinf_norm, hinf_norm_grid
from wecsim.riccati import care_residual, solve_care
from wecsim.statespace import StateSpaceModel, feedback
from wecsim.turbine import TurbineParams

FIG10_SEEDS = (5, 9, 27)
TABLE2 = {
    # vertex -> (k_omega, k_wind, k_pitch), published linearization values
    "vmin": (-6.91e3, 1.229e4, -2.251e3),
    "vmax": (-6.57e4, 1.618e4, -2.786e4),
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: list[str] = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  criterion {self.number:2d}  {self.name}"

    def report(self) -> str:
        return "\n".join([self.line()] + [f"      {d}" for d in self.details])


class _Check:
    """Collects (label, measured, bound) assertions for one criterion."""

    def __init__(self):
        self.details: list[str] = []
        self.passed = True

    def le(self, label: str, measured: float, bound: float) -> None:
        ok = measured <= bound
        self.passed &= ok
        self.details.append(f"{label}: measured {measured:.6g} <= bound {bound:.6g}"
                            f" [{'ok' if ok else 'VIOLATED'}]")

    def ge(self, label: str, measured: float, bound: float) -> None:
        ok = measured >= bound
        self.passed &= ok
        self.details.append(f"{label}: measured {measured:.6g} >= bound {bound:.6g}"
                            f" [{'ok' if ok else 'VIOLATED'}]")

    def true(self, label: str, ok: bool) -> None:
        self.passed &= ok
        self.details.append(f"{label} [{'ok' if ok else 'VIOLATED'}]")

    def note(self, text: str) -> None:
        self.details.append(text)


class AcceptanceSuite:
    """Shares the expensive artifacts (synthesis, long runs) across criteria."""

    def __init__(self, p: TurbineParams | None = None,
                 fig10_seeds: tuple[int, ...] = FIG10_SEEDS):
        self.p = p or TurbineParams()
        self.fig10_seeds = fig10_seeds
        self._cache: dict[str, object] = {}

    # -- shared artifacts ---------------------------------------------------

    def _memo(self, key: str, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def vertex_synthesis(self):
        return self._memo("vertex", lambda: lpv.vertex_synthesis(self.p))

    def controller(self) -> lpv.LpvController:
        return self._memo("controller", lambda: lpv.synthesize_lpv(self.p))

    def fig8_record(self) -> sim.SimRecord:
        def build():
            scenario = sim.Scenario(wind.SmoothSweep(self.p.wind_min, self.p.wind_max,
                                                     duration=300.0),
                                    controller="open", name="fig8")
            return sim.run(scenario, self.p)
        return self._memo("fig8", build)

    def fig9_record(self) -> sim.SimRecord:
        def build():
            scenario = sim.Scenario(wind.StepRampNoise(duration=100.0, seed=1),
                                    controller="lpv", name="fig9")
            return sim.run(scenario, self.p, controller=self.controller())
        return self._memo("fig9", build)

    def fig10_records(self):
        def build():
            ctrl = self.controller()
            cfg = fuzzy.FuzzyConfig(pitch_min=self.p.pitch_min, pitch_max=self.p.pitch_max)
            out = []
            for seed in self.fig10_seeds:
                profile = wind.VonKarmanWind(duration=300.0, seed=seed)
                rec_l = sim.run(sim.Scenario(profile, controller="lpv", name="fig10"),
                                self.p, controller=ctrl)
                rec_f = sim.run(sim.Scenario(profile, controller="piflc", name="fig10"),
                                self.p, fuzzy_cfg=cfg)
                out.append((seed, rec_l, rec_f))
            return out
        return self._memo("fig10", build)

    # -- criteria -----------------------------------------------------------

    def criterion_1(self) -> CriterionResult:
        """Rated-power consistency at the zero-pitch vertex."""
        c = _Check()
        power = turbine.aero_power(self.p.wind_min, self.p.rated_rotor_speed,
                                   self.p.pitch_min, self.p)
        c.le("aero power vs 225 kW relative error",
             abs(power - self.p.rated_power) / self.p.rated_power, 0.02)
        c.note(f"aero power at the bottom vertex: {power:.1f} W")
        return CriterionResult(1, "rated-power consistency", c.passed, c.details)

    def criterion_2(self) -> CriterionResult:
        """Finite-difference linearization against the published coefficients."""
        c = _Check()
        top, bottom = linearize.vertex_models(self.p)
        c.note("pitch coefficient convention: per degree (matches the published values)")
        for name, model, tol in (("vmin", bottom, 0.10), ("vmax", top, 0.15)):
            coeffs = (model.coeffs.k_omega, model.coeffs.k_wind, model.coeffs.k_pitch)
            for label, got, ref in zip(("k_omega", "k_wind", "k_pitch"), coeffs, TABLE2[name]):
                c.le(f"{name} {label} relative error vs {ref:g}",
                     abs(got - ref) / abs(ref), tol)
        return CriterionResult(2, "linearization coefficients", c.passed, c.details)

    def criterion_3(self) -> CriterionResult:
        """Equilibrium torque identity and gearbox speed ratio."""
        c = _Check()
        spring = self.p.shaft_stiffness * self.p.trim_twist
        torque = turbine.aero_torque(self.p.wind_min, self.p.rated_rotor_speed,
                                     self.p.pitch_min, self.p)
        c.le("Ks*delta0 vs aero torque relative error",
             abs(spring - torque) / spring, 0.02)
        c.le("speed ratio vs gearbox ratio relative error",
             abs(self.p.rated_generator_speed / self.p.rated_rotor_speed
                 - self.p.gearbox_ratio) / self.p.gearbox_ratio, 1e-9)
        return CriterionResult(3, "equilibrium identities", c.passed, c.details)

    def criterion_4(self) -> CriterionResult:
        """Nonlinear vs linear steady state: tight at the vertex, drifting
        apart away from it."""
        c = _Check()
        rows = sim.open_loop_step_comparison(self.p, (24.5, 22.0, 19.0, 16.0))
        c.le("+0.5 m/s step discrepancy vs linear prediction",
             rows[0].relative_discrepancy, 0.01)
        discs = [r.relative_discrepancy for r in rows]
        c.true("discrepancy grows monotonically away from the vertex "
               f"({', '.join('%.4f' % d for d in discs)})",
               all(a < b for a, b in zip(discs, discs[1:])))
        return CriterionResult(4, "linear-model fidelity at the vertex", c.passed, c.details)

    def criterion_5(self) -> CriterionResult:
        """Open-loop sweep multiplies generator power several times over."""
        c = _Check()
        rec = self.fig8_record()
        c.ge("peak generator power / rated", float(rec.ps.max()) / self.p.rated_power, 3.5)
        return CriterionResult(5, "open-loop power escalation", c.passed, c.details)

    def criterion_6(self) -> CriterionResult:
        """Vertex synthesis soundness and frozen-wind grid stability."""
        c = _Check()
        for name, _, plant, result in self.vertex_synthesis():
            closed = close_loop(plant, result.controller)
            measured = hinf_norm(closed)
            gridded = hinf_norm_grid(closed)
            c.le(f"{name} measured norm vs gamma", measured, result.gamma_achieved)
            c.le(f"{name} bisection vs grid relative gap",
                 abs(measured - gridded) / measured, 0.005)
            c.le(f"{name} X Riccati residual", result.riccati_residuals[0], 1e-8)
            c.le(f"{name} Y Riccati residual", result.riccati_residuals[1], 1e-8)
        ctrl = self.controller()
        vertex = self.vertex_synthesis()
        g_top = vertex[0][2]  # scaled plants share B2/C across vertices
        a_top, a_bot = vertex[0][1], vertex[1][1]
        gt = lpv._scaled_vertex_plant(a_top)
        gb = lpv._scaled_vertex_plant(a_bot)
        worst = -math.inf
        for v in np.linspace(self.p.wind_min, self.p.wind_max, 27):
            alpha, beta = lpv.scheduling_weights(float(v), self.p.wind_min, self.p.wind_max)
            a_interp = alpha * gt.a + beta * gb.a
            k = ctrl.interpolate(alpha)
            a_cl = np.block([[a_interp, gt.b @ k.c], [-k.b @ gt.c, k.a]])
            worst = max(worst, float(np.linalg.eigvals(a_cl).real.max()))
        c.le("worst frozen-wind closed-loop eigenvalue real part over 27 grid points",
             worst, 0.0)
        _ = g_top
        return CriterionResult(6, "synthesis soundness", c.passed, c.details)

    def criterion_7(self) -> CriterionResult:
        """Step-ramp regulation: speed, power and twist stay in their bands."""
        c = _Check()
        rec = self.fig9_record()
        mask = rec.t >= 10.0
        wg_dev = float(np.abs(rec.omega_g[mask] - self.p.rated_generator_speed).max())
        ps_dev = float(np.abs(rec.ps[mask] - self.p.rated_power).max())
        c.le("generator speed deviation from 105.78 rad/s",
             wg_dev / self.p.rated_generator_speed, 0.05)
        c.le("generator power deviation from 225 kW",
             ps_dev / self.p.rated_power, 0.05)
        report = sim.metrics(rec, window_start=10.0, p=self.p)
        c.le("twist oscillation amplitude (rad)", report.twist_amplitude, 1e-3)
        return CriterionResult(7, "step-ramp regulation bands", c.passed, c.details)

    def criterion_8(self) -> CriterionResult:
        """Turbulent-wind comparison: scheduled controller comfortably beats
        the fuzzy baseline on every fixed seed."""
        c = _Check()
        for seed, rec_l, rec_f in self.fig10_records():
            comparison = sim.compare(rec_l, rec_f, p=self.p)
            fluct = comparison.lpv_metrics.channels["omega_g"].peak_fluctuation_pct
            c.le(f"seed {seed}: scheduled controller speed fluctuation (%)", fluct, 6.0)
            c.ge(f"seed {seed}: speed fluctuation ratio baseline/scheduled",
                 comparison.speed_fluctuation_ratio, 2.0)
            c.ge(f"seed {seed}: twist variance ratio baseline/scheduled",
                 comparison.twist_variance_ratio, 2.0)
        return CriterionResult(8, "turbulence comparison", c.passed, c.details)

    def criterion_9(self) -> CriterionResult:
        """No actuator constraint violations in any shipped scenario."""
        c = _Check()
        records = [("fig8 open loop", self.fig8_record()),
                   ("fig9 scheduled", self.fig9_record())]
        for seed, rec_l, rec_f in self.fig10_records():
            records.append((f"fig10 scheduled seed {seed}", rec_l))
            records.append((f"fig10 fuzzy seed {seed}", rec_f))
        for name, rec in records:
            report = sim.metrics(rec, window_start=0.0, p=self.p)
            c.le(f"{name}: pitch range violations", report.beta_range_violations, 0)
            c.le(f"{name}: pitch rate violations", report.beta_rate_violations, 0)
        return CriterionResult(9, "constraint audit", c.passed, c.details)

    def criterion_10(self) -> CriterionResult:
        """Numerics property battery: Riccati residuals, interconnection
        oracles, integrator order, fuzzy antisymmetry, determinism."""
        c = _Check()
        rng = np.random.default_rng(0)
        worst_res = 0.0
        for _ in range(100):
            n = 4
            a = rng.standard_normal((n, n))
            b = rng.standard_normal((n, 2))
            m = rng.standard_normal((n, n))
            q = m @ m.T + 0.1 * np.eye(n)
            r = np.eye(2)
            x = solve_care(a, b, q, r)
            worst_res = max(worst_res,
                            care_residual(a, b, q, r, x) / (1.0 + np.linalg.norm(x)))
        c.le("worst CARE residual over 100 seeded instances", worst_res, 1e-8)

        worst_fb = 0.0
        for _ in range(20):
            g1 = _random_stable(rng, 2)
            g2 = _random_stable(rng, 2)
            closed = feedback(g1, g2)
            for w in rng.uniform(0.05, 30.0, 10):
                h1 = g1.transfer_at(1j * w)
                h2 = g2.transfer_at(1j * w)
                want = h1 @ np.linalg.inv(np.eye(2) + h2 @ h1)
                got = closed.transfer_at(1j * w)
                worst_fb = max(worst_fb, float(np.abs(got - want).max()))
        c.le("worst feedback interconnection frequency-response error", worst_fb, 1e-9)

        op = linearize.operating_point(17.5, self.p)
        x0 = op.plant_state(self.p)
        cmd = turbine.ControlCommand(op.pitch + 1.0, op.generator_torque * 1.02)
        full = turbine.step(x0, cmd, 18.0, 1e-3, self.p)
        half = turbine.step(turbine.step(x0, cmd, 18.0, 5e-4, self.p), cmd, 18.0, 5e-4, self.p)
        err = max(abs(a - b) / max(1.0, abs(a))
                  for a, b in zip(full.as_tuple(), half.as_tuple()))
        c.le("RK4 half-step vs full-step relative gap", err, 1e-8)

        worst_odd = 0.0
        for e in np.linspace(-1.0, 1.0, 21):
            for de in np.linspace(-1.0, 1.0, 21):
                plus = fuzzy.infer_and_defuzzify(fuzzy.fuzzify(e), fuzzy.fuzzify(de))
                minus = fuzzy.infer_and_defuzzify(fuzzy.fuzzify(-e), fuzzy.fuzzify(-de))
                worst_odd = max(worst_odd, abs(plus + minus))
        c.le("fuzzy surface antisymmetry on the 21x21 grid", worst_odd, 1e-9)

        profile = wind.VonKarmanWind(duration=5.0, seed=11)
        blobs = []
        for _ in range(2):
            scenario = sim.Scenario(profile, controller="open", name="determinism",
                                    metric_window_start=1.0)
            rec = sim.run(scenario, self.p)
            buf = io.StringIO()
            _write_csv(rec, buf)
            blobs.append(buf.getvalue())
        c.true("repeated run produces byte-identical CSV", blobs[0] == blobs[1])
        return CriterionResult(10, "numerics property suite", c.passed, c.details)

    def run(self, numbers: tuple[int, ...] | None = None) -> list[CriterionResult]:
        table = {
            1: self.criterion_1, 2: self.criterion_2, 3: self.criterion_3,
            4: self.criterion_4, 5: self.criterion_5, 6: self.criterion_6,
            7: self.criterion_7, 8: self.criterion_8, 9: self.criterion_9,
            10: self.criterion_10,
        }
        chosen = numbers or tuple(sorted(table))
        results = []
        for number in chosen:
            if number not in table:
                raise ValueError(f"no criterion {number}; valid: 1..10")
            try:
                results.append(table[number]())
            except Exception as exc:  # a crash is a failure, not an abort
                results.append(CriterionResult(number, table[number].__doc__.split('.')[0]
                                               if table[number].__doc__ else "criterion",
                                               False, [f"raised {type(exc).__name__}: {exc}"]))
        return results


def _random_stable(rng: np.random.Generator, n: int) -> StateSpaceModel:
    a = rng.standard_normal((n, n))
    a -= (np.max(np.linalg.eigvals(a).real) + 0.5) * np.eye(n)
    return StateSpaceModel(a, rng.standard_normal((n, 2)),
                           rng.standard_normal((2, n)), rng.standard_normal((2, 2)) * 0.1)


def _write_csv(rec: sim.SimRecord, buf: io.StringIO) -> None:
    for key in sorted(rec.meta):
        buf.write(f"# {key} = {rec.meta[key]}\n")
    buf.write(",".join(sim.CHANNELS) + "\n")
    cols = np.column_stack([rec.data[ch] for ch in sim.CHANNELS])
    for row in cols:
        buf.write(",".join("%.17g" % x for x in row) + "\n")


def run_criteria(p: TurbineParams | None = None,
                 numbers: tuple[int, ...] | None = None) -> list[CriterionResult]:
    return AcceptanceSuite(p).run(numbers)
