"""Orchestrates runs, sweeps and verification for the command line."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from app.config import settings
from app.models.errors import (
    ConfigError,
    HaltedByObserver,
    NumericalError,
    SimulationError,
    Violation,
)
from app.models.schemas import (
    BoundCheckConfig,
    ConfigBundle,
    EmittedFile,
    ModelConfig,
    NormReport,
    Outcome,
    RunManifest,
    State,
    StepBudget,
    SweepRow,
    VerificationCheck,
    VerificationReport,
)
from app.services import artifacts
from app.services.config_document import CONFIG_KEYS, dump_config, resolve_scenario
from app.services.diagnostics import (
    classify_outcome,
    extinction_detector,
    fit_comparison_constants,
    lq_bound_check,
    lq_ladder,
    lq_norm,
    mass_budget_residual,
    norm_report,
    steady_sample,
    steady_state_detector,
)
from app.services.integrator import integrate, rk4_step, stable_dt
from app.services.operators import Closure
from app.services.oracle import comparison_ode_solve, euler_fine_run, rk4_oracle_run
from app.services.plotting import render_profile_png
from app.services.scenarios import initial_state
from app.services.summary import profile_title

logger = logging.getLogger(__name__)

SUMMARY_HEADER = [
    "axis_value", "verdict", "t_final", "u_sup", "v_sup", "v_l2", "extinction_time", "error",
]


# --------------- Observers ---------------

class NormRecorder:
    """Collects a NormReport for every observed state."""

    def __init__(self, cfg: ModelConfig, lebesgue_qs: Sequence[float] = ()):
        self.grid = cfg.grid
        self.lebesgue_qs = tuple(lebesgue_qs)
        self.rows: list[NormReport] = []

    def observe(self, state: State) -> Optional[str]:
        self.rows.append(norm_report(state, self.grid, self.lebesgue_qs))
        return None


class SteadyWatch:
    def __init__(self, cfg: ModelConfig, tol: float, window: int, stop: bool = False):
        self.cfg = cfg
        self.tol = tol
        self.window = window
        self.stop = stop
        self.samples: list[tuple[float, float]] = []

    def observe(self, state: State) -> Optional[str]:
        self.samples.append(steady_sample(state, self.cfg))
        if self.stop and self.settled:
            return f"steady state reached at t={state.t:g}"
        return None

    @property
    def settled(self) -> bool:
        return steady_state_detector(self.samples, self.tol, self.window)


class StepCounter:
    def __init__(self):
        self.steps = 0
        self.min_dt = math.inf

    def __call__(self, before: State, after: State, budget: StepBudget) -> None:
        self.steps += 1
        self.min_dt = min(self.min_dt, budget.dt)


# --------------- Run ---------------

def run_scenario(
    scenario_id: str,
    bundle: ConfigBundle,
    out_dir: Path,
    lebesgue_qs: Sequence[float] = (),
    plot_size: tuple[int, int] = (900, 600),
    stop_at_steady: bool = False,
) -> tuple[RunManifest, Outcome]:
    """Integrate one scenario and write its artifacts into out_dir."""
    started = time.perf_counter()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg, grid = bundle.model, bundle.model.grid
    x = grid.cell_centers

    logger.info("Run %s: N=%d, t_end=%g -> %s", scenario_id, grid.n_cells, bundle.step.t_end, out_dir)

    recorder = NormRecorder(cfg, lebesgue_qs)
    watch = SteadyWatch(cfg, settings.steady_tol, settings.steady_window, stop=stop_at_steady)
    counter = StepCounter()
    files: list[EmittedFile] = []

    def emit_snapshot(state: State) -> None:
        name = artifacts.snapshot_filename(state.t)
        artifacts.write_snapshot(out_dir / name, x, state)
        files.append(EmittedFile(path=name, role="snapshot"))
        png = f"profile_t{state.t:.10g}.png"
        (out_dir / png).write_bytes(
            render_profile_png(x, state.u, state.v, profile_title(scenario_id, cfg, state.t), plot_size)
        )
        files.append(EmittedFile(path=png, role="plot"))

    state = initial_state(cfg, bundle.ic_u, bundle.ic_v)
    recorder.observe(state)
    written: set[float] = set()
    halted: Optional[str] = None

    for target in bundle.snapshots:
        if target > state.t:
            try:
                state = integrate(
                    state, cfg, bundle.step.model_copy(update={"t_end": target}),
                    observers=(recorder, watch), on_step=counter,
                )
            except HaltedByObserver as e:
                state, halted = e.state, e.reason
        if halted is None and target not in written:
            emit_snapshot(state)
            written.add(target)
        if halted is not None:
            break

    if halted is None and state.t < bundle.step.t_end:
        try:
            state = integrate(
                state, cfg, bundle.step, observers=(recorder, watch), on_step=counter,
            )
        except HaltedByObserver as e:
            state, halted = e.state, e.reason
    if state.t not in written:
        emit_snapshot(state)
    if halted is not None:
        logger.info("Run %s halted: %s", scenario_id, halted)

    artifacts.write_norms_csv(out_dir / "norms.csv", recorder.rows, lebesgue_qs)
    files.append(EmittedFile(path="norms.csv", role="norms"))

    extinction = extinction_detector(
        [(r.t, r.v_l2) for r in recorder.rows], settings.extinction_threshold
    )
    outcome = classify_outcome(
        state, grid, bundle.thresholds, settled=watch.settled, extinction_time=extinction
    )
    final_norms = norm_report(state, grid, lebesgue_qs)
    record = outcome.model_dump(mode="json")
    record["scenario_id"] = scenario_id
    record["norms"] = final_norms.model_dump(mode="json")
    # Pairs keep the ladder in increasing q; write_json sorts object keys
    record["v_lq_ladder"] = [[f"{q:g}", value] for q, value in lq_ladder(state.v, grid).items()]
    record["halted"] = halted
    artifacts.write_json(out_dir / "verdict.json", record)
    files.append(EmittedFile(path="verdict.json", role="verdict"))

    (out_dir / "config.json").write_text(dump_config(bundle), encoding="utf-8")
    files.append(EmittedFile(path="config.json", role="config"))
    files.append(EmittedFile(path="manifest.json", role="manifest"))

    manifest = RunManifest(
        scenario_id=scenario_id,
        config=artifacts.read_json(out_dir / "config.json"),
        output_dir=str(out_dir),
        files=files,
        steps=counter.steps,
        wall_clock_seconds=round(time.perf_counter() - started, 3),
        verdict=outcome.verdict,
    )
    artifacts.write_json(out_dir / "manifest.json", manifest.model_dump(mode="json"))

    logger.info(
        "Run %s finished: t=%g, %d steps, verdict %s",
        scenario_id, state.t, counter.steps, outcome.verdict.value,
    )
    return manifest, outcome


# --------------- Sweep ---------------

def _row_from_record(axis_key: str, value: str, record: dict) -> SweepRow:
    return SweepRow(
        axis_key=axis_key,
        axis_value=value,
        verdict=record["verdict"],
        t_final=record["t_final"],
        u_sup=record["u_sup"],
        v_sup=record["v_sup"],
        v_l2=record["v_l2"],
        extinction_time=record.get("extinction_time"),
    )


def _sweep_member(
    base: str, axis_key: str, value: str, out_dir: Path,
    overrides: tuple[str, ...], t_end: Optional[float], snapshots: Optional[list[float]],
    lebesgue_qs: tuple[float, ...], plot_size: tuple[int, int],
) -> SweepRow:
    try:
        scenario_id, bundle = resolve_scenario(
            base, list(overrides) + [f"{axis_key}={value}"], t_end, snapshots
        )
        _, outcome = run_scenario(scenario_id, bundle, out_dir, lebesgue_qs, plot_size)
    except SimulationError as e:
        logger.warning("Sweep member %s=%s failed: %s", axis_key, value, e.code)
        return SweepRow(axis_key=axis_key, axis_value=value, error=f"{e.code}: {e}")
    except Exception as e:
        logger.exception("Sweep member %s=%s crashed", axis_key, value)
        return SweepRow(axis_key=axis_key, axis_value=value, error=f"{type(e).__name__}: {e}")
    return _row_from_record(axis_key, value, outcome.model_dump(mode="json"))


def member_dir(out_dir: Path, axis_key: str, value: str) -> Path:
    return Path(out_dir) / f"{axis_key}={value.replace('/', '_')}"


def write_summary(path: Path, rows: Sequence[SweepRow]) -> None:
    def cell(value) -> str:
        if value is None:
            return ""
        if isinstance(value, float):
            return repr(value)
        return getattr(value, "value", str(value))

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for r in rows:
            writer.writerow([cell(getattr(r, col)) for col in SUMMARY_HEADER])


def run_sweep(
    base: str,
    axis_key: str,
    values: Sequence[str],
    out_dir: Path,
    jobs: int = 1,
    overrides: Sequence[str] = (),
    t_end: Optional[float] = None,
    snapshots: Optional[Sequence[float]] = None,
    overwrite: bool = False,
    lebesgue_qs: Sequence[float] = (),
    plot_size: tuple[int, int] = (900, 600),
) -> list[SweepRow]:
    """One run per axis value in its own subdirectory, then summary.csv.

    Members that already hold a verdict record are reused unless overwrite.
    Rows keep the order of values whatever the parallelism.
    """
    if axis_key not in CONFIG_KEYS:
        raise ConfigError([Violation(
            code="UNKNOWN_KEY", field=axis_key, message=f"sweep axis {axis_key!r} is not a config key",
        )])
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    snapshots = list(snapshots) if snapshots is not None else None

    rows: dict[str, SweepRow] = {}
    pending = []
    for value in values:
        target = member_dir(out_dir, axis_key, value)
        record_path = target / "verdict.json"
        if record_path.is_file() and not overwrite:
            logger.info("Sweep member %s=%s reused from %s", axis_key, value, target)
            rows[value] = _row_from_record(axis_key, value, artifacts.read_json(record_path))
        else:
            pending.append((
                base, axis_key, value, target, tuple(overrides), t_end, snapshots,
                tuple(lebesgue_qs), plot_size,
            ))

    if jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_sweep_member, *args) for args in pending]
            for args, future in zip(pending, futures):
                rows[args[2]] = future.result()
    else:
        for args in pending:
            rows[args[2]] = _sweep_member(*args)

    ordered = [rows[value] for value in values]
    write_summary(out_dir / "summary.csv", ordered)
    failed = sum(1 for r in ordered if r.error)
    logger.info("Sweep over %s: %d runs, %d failed", axis_key, len(ordered), failed)
    return ordered


# --------------- Verify ---------------

ENVELOPE_AGREEMENT = 1e-4


def _envelope_gap(bound_cfg: BoundCheckConfig, y0: float, t_end: float, endpoint: float) -> float:
    """Relative gap between the adaptive envelope and the fixed-step RK4 comparison solve at t_end."""
    if t_end <= 0.0:
        return 0.0
    reference = comparison_ode_solve(
        bound_cfg.ode_c1, bound_cfg.ode_c2, bound_cfg.ode_c3, bound_cfg.lebesgue_q, y0, t_end
    ).values[-1]
    # Absolute floor for envelopes that stay near zero
    return abs(endpoint - reference) / (max(abs(endpoint), abs(reference)) + 1e-6)


def _relative_l2(a: np.ndarray, b: np.ndarray) -> float:
    scale = float(np.linalg.norm(b))
    diff = float(np.linalg.norm(a - b))
    if scale == 0.0:
        return diff
    return diff / scale


def verify_scenario(
    scenario_id: str,
    bundle: ConfigBundle,
    force: bool = False,
    closure: Optional[Closure] = None,
    lebesgue_q: float = 2.0,
) -> VerificationReport:
    """Main integrator against the oracles, plus the mass and L^q audits.

    closure replaces the boundary closure of the main path only (fault injection).
    """
    cfg, grid, ctl = bundle.model, bundle.model.grid, bundle.step
    if grid.n_cells > settings.verify_max_cells and not force:
        raise ConfigError([Violation(
            code="GRID_TOO_LARGE", field="n_cells",
            message=f"n_cells={grid.n_cells} > {settings.verify_max_cells}; "
                    "downscale with --set n_cells=... or pass --force",
        )])

    state0 = initial_state(cfg, bundle.ic_u, bundle.ic_v)
    checks: list[VerificationCheck] = []

    # Single-step agreement with the independently written RK4
    dt = ctl.fixed_dt or stable_dt(state0, cfg, ctl)
    main = rk4_step(state0, dt, cfg, ctl.nonneg_clip_tolerance, closure)
    _, ou, ov = rk4_oracle_run(cfg, (state0.u, state0.v), dt, dt).final
    oracle = np.maximum(np.vstack((ou, ov)), 0.0)
    delta = float(np.max(np.abs(main.stacked() - oracle), initial=0.0))
    scale = float(np.max(np.abs(oracle), initial=0.0))
    allowed = 8.0 * np.finfo(np.float64).eps * max(scale, np.finfo(np.float64).tiny)
    checks.append(VerificationCheck(
        name="rk4_agreement", passed=delta <= allowed,
        detail=f"max |main - oracle| = {delta:.3e} (allowed {allowed:.3e}) at dt={dt:.3e}",
    ))

    # Main trajectory with a per-step mass audit
    residuals: list[float] = []
    series: list[tuple[float, float]] = [(0.0, lq_norm(state0.v, grid, lebesgue_q))]
    counter = StepCounter()

    def audit(before: State, after: State, budget: StepBudget) -> None:
        counter(before, after, budget)
        residuals.extend(mass_budget_residual(before, after, budget, grid))
        series.append((after.t, lq_norm(after.v, grid, lebesgue_q)))

    try:
        final = integrate(state0, cfg, ctl, on_step=audit, closure=closure)
    except NumericalError as e:
        logger.warning("Verify %s: main integration failed with %s", scenario_id, e.code)
        checks.append(VerificationCheck(name="mass_budget", passed=False, detail=f"{e.code}: {e}"))
        return VerificationReport(scenario_id=scenario_id, checks=checks)

    worst = max(residuals, default=0.0)
    checks.append(VerificationCheck(
        name="mass_budget", passed=worst <= 1e-11,
        detail=f"max relative residual {worst:.3e} over {counter.steps} steps",
    ))

    # Endpoint against fine forward Euler
    if counter.steps:
        dt_fixed = counter.min_dt / 10.0
        run = euler_fine_run(cfg, (state0.u, state0.v), ctl.t_end, dt_fixed)
        _, eu, ev = run.final
        err = _relative_l2(final.stacked(), np.vstack((eu, ev)))
        checks.append(VerificationCheck(
            name="euler_oracle", passed=err <= 0.02,
            detail=f"relative L2 endpoint difference {err:.3e} (dt_fixed={dt_fixed:.3e})",
        ))
    else:
        checks.append(VerificationCheck(name="euler_oracle", passed=True, detail="t_end = 0"))

    # L^q envelope with constants fitted on the first part of the series
    try:
        bound_cfg = fit_comparison_constants(
            series, lebesgue_q, grid.length, cfg.m_sup, settings.fit_fraction
        )
        y0 = series[0][1] ** lebesgue_q
        report = lq_bound_check(series, bound_cfg, y0, settings.bound_tolerance)
        envelope_gap = _envelope_gap(bound_cfg, y0, series[-1][0], report.envelope[-1])
        checks.append(VerificationCheck(
            name="lq_bound", passed=report.passed and envelope_gap <= ENVELOPE_AGREEMENT,
            detail=f"{len(report.violations)} of {len(series)} samples above the envelope "
                   f"(C1={bound_cfg.ode_c1:.3e}, C2={bound_cfg.ode_c2:.3g}, C3={bound_cfg.ode_c3:.3g}); "
                   f"envelope vs fixed-step RK4 endpoint gap {envelope_gap:.1e}",
        ))
    except NumericalError as e:
        checks.append(VerificationCheck(name="lq_bound", passed=False, detail=f"{e.code}: {e}"))

    for check in checks:
        if not check.passed:
            logger.warning("Verify %s: %s failed: %s", scenario_id, check.name, check.detail)
    return VerificationReport(scenario_id=scenario_id, checks=checks)
