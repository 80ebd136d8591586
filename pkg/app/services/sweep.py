import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from typing import Iterable, List, Optional, Tuple

from app.config import config
from app.models.enums import OutcomeKind, InconclusiveReason, EmitFormat
from app.models.schemas import SweepSpec, SimConfig, RunOutcome, PhaseCell, PhaseDiagram, DiagramMetadata
from app.services.nonlinear_solver import evolve_nonlinear, run_horizon
from app.tools.exponent import critical_exponent
from app.tools.grid_field import Grid, gaussian_field
from app.tools.profile import make_profile
from app.utils.emit import emit
from app.utils.logger import logger, log_run_event
from app.utils.metrics import SWEEP_CELLS_TOTAL


def config_hash(spec: SweepSpec) -> str:
    """sha256 of the canonical JSON of everything that shapes the results."""
    payload = spec.model_dump(mode="json", exclude={"output_dir"})
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def cell_config(spec: SweepSpec, p: float, p_star: float) -> Tuple[SimConfig, List[str]]:
    """SimConfig for one cell; cells close to p_star run CRITICAL_T_END_FACTOR times longer."""
    cfg = SimConfig.from_config(**spec.config_overrides)
    flags: List[str] = []
    if math.isfinite(p_star) and abs(p - p_star) <= config.CRITICAL_BAND:
        cfg = SimConfig.from_config(**{**spec.config_overrides, "t_end": cfg.t_end * config.CRITICAL_T_END_FACTOR})
        flags.append("extended_t_end")
    return cfg, flags


def run_cell(spec: SweepSpec, p: float, amplitude: float, p_star: float) -> PhaseCell:
    """One nonlinear run from amplitude * exp(-x^2/(2 width^2)); failures become Inconclusive{error}."""
    flags: List[str] = []
    try:
        cfg, flags = cell_config(spec, p, p_star)
        prof = make_profile(spec.alpha)
        grid = Grid.from_config(cfg, run_horizon(cfg, spec.alpha, spec.m, p, spec.source))
        u0 = gaussian_field(grid, amplitude, spec.width)
        outcome, _ = evolve_nonlinear(u0, p, spec.m, spec.source, prof, cfg)
    except Exception as e:
        logger.error(f"Sweep cell p={p}, amplitude={amplitude} failed: {str(e)}", exc_info=True)
        outcome = RunOutcome(kind=OutcomeKind.INCONCLUSIVE, reason=InconclusiveReason.ERROR, message=str(e))
    if flags:
        outcome = outcome.model_copy(update={"flags": list(outcome.flags) + flags})
    return PhaseCell(p=p, amplitude=amplitude, outcome=outcome)


def _run_cell(payload: dict) -> PhaseCell:
    # module level so that worker processes can unpickle it
    spec = SweepSpec.model_validate(payload["spec"])
    return run_cell(spec, payload["p"], payload["amplitude"], payload["p_star"])


def _cells(spec: SweepSpec) -> Iterable[Tuple[float, float]]:
    for p in spec.p_grid:
        for amplitude in spec.amplitude_grid:
            yield p, amplitude


def run_sweep(spec: SweepSpec, jobs: Optional[int] = None, write: bool = True) -> PhaseDiagram:
    """Evolve every (p, amplitude) cell and assemble the phase diagram.

    Cells run in a process pool when jobs > 1; aggregation happens here after a
    sort on (p, amplitude) so the diagram does not depend on completion order.
    """
    jobs = config.SWEEP_JOBS if jobs is None else jobs
    started = time.perf_counter()
    p_star = critical_exponent(spec.alpha, spec.m).p_star
    run = f"sweep(alpha={spec.alpha}, m={spec.m})"
    log_run_event(run, "start", f"cells={len(spec.p_grid) * len(spec.amplitude_grid)}, "
                                f"p_star={p_star}, jobs={jobs}")

    if jobs and jobs > 1:
        spec_json = spec.model_dump(mode="json")
        payloads = [{"spec": spec_json, "p": p, "amplitude": a, "p_star": p_star} for p, a in _cells(spec)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(_run_cell, payloads))
    else:
        cells = [run_cell(spec, p, a, p_star) for p, a in _cells(spec)]

    cells.sort(key=lambda c: (c.p, c.amplitude))
    for cell in cells:
        SWEEP_CELLS_TOTAL.labels(outcome=cell.outcome.kind.value).inc()

    diagram = PhaseDiagram(
        alpha=spec.alpha,
        m=spec.m,
        p_star=p_star,
        cells=cells,
        metadata=DiagramMetadata(
            p_grid=list(spec.p_grid),
            amplitude_grid=list(spec.amplitude_grid),
            config_hash=config_hash(spec),
            wall_time=time.perf_counter() - started,
            created_at=datetime.now(timezone.utc).isoformat(),
        ),
    )
    log_run_event(run, "finish", f"elapsed={diagram.metadata.wall_time:.2f}s, errored={diagram.errored}")

    if write:
        emit(diagram, [EmitFormat.CSV, EmitFormat.JSON], spec.output_dir)
    return diagram
