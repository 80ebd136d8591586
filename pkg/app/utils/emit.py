import math
import os
import tempfile
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd
from jinja2 import Environment, FileSystemLoader

from app.models.enums import EmitFormat, NormKind
from app.models.schemas import PhaseDiagram, MemberRatio
from app.services.linear_semigroup import Trajectory
from app.tools.profile import PotentialProfile
from app.utils.logger import logger

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "templates"
CSV_COLUMNS = ["alpha", "m", "p", "amplitude", "outcome", "t_blowup_est", "linf_slope", "flags"]

PathLike = Union[str, Path]

_env = Environment(loader=FileSystemLoader(str(TEMPLATE_DIR)), autoescape=True,
                   trim_blocks=True, lstrip_blocks=True)


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write through a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n")


# Phase diagrams

def _cell_flags(outcome) -> str:
    flags = list(outcome.flags)
    if outcome.reason is not None:
        flags.append(f"reason:{outcome.reason.value}")
    if outcome.boundary_leak and "boundary_leak" not in flags:
        flags.append("boundary_leak")
    return ";".join(flags)


def diagram_to_frame(diagram: PhaseDiagram) -> pd.DataFrame:
    rows = []
    for cell in diagram.cells:
        o = cell.outcome
        rows.append({
            "alpha": diagram.alpha,
            "m": diagram.m,
            "p": cell.p,
            "amplitude": cell.amplitude,
            "outcome": o.kind.value,
            "t_blowup_est": o.t_est,
            "linf_slope": o.linf_slope,
            "flags": _cell_flags(o),
        })
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def write_csv(diagram: PhaseDiagram, out_dir: PathLike) -> Path:
    return atomic_write_text(Path(out_dir) / "phase_diagram.csv", frame_to_csv(diagram_to_frame(diagram)))


def write_json(diagram: PhaseDiagram, out_dir: PathLike) -> Path:
    return atomic_write_text(Path(out_dir) / "phase_diagram.json", diagram.model_dump_json(indent=2))


def _linear_scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def render_phase_svg(diagram: PhaseDiagram, width: int = 640, height: int = 420) -> str:
    """p on the x-axis, log10 amplitude on the y-axis, one glyph per cell, one p_star line."""
    left, right, top, bottom = 70, width - 30, 40, height - 60
    p_values = diagram.metadata.p_grid
    amps = diagram.metadata.amplitude_grid
    p_lo, p_hi = min(p_values), max(p_values)
    if math.isfinite(diagram.p_star):
        p_lo, p_hi = min(p_lo, diagram.p_star), max(p_hi, diagram.p_star)
    pad = 0.05 * (p_hi - p_lo) if p_hi > p_lo else 0.5
    sx = _linear_scale(p_lo - pad, p_hi + pad, left, right)

    log_amps = [math.log10(a) for a in amps]
    a_lo, a_hi = min(log_amps), max(log_amps)
    a_pad = 0.1 * (a_hi - a_lo) if a_hi > a_lo else 0.5
    sy = _linear_scale(a_lo - a_pad, a_hi + a_pad, bottom, top)

    glyphs = [{
        "kind": cell.outcome.kind.value,
        "x": round(sx(cell.p), 2),
        "y": round(sy(math.log10(cell.amplitude)), 2),
        "title": f"p={cell.p:g}, amplitude={cell.amplitude:g}: {cell.outcome.kind.value}",
    } for cell in diagram.cells]

    clamped = not math.isfinite(diagram.p_star)
    p_star_x = right if clamped else round(sx(diagram.p_star), 2)
    return _env.get_template("phase_diagram.svg.j2").render(
        width=width, height=height, left=left, right=right, top=top, bottom=bottom,
        glyphs=glyphs,
        x_ticks=[{"x": round(sx(p), 2), "label": f"{p:g}"} for p in p_values],
        y_ticks=[{"y": round(sy(la), 2), "label": f"{a:g}"} for a, la in zip(amps, log_amps)],
        p_star_x=p_star_x,
        p_star_label="p* = inf" if clamped else f"p* = {diagram.p_star:.4g}",
        title=f"alpha={diagram.alpha:g}, m={diagram.m:g}",
    )


def write_svg(diagram: PhaseDiagram, out_dir: PathLike) -> Path:
    return atomic_write_text(Path(out_dir) / "phase_diagram.svg", render_phase_svg(diagram))


def emit(diagram: PhaseDiagram, formats: Sequence[Union[EmitFormat, str]], out_dir: PathLike) -> List[Path]:
    writers = {EmitFormat.CSV: write_csv, EmitFormat.JSON: write_json, EmitFormat.SVG: write_svg}
    paths = []
    for fmt in formats:
        path = writers[EmitFormat(fmt)](diagram, out_dir)
        logger.info(f"Wrote {path}")
        paths.append(path)
    return paths


# Trajectories and profiles

def trajectory_to_frame(traj: Trajectory) -> pd.DataFrame:
    """Dense per-step series when the run recorded them, else the snapshot norms."""
    dense = traj.meta.get("dense")
    if dense is not None:
        return pd.DataFrame({
            "t": dense["times"],
            "linf": dense["linf"],
            "linf_psi_inv": dense["linf_psi_inv"],
            "l1_psi": dense["mass"],
            "source_rate": dense["source_rate"],
        })
    frame = pd.DataFrame({"t": traj.t_array})
    for kind in (NormKind.LINF, NormKind.LINF_PSI_INV, NormKind.L1_PSI, NormKind.L2):
        frame[kind.value] = traj.norm_series(kind)
    return frame


def write_trajectory_csv(traj: Trajectory, path: PathLike) -> Path:
    return atomic_write_text(path, frame_to_csv(trajectory_to_frame(traj)))


def render_norm_decay_svg(traj: Trajectory, kinds: Sequence[NormKind] = (NormKind.LINF, NormKind.LINF_PSI_INV),
                          width: int = 640, height: int = 420) -> str:
    """log-log polylines of the snapshot norms over t > 0."""
    left, right, top, bottom = 70, width - 30, 40, height - 60
    t = traj.t_array
    series: Dict[str, np.ndarray] = {}
    for kind in kinds:
        values = traj.norm_series(kind)
        keep = (t > 0) & np.isfinite(values) & (values > 0)
        if keep.sum() >= 2:
            series[kind.value] = np.column_stack([np.log10(t[keep]), np.log10(values[keep])])
    if not series:
        raise ValueError("no positive norm samples to plot")

    stacked = np.vstack(list(series.values()))
    sx = _linear_scale(stacked[:, 0].min(), stacked[:, 0].max(), left, right)
    sy = _linear_scale(stacked[:, 1].min(), stacked[:, 1].max(), bottom, top)
    lines = [{
        "name": name,
        "points": " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts),
    } for name, pts in series.items()]
    return _env.get_template("norm_decay.svg.j2").render(
        width=width, height=height, left=left, right=right, top=top, bottom=bottom,
        lines=lines,
        t_range=(10 ** stacked[:, 0].min(), 10 ** stacked[:, 0].max()),
        title=f"alpha={traj.profile.alpha:g} ({traj.meta.get('kind', 'run')})",
    )


def write_norm_decay_svg(traj: Trajectory, path: PathLike, kinds: Sequence[NormKind] = (NormKind.LINF, NormKind.LINF_PSI_INV)) -> Path:
    return atomic_write_text(path, render_norm_decay_svg(traj, kinds))


def profile_frame(prof: PotentialProfile, xmax: float, n: int) -> pd.DataFrame:
    x = np.linspace(-xmax, xmax, n)
    return pd.DataFrame({
        "x": x,
        "psi": prof.psi(x),
        "psi_prime": prof.psi_prime(x),
        "V": prof.V(x),
        "H": prof.harmonic_coordinates(x),
    })


def write_frame_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    return atomic_write_text(path, frame_to_csv(frame))


# Inequality families

def member_ratios_frame(rows: Sequence[MemberRatio]) -> pd.DataFrame:
    """One row per family member, one column per ratio."""
    return pd.DataFrame([{
        "label": row.label,
        "family": row.family.value,
        "center": row.center,
        "width": row.width,
        "amplitude": row.amplitude,
        **row.ratios,
    } for row in rows])
