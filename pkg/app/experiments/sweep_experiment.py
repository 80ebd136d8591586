from pathlib import Path
from typing import Any, Dict, Optional

from .base_experiment import BaseExperiment
from ..models.enums import EmitFormat
from ..models.schemas import SweepSpec
from ..services.sweep import run_sweep
from ..utils.emit import emit


class SweepExperiment(BaseExperiment):
    name = "sweep"
    description = "Phase diagram over (p, amplitude) against p_*(alpha, m)"
    request_model = SweepSpec

    def __init__(self, jobs: Optional[int] = None):
        self.jobs = jobs

    def execute(self, request: SweepSpec, out_dir: Optional[Path] = None) -> Dict[str, Any]:
        if out_dir is not None:
            request = request.model_copy(update={"output_dir": str(out_dir)})
        diagram = run_sweep(request, jobs=self.jobs)
        artifacts = emit(diagram, [EmitFormat.SVG], request.output_dir)
        return {
            "alpha": diagram.alpha,
            "m": diagram.m,
            "p_star": diagram.p_star,
            "errored": diagram.errored,
            "config_hash": diagram.metadata.config_hash,
            "cells": [
                {
                    "p": cell.p,
                    "amplitude": cell.amplitude,
                    "outcome": cell.outcome.kind.value,
                    "reason": cell.outcome.reason.value if cell.outcome.reason else None,
                    "t_est": cell.outcome.t_est,
                    "flags": cell.outcome.flags,
                }
                for cell in diagram.cells
            ],
            "artifacts": [str(Path(request.output_dir) / name)
                          for name in ("phase_diagram.csv", "phase_diagram.json")] + [str(p) for p in artifacts],
        }
