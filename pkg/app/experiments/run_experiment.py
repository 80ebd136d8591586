from pathlib import Path
from typing import Any, Dict, Optional

from .base_experiment import BaseExperiment
from ..models.enums import SourceKind
from ..models.schemas import RunRequest, SourceSpec
from ..services.nonlinear_solver import (
    evolve_nonlinear,
    check_linear_comparison,
    check_star_monotonicity,
    run_horizon,
)
from ..tools.exponent import regime_report
from ..tools.grid_field import Grid, gaussian_field, field_to_frame
from ..tools.profile import make_profile
from ..utils.emit import write_trajectory_csv, write_norm_decay_svg, write_frame_csv
from ..utils.errors import RejectedInputError
from ..utils.logger import logger


class RunExperiment(BaseExperiment):
    name = "run"
    description = "One nonlinear run u_t - u_xx + V u = <x>^{-m} u^p from a Gaussian, classified"
    request_model = RunRequest
    local_fields = ("plot",)

    def execute(self, request: RunRequest, out_dir: Optional[Path] = None) -> Dict[str, Any]:
        cfg = self.sim_config(request.sim)
        prof = make_profile(request.alpha)
        if request.localized_source is not None:
            src = SourceSpec(kind=SourceKind.LOCALIZED, width=request.localized_source)
        else:
            src = SourceSpec()
        grid = Grid.from_config(cfg, run_horizon(cfg, request.alpha, request.m, request.p, src))
        u0 = gaussian_field(grid, request.amplitude, request.width)

        outcome, traj = evolve_nonlinear(u0, request.p, request.m, src, prof, cfg,
                                         with_linear=request.compare_linear)
        result = {
            "outcome": outcome.model_dump(mode="json", exclude={"times", "linf", "linf_psi_inv", "l1_psi"}),
            "prediction": regime_report(request.alpha, request.m, request.p).model_dump(mode="json"),
            "source": traj.meta["source"].model_dump(mode="json"),
        }
        if request.compare_linear:
            result["linear_comparison_deficit"] = check_linear_comparison(traj)
        if src.kind == SourceKind.LOCALIZED:
            try:
                result["star_monotonicity_violation"] = check_star_monotonicity(traj, prof)
            except RejectedInputError as e:
                logger.info(f"Monotonicity check skipped: {str(e)}")

        artifacts = []
        if out_dir is not None:
            stem = f"run_alpha{request.alpha:g}_m{request.m:g}_p{request.p:g}_a{request.amplitude:g}"
            artifacts += [
                write_trajectory_csv(traj, out_dir / f"{stem}.csv"),
                write_norm_decay_svg(traj, out_dir / f"{stem}.svg"),
                write_frame_csv(field_to_frame(traj.final, prof), out_dir / f"{stem}_field.csv"),
            ]
        if request.plot:
            artifacts.append(write_norm_decay_svg(traj, Path(request.plot)))
        if artifacts:
            result["artifacts"] = [str(path) for path in artifacts]
        return result
