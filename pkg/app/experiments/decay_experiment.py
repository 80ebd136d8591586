from pathlib import Path
from typing import Any, Dict, Optional

from .base_experiment import BaseExperiment
from ..models.schemas import DecayRequest
from ..services.linear_semigroup import evolve_linear, check_contraction, smoothing_fit
from ..tools.grid_field import Grid, gaussian_field
from ..tools.profile import make_profile
from ..tools.testfn import log_growth_check
from ..utils.emit import write_trajectory_csv, write_norm_decay_svg
from ..utils.errors import RejectedInputError
from ..utils.logger import logger


class DecayExperiment(BaseExperiment):
    name = "decay"
    description = "Linear semigroup from a Gaussian: contraction checks and the (q1 -> q2) decay rate"
    request_model = DecayRequest

    def execute(self, request: DecayRequest, out_dir: Optional[Path] = None) -> Dict[str, Any]:
        cfg = self.sim_config(request.sim, t_end=request.t_end)
        prof = make_profile(request.alpha)
        grid = Grid.from_config(cfg, request.t_end)
        f0 = gaussian_field(grid, 1.0, request.width)
        window = request.window or (request.t_end / 100.0, request.t_end)

        traj = evolve_linear(f0, request.t_end, prof, cfg, extra_times=window)
        fit = smoothing_fit(traj, request.q1, request.q2, window, energy=request.energy)
        result = {
            "fit": fit.model_dump(mode="json"),
            "contraction": check_contraction(traj, prof).model_dump(mode="json"),
            "boundary_leak": traj.boundary_leak,
            "snapshots": len(traj),
        }
        if request.alpha > -0.5:
            try:
                result["log_growth"] = log_growth_check(traj, prof).model_dump(mode="json")
            except RejectedInputError as e:
                logger.debug(f"Skipping log-growth fit: {str(e)}")

        if out_dir is not None:
            stem = f"decay_alpha{request.alpha:g}"
            result["artifacts"] = [
                str(write_trajectory_csv(traj, out_dir / f"{stem}.csv")),
                str(write_norm_decay_svg(traj, out_dir / f"{stem}.svg")),
            ]
        return result
