from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from .base_experiment import BaseExperiment
from ..models.schemas import ProfileRequest
from ..tools.profile import make_profile
from ..utils.emit import profile_frame, write_frame_csv
from ..utils.errors import RejectedInputError


class ProfileExperiment(BaseExperiment):
    name = "profile"
    description = "Ground state psi, potential V and harmonic coordinate H on a symmetric sample"
    request_model = ProfileRequest

    def execute(self, request: ProfileRequest, out_dir: Optional[Path] = None) -> Dict[str, Any]:
        if request.n < 2 or request.xmax <= 0:
            raise RejectedInputError("profile sampling needs xmax > 0 and n >= 2")
        prof = make_profile(request.alpha)
        frame = profile_frame(prof, request.xmax, request.n)
        x = frame["x"].to_numpy()

        result = prof.describe()
        result.update({
            "ground_state_residual": prof.ground_state_residual(x),
            "V_at_0": float(prof.V(0.0)),
            "V_at_xmax": float(prof.V(request.xmax)),
            "H_at_xmax": float(frame["H"].iloc[-1]),
            "psi_min": float(np.min(frame["psi"])),
        })
        if out_dir is not None:
            result["artifacts"] = [str(write_frame_csv(frame, out_dir / f"profile_alpha{request.alpha:g}.csv"))]
        return result
