from pathlib import Path
from typing import Any, Dict, Optional

from .base_experiment import BaseExperiment
from ..models.schemas import KernelRequest
from ..services.linear_semigroup import kernel_upper_bound_check
from ..tools.profile import make_profile


class KernelExperiment(BaseExperiment):
    name = "kernel"
    description = "Upper bound of e^{-tL}<x>^{-1-alpha} by the decaying envelope"
    request_model = KernelRequest

    def execute(self, request: KernelRequest, out_dir: Optional[Path] = None) -> Dict[str, Any]:
        cfg = self.sim_config(request.sim, t_end=request.t_end)
        report = kernel_upper_bound_check(
            make_profile(request.alpha), request.delta, cfg=cfg, diagnostic=request.diagnostic,
        )
        return report.model_dump(mode="json")
