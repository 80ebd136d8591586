from pathlib import Path
from typing import Any, Dict, Optional

from .base_experiment import BaseExperiment
from ..models.schemas import ExponentRequest
from ..tools.exponent import (
    alpha_star,
    alpha_star_residual,
    critical_exponent,
    fujita_exponent,
    predicted_decay_slopes,
    regime_report,
)


class ExponentExperiment(BaseExperiment):
    name = "exponent"
    description = "Critical exponent p_*(alpha, m) and, given p, the predicted regime"
    request_model = ExponentRequest

    def execute(self, request: ExponentRequest, out_dir: Optional[Path] = None) -> Dict[str, Any]:
        result = critical_exponent(request.alpha, request.m).model_dump(mode="json")
        result.update({
            "alpha_star": alpha_star(),
            "alpha_star_residual": alpha_star_residual(),
            "fujita_exponent_1d": fujita_exponent(1),
            "predicted_decay_slopes": predicted_decay_slopes(request.alpha),
        })
        if request.p is not None:
            result["regime"] = regime_report(request.alpha, request.m, request.p).model_dump(mode="json")
        return result
