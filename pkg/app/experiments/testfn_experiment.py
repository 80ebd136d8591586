from pathlib import Path
from typing import Any, Dict, Optional

from .base_experiment import BaseExperiment
from ..models.schemas import TestFnRequest
from ..tools.profile import make_profile
from ..tools.testfn import verify_testfn_bound


class TestFnExperiment(BaseExperiment):
    __test__ = False

    name = "testfn"
    description = "Uniform constant of the space-time cutoff bound and its plateau residual"
    request_model = TestFnRequest

    def execute(self, request: TestFnRequest, out_dir: Optional[Path] = None) -> Dict[str, Any]:
        report = verify_testfn_bound(make_profile(request.alpha), request.R, request.p,
                                     n_x=request.samples, n_t=(request.samples + 1) // 2)
        return report.model_dump(mode="json")
