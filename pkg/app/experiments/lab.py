from typing import Any, Dict, List, Optional

from .base_experiment import BaseExperiment
from .decay_experiment import DecayExperiment
from .exponent_experiment import ExponentExperiment
from .inequality_experiment import InequalityExperiment
from .kernel_experiment import KernelExperiment
from .profile_experiment import ProfileExperiment
from .run_experiment import RunExperiment
from .sweep_experiment import SweepExperiment
from .testfn_experiment import TestFnExperiment
from ..config import config
from ..utils.errors import RejectedInputError
from ..utils.logger import logger


class LabOrchestrator:
    """Routes a command name to its experiment."""

    def __init__(self, jobs: Optional[int] = None):
        self.experiments: Dict[str, BaseExperiment] = {
            exp.name: exp
            for exp in (
                ProfileExperiment(),
                ExponentExperiment(),
                DecayExperiment(),
                KernelExperiment(),
                RunExperiment(),
                InequalityExperiment(),
                TestFnExperiment(),
                SweepExperiment(jobs=jobs),
            )
        }

    def get_experiment(self, name: str) -> BaseExperiment:
        experiment = self.experiments.get(name)
        if experiment is None:
            logger.error(f"No experiment found for: {name}")
            raise RejectedInputError(f"unknown experiment {name!r}; choose from {sorted(self.experiments)}")
        return experiment

    def catalogue(self) -> List[Dict[str, Any]]:
        return [
            {"name": exp.name, "description": exp.description, "schema": exp.request_model.model_json_schema()}
            for exp in self.experiments.values()
        ]

    def run(self, name: str, payload: Dict[str, Any], out_dir: Optional[str] = None) -> Dict[str, Any]:
        return self.get_experiment(name).run(payload, out_dir)

    async def run_async(self, name: str, payload: Dict[str, Any], timeout: float = config.API_TIMEOUT) -> Dict[str, Any]:
        return await self.get_experiment(name).run_async(payload, timeout)


lab = LabOrchestrator()
