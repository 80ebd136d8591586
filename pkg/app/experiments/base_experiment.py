import asyncio
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type

from pydantic import BaseModel, ValidationError

from ..config import config
from ..models.schemas import SimConfig
from ..utils.errors import RejectedInputError
from ..utils.logger import logger


class BaseExperiment(ABC):
    """One command of the lab: a validated request in, a JSON-ready document out."""

    name: str = ""
    description: str = ""
    request_model: Type[BaseModel]
    local_fields: Tuple[str, ...] = ()  # request fields naming local files; command line only

    def parse(self, payload: Dict[str, Any]) -> BaseModel:
        try:
            return self.request_model.model_validate(payload)
        except ValidationError as e:
            raise RejectedInputError(f"invalid {self.name} request: {e}") from e

    @abstractmethod
    def execute(self, request: BaseModel, out_dir: Optional[Path] = None) -> Dict[str, Any]:
        """Run the experiment and return its result document."""
        pass

    def run(self, payload: Dict[str, Any], out_dir: Optional[str] = None) -> Dict[str, Any]:
        request = self.parse(payload)
        logger.info(f"Experiment {self.name} started with {request.model_dump(mode='json')}")
        started = time.perf_counter()
        result = self.execute(request, Path(out_dir) if out_dir else None)
        elapsed = time.perf_counter() - started
        logger.info(f"Experiment {self.name} finished in {elapsed:.2f}s")
        return {"experiment": self.name, "elapsed": elapsed, "result": result}

    async def run_async(self, payload: Dict[str, Any], timeout: float = config.API_TIMEOUT) -> Dict[str, Any]:
        """run() on a worker thread, bounded by timeout."""
        return await asyncio.wait_for(asyncio.to_thread(self.run, payload), timeout=timeout)

    @staticmethod
    def sim_config(overrides: Dict[str, Any], **defaults: Any) -> SimConfig:
        try:
            return SimConfig.from_config(**{**defaults, **overrides})
        except ValidationError as e:
            raise RejectedInputError(f"invalid simulation settings: {e}") from e
