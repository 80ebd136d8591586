from pathlib import Path
from typing import Any, Dict, Optional

from .base_experiment import BaseExperiment
from ..models.enums import FamilyKind
from ..models.schemas import InequalityRequest
from ..tools.inequalities import (
    INEQUALITY_GROUPS,
    TestFamily,
    default_family,
    evaluate_family,
    summarize,
    hardy_failure_diagnostic,
)
from ..tools.profile import make_profile
from ..utils.emit import atomic_write_text, member_ratios_frame, write_frame_csv
from ..utils.errors import RejectedInputError


class InequalityExperiment(BaseExperiment):
    name = "ineq"
    description = "Empirical constants of the Nash, Hardy and weighted Nash inequalities over a test family"
    request_model = InequalityRequest

    def execute(self, request: InequalityRequest, out_dir: Optional[Path] = None) -> Dict[str, Any]:
        kinds = INEQUALITY_GROUPS.get(request.kind)
        if kinds is None:
            raise RejectedInputError(f"unknown inequality {request.kind!r}; choose from {sorted(INEQUALITY_GROUPS)}")
        if request.family == "default":
            families = default_family()
        else:
            try:
                families = [TestFamily(kind=FamilyKind(request.family))]
            except ValueError:
                raise RejectedInputError(f"unknown test family {request.family!r}")

        prof = make_profile(request.alpha)
        rows = evaluate_family(families, kinds, prof, diagnostic=request.diagnostic)
        summary = summarize(rows, kinds, request.alpha)
        result = summary.model_dump(mode="json")
        result["rows"] = [row.model_dump(mode="json") for row in rows]
        if request.kind == "hardy" and request.diagnostic:
            result["hardy_growth"] = [{"width": w, "r1": r1} for w, r1 in hardy_failure_diagnostic(prof)]
        if out_dir is not None:
            stem = f"ineq_{request.kind}_alpha{request.alpha:g}_{request.family}"
            result["artifacts"] = [
                str(write_frame_csv(member_ratios_frame(rows), out_dir / f"{stem}.csv")),
                str(atomic_write_text(out_dir / f"{stem}.json", summary.model_dump_json(indent=2))),
            ]
        return result
