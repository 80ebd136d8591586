from prometheus_client import Counter, Histogram

RUNS_TOTAL = Counter(
    "fujita_runs_total",
    "Nonlinear runs by classified outcome",
    ["outcome"],
)

RUN_SECONDS = Histogram(
    "fujita_run_seconds",
    "Wall time of nonlinear runs",
    buckets=(0.1, 0.5, 1, 2, 5, 10, 30, 60, 120, 300, 600),
)

SWEEP_CELLS_TOTAL = Counter(
    "fujita_sweep_cells_total",
    "Phase diagram cells by outcome",
    ["outcome"],
)

CHECKS_TOTAL = Counter(
    "fujita_checks_total",
    "Invariant and inequality checks by verdict",
    ["check", "passed"],
)


def record_check(check: str, passed: bool) -> None:
    CHECKS_TOTAL.labels(check=check, passed=str(bool(passed)).lower()).inc()
