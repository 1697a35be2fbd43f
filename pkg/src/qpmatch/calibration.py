"""Calibration of the pool-size constant of the sieve schedule."""

from __future__ import annotations

import json
import math
import os
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import ParameterError

DATA_FILE = Path(__file__).with_name("data") / "calibration.json"
ENV_VAR = "QPMATCH_CALIBRATION"
FALLBACK_CONSTANT = 1.0
# every width the halving recursion visits for the acceptance sizes (n <= 16 at d=1, n <= 8 at d=2)
DEFAULT_SIZES: tuple[tuple[int, int], ...] = tuple((n, 1) for n in range(2, 17)) + tuple((n, 2) for n in range(2, 9))


def calibration_path() -> Path:
    return Path(os.environ.get(ENV_VAR, DATA_FILE))


@lru_cache(maxsize=8)
def _load(path: str) -> float:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        return FALLBACK_CONSTANT
    value = float(data["pool_constant"])
    if not value > 0:
        raise ParameterError(f"calibration file {path} holds a non-positive constant")
    return value


def load_pool_constant() -> float:
    return _load(str(calibration_path()))


@lru_cache(maxsize=32)
def _probe_instance(n: int, d: int):
    from .sieve import HiddenShiftInstance

    # only label statistics matter for list-size success; any exact instance will do
    table = np.arange((1 << n) ** d, dtype=np.int64)
    return HiddenShiftInstance(n, d, table, table, table.size, shift=(0,) * d, check_injective=False)


def sieve_success_rate(
    n: int, d: int, pool_constant: float, trials: int, seed: int, k_target: int = 4
) -> tuple[int, int]:
    """``(successes, trials)`` of seeded sieve runs with the given constant."""
    from .sieve import make_schedule, run_sieve

    schedule = make_schedule(n, d, pool_constant)
    inst = _probe_instance(n, d)
    hits = 0
    for i in range(trials):
        rng = np.random.default_rng([seed, n, d, i])
        hits += run_sieve(inst, schedule, k_target, rng).success
    return hits, trials


@dataclass
class CalibrationResult:
    pool_constant: float
    target: float
    trials: int
    seed: int
    k_target: int
    sizes: list[tuple[int, int]]
    history: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "pool_constant": self.pool_constant,
            "target": self.target,
            "trials": self.trials,
            "seed": self.seed,
            "k_target": self.k_target,
            "sizes": [list(s) for s in self.sizes],
            "history": self.history,
        }

    def write(self, path: Path | str | None = None) -> Path:
        path = Path(path) if path is not None else calibration_path()
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")
        _load.cache_clear()
        return path


def calibrate(
    sizes: Sequence[tuple[int, int]] = DEFAULT_SIZES,
    *,
    target: float = 0.75,
    trials: int = 100,
    seed: int = 0,
    k_target: int = 4,
    lo: float = 0.01,
    hi: float = 64.0,
    rel_tol: float = 0.05,
    max_iter: int = 40,
) -> CalibrationResult:
    """Geometric bisection for the smallest constant reaching ``target`` success at every size."""
    sizes = [tuple(int(v) for v in s) for s in sizes]
    if not sizes:
        raise ParameterError("at least one reference size is required")
    history: list[dict] = []

    def worst(c: float) -> float:
        rates = {}
        for n, d in sizes:
            hits, total = sieve_success_rate(n, d, c, trials, seed, k_target)
            rates[f"{n},{d}"] = hits / total
        history.append({"pool_constant": c, "rates": rates})
        return min(rates.values())

    if worst(hi) < target:
        raise ParameterError(f"success below {target} even at pool_constant={hi}; no convergence")
    for _ in range(max_iter):
        if hi / lo <= 1 + rel_tol:
            break
        mid = math.sqrt(lo * hi)
        if worst(mid) >= target:
            hi = mid
        else:
            lo = mid
    else:
        raise ParameterError(f"bisection did not converge in {max_iter} iterations")
    return CalibrationResult(hi, target, trials, seed, k_target, sizes, history)
