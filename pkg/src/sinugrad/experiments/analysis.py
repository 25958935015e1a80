"""Curve and result-set analysis used by the runners and their tests."""

import numpy as np

from ..errors import ValidationError
from ..metrics import db_from_mse

__all__ = [
    "count_strict_local_minima",
    "ripple_amplitude",
    "mean_median_db",
    "detect_plateau_drops",
]


def count_strict_local_minima(values) -> int:
    """Interior points strictly below both neighbours.

    Equivalent to a sign change of the first differences from negative to
    positive; plateaus (equal neighbours) do not count.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 3:
        return 0
    return int(np.sum((v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])))


def ripple_amplitude(freqs, values, target_freq: float, lobe_width: float) -> float:
    """Peak-to-trough spread of a loss curve away from the target's main lobe.

    Points with ``|freq - target_freq| <= lobe_width`` are excluded, then
    the spread is ``max - min`` of the remaining curve. With a grid much
    coarser than the ripple period this still measures the ripple envelope.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if freqs.shape != values.shape or freqs.ndim != 1:
        raise ValidationError("freqs and values must be 1-D arrays of equal length")
    off_lobe = np.abs(freqs - target_freq) > lobe_width
    if not off_lobe.any():
        raise ValidationError(
            f"no grid points outside the lobe |freq - {target_freq}| <= {lobe_width}"
        )
    kept = values[off_lobe]
    return float(np.max(kept) - np.min(kept))


def mean_median_db(squared_errors) -> tuple[float, float]:
    """(10*log10(mean), 10*log10(median)) of a set of squared errors.

    Aggregation happens in the linear domain first, matching "mean squared
    error plotted on a decibel scale". Zero aggregates hit the dB floor.
    """
    errors = np.asarray(squared_errors, dtype=np.float64)
    if errors.size == 0:
        raise ValidationError("cannot aggregate an empty error set")
    if (errors < 0).any():
        raise ValidationError("squared errors must be non-negative")
    return (
        db_from_mse(float(np.mean(errors))).db,
        db_from_mse(float(np.median(errors))).db,
    )


def detect_plateau_drops(
    steps,
    metric_db,
    total_steps: int | None = None,
    flat_fraction: float = 0.10,
    drop_fraction: float = 0.05,
    drop_db: float = 3.0,
    flat_tolerance_db: float = 1.0,
) -> int:
    """Count plateau-then-drop transitions in a traced metric.

    A transition is a fall of more than ``drop_db`` within at most
    ``drop_fraction`` of the total steps, preceded by at least
    ``flat_fraction`` of the total steps over which the metric stayed
    within ``flat_tolerance_db``. Events are counted left to right without
    overlap. This is a descriptive heuristic for staircase-shaped
    trajectories, not a hard invariant.
    """
    steps = np.asarray(steps, dtype=np.float64)
    db = np.asarray(metric_db, dtype=np.float64)
    if steps.shape != db.shape or steps.ndim != 1:
        raise ValidationError("steps and metric_db must be 1-D arrays of equal length")
    if steps.size < 3:
        return 0
    total = float(total_steps) if total_steps is not None else float(steps[-1] - steps[0])
    if total <= 0:
        return 0
    drop_window = drop_fraction * total
    flat_window = flat_fraction * total

    count = 0
    cursor = 0  # first index allowed to contribute to the next event
    j = 1
    while j < steps.size:
        i = j
        while i - 1 >= cursor and steps[j] - steps[i - 1] <= drop_window:
            i -= 1
        start = i + int(np.argmax(db[i : j + 1]))
        if db[start] - db[j] > drop_db and steps[start] - steps[cursor] >= flat_window:
            f = start
            while f - 1 >= cursor and steps[start] - steps[f - 1] <= flat_window:
                f -= 1
            plateau = db[f : start + 1]
            if plateau.size >= 2 and np.max(plateau) - np.min(plateau) <= flat_tolerance_db:
                count += 1
                cursor = j
                j = j + 1
                continue
        j += 1
    return count
