"""Evaluation-side quantities: the frequency CRLB, squared errors, and the
magnitude-spectrum MSE metric.

By default the spectral metric is exactly the DFT-magnitude training loss on
a ``10*log10`` scale, so loss traces and final scores are directly
comparable. The experiment sweeps instead pass ``normalize="peak"``, which
divides each signal by its largest absolute sample before transforming. For
zero-phase sinusoid banks the peak is the coherent sum of amplitudes, so the
peak-normalized metric between independent random parameter draws scales as
1/K in the component count — the dilution behaviour the multi-sinusoid
experiment checks against — whereas the raw metric grows with K.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import UndefinedBoundError, ValidationError
from .losses import _dft_bins
from .signal_model import snr_to_sigma

__all__ = [
    "CrlbQuery",
    "SpectralMse",
    "SPECTRAL_DB_FLOOR",
    "crlb_frequency",
    "freq_sq_error",
    "spectral_mse_db",
    "db_from_mse",
]

SPECTRAL_DB_FLOOR = -300.0


@dataclass(frozen=True)
class CrlbQuery:
    """Scenario for the frequency-variance lower bound.

    Either give ``sigma`` explicitly (it must be consistent with ``snr_db``
    under the package SNR convention, total sinusoid power over noise power)
    or leave it ``None`` to derive it from ``snr_db`` and ``amplitude``.
    """

    snr_db: float
    length: int
    amplitude: float = 1.0
    sigma: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValidationError(f"amplitude must be finite and > 0, got {self.amplitude}")
        if self.length < 3:
            raise ValidationError(f"length must be >= 3, got {self.length}")
        derived = snr_to_sigma(self.snr_db, [self.amplitude])
        if self.sigma is None:
            object.__setattr__(self, "sigma", derived)
        elif not np.isclose(self.sigma, derived, rtol=1e-9, atol=0.0):
            raise ValidationError(
                f"sigma {self.sigma} is inconsistent with snr_db {self.snr_db} "
                f"(expected {derived})"
            )


def crlb_frequency(query: CrlbQuery) -> float:
    """Lower bound on the variance of unbiased frequency estimators.

    For a single real sinusoid in white Gaussian noise the bound is
    ``12 / (eta * N * (N**2 - 1))`` with linear SNR ``eta = a**2 / (2*sigma**2)``,
    in squared radians per squared sample.
    """
    if query.sigma == 0:
        raise UndefinedBoundError("the bound is undefined for zero noise")
    eta = query.amplitude**2 / (2.0 * query.sigma**2)
    n = query.length
    return 12.0 / (eta * n * (n**2 - 1.0))


def freq_sq_error(estimated: float, true: float) -> float:
    """Squared error between two frequencies in radians/sample, both in [0, pi]."""
    return (estimated - true) ** 2


class SpectralMse(NamedTuple):
    """A decibel-scale spectral MSE plus a flag marking the zero-MSE floor."""

    db: float
    floored: bool


def db_from_mse(mse: float, floor_db: float = SPECTRAL_DB_FLOOR) -> SpectralMse:
    """``10*log10(mse)``, clamped to a finite floor instead of -inf."""
    if mse < 0 or not np.isfinite(mse):
        raise ValidationError(f"mse must be finite and >= 0, got {mse}")
    if mse == 0:
        return SpectralMse(floor_db, True)
    db = 10.0 * np.log10(mse)
    if db <= floor_db:
        return SpectralMse(floor_db, True)
    return SpectralMse(float(db), False)


def _peak_normalize(x: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(x))
    return x / peak if peak > 0 else x


def spectral_mse_db(
    predicted: np.ndarray,
    target: np.ndarray,
    dft_size: int | None = None,
    normalize: str | None = None,
    floor_db: float = SPECTRAL_DB_FLOOR,
) -> SpectralMse:
    """Mean squared error between magnitude spectra, in decibels.

    Parameters
    ----------
    predicted, target : np.ndarray
        Equal-length 1-D signals.
    dft_size : int, optional
        Transform size M >= N; defaults to the signal length.
    normalize : {None, "peak"}
        None (default) compares raw spectra, making the result exactly the
        DFT-magnitude training loss on a dB scale; "peak" divides each
        signal by its largest absolute sample before transforming, which is
        what the multi-sinusoid sweep uses so scores are comparable across
        component counts.
    floor_db : float
        Value reported (with ``floored=True``) when the MSE is zero.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape or predicted.ndim != 1:
        raise ValidationError(
            f"predicted and target must be equal-length 1-D signals, got shapes "
            f"{predicted.shape} and {target.shape}"
        )
    if normalize not in ("peak", None):
        raise ValidationError(f"unknown normalize mode {normalize!r}")
    if normalize == "peak":
        predicted = _peak_normalize(predicted)
        target = _peak_normalize(target)
    size = dft_size if dft_size is not None else predicted.shape[0]
    if size < predicted.shape[0]:
        raise ValidationError(
            f"dft_size {size} is smaller than signal length {predicted.shape[0]}"
        )
    diff = np.abs(_dft_bins(predicted, size)) - np.abs(_dft_bins(target, size))
    return db_from_mse(float(np.mean(diff * diff)), floor_db)
