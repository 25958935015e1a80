"""Training losses (time-domain MSE and DFT-magnitude MSE) and the DFT primitive.

The DFT is unnormalized, ``X_m = sum_n x_n exp(-2j*pi*m*n/M)``, zero-padding
the input up to the transform size. Power-of-two sizes take an iterative
radix-2 path; other sizes fall back to the O(M^2) matrix transform.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ValidationError

__all__ = [
    "LossKind",
    "Spectrum",
    "dft",
    "loss_forward",
    "loss_backward",
]

TIME_MSE = "time-mse"
DFT_MAG_MSE = "dft-mag-mse"


@dataclass(frozen=True)
class LossKind:
    """Selects the training loss.

    ``dft_size`` applies to the DFT-magnitude loss only; ``None`` means
    "use the signal length". Zero-padding beyond the signal is allowed,
    truncation is not.
    """

    kind: str
    dft_size: int | None = None

    def __post_init__(self):
        if self.kind not in (TIME_MSE, DFT_MAG_MSE):
            raise ValidationError(f"unknown loss kind {self.kind!r}")
        if self.kind == TIME_MSE and self.dft_size is not None:
            raise ValidationError("dft_size only applies to the DFT-magnitude loss")
        if self.dft_size is not None and self.dft_size < 1:
            raise ValidationError(f"dft_size must be positive, got {self.dft_size}")

    @classmethod
    def time_mse(cls) -> "LossKind":
        return cls(TIME_MSE)

    @classmethod
    def dft_mag_mse(cls, dft_size: int | None = None) -> "LossKind":
        return cls(DFT_MAG_MSE, dft_size)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Complex DFT bins, with a magnitude view."""

    bins: np.ndarray

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)

    @property
    def size(self) -> int:
        return self.bins.size


def _is_pow2(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@lru_cache(maxsize=32)
def _radix2_plan(m: int):
    """Bit-reversal permutation and per-stage twiddle factors for size m."""
    bits = m.bit_length() - 1
    idx = np.arange(m)
    rev = np.zeros(m, dtype=np.intp)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    twiddles = []
    size = 2
    while size <= m:
        k = np.arange(size // 2)
        twiddles.append(np.exp(-2j * np.pi * k / size))
        size *= 2
    return rev, tuple(twiddles)


def _fft_radix2(x: np.ndarray) -> np.ndarray:
    """Iterative decimation-in-time FFT over the last axis (power-of-two length)."""
    m = x.shape[-1]
    if m == 1:
        return x.astype(np.complex128, copy=True)
    rev, twiddles = _radix2_plan(m)
    a = np.ascontiguousarray(x[..., rev], dtype=np.complex128)
    lead = a.shape[:-1]
    size = 2
    for tw in twiddles:
        half = size // 2
        blocks = a.reshape(*lead, m // size, size)
        t = blocks[..., half:] * tw
        e = blocks[..., :half]
        blocks[..., half:] = e - t
        blocks[..., :half] = e + t
        size *= 2
    return a


def _naive_dft(x: np.ndarray, size: int) -> np.ndarray:
    """Direct O(M^2) matrix DFT over the last axis (already padded to ``size``)."""
    m = np.arange(size)
    w = np.exp(-2j * np.pi * np.outer(m, m) / size)
    # w is symmetric, so x @ w transforms the last axis for any batch shape.
    return x.astype(np.complex128) @ w


def _pad(x: np.ndarray, size: int) -> np.ndarray:
    if x.shape[-1] == size:
        return x
    out = np.zeros(x.shape[:-1] + (size,), dtype=x.dtype)
    out[..., : x.shape[-1]] = x
    return out


def _dft_bins(x: np.ndarray, size: int) -> np.ndarray:
    """Transform (real or complex) input, zero-padded to ``size``. Batch-safe."""
    padded = _pad(np.asarray(x), size)
    if _is_pow2(size):
        return _fft_radix2(padded)
    return _naive_dft(padded, size)


def dft(signal: np.ndarray, size: int | None = None) -> Spectrum:
    """Discrete Fourier transform of a signal, zero-padded to ``size``.

    Parameters
    ----------
    signal : np.ndarray
        1-D real or complex input of length N.
    size : int, optional
        Transform length M >= N. Defaults to N.

    Returns
    -------
    Spectrum
        ``X_m = sum_n x_n exp(-2j*pi*m*n/M)`` for m in [0, M).
    """
    signal = np.asarray(signal)
    if signal.ndim != 1:
        raise ValidationError(f"signal must be 1-D, got shape {signal.shape}")
    n = signal.shape[0]
    if size is None:
        size = n
    if size < n:
        raise ValidationError(f"transform size {size} is smaller than signal length {n}")
    return Spectrum(bins=_dft_bins(signal, size))


def _check_pair(predicted: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if predicted.shape != target.shape or predicted.ndim != 1:
        raise ValidationError(
            f"predicted and target must be equal-length 1-D signals, got shapes "
            f"{predicted.shape} and {target.shape}"
        )
    return predicted, target


def _resolve_size(kind: LossKind, n: int) -> int:
    size = kind.dft_size if kind.dft_size is not None else n
    if size < n:
        raise ValidationError(f"dft_size {size} is smaller than signal length {n}")
    return size


def loss_forward(kind: LossKind, predicted: np.ndarray, target: np.ndarray) -> float:
    """Evaluate the selected loss between two equal-length signals.

    Time MSE: ``mean((predicted - target)**2)``. DFT-magnitude MSE:
    ``mean((|P_m| - |T_m|)**2)`` over all M bins of the (zero-padded) DFT.
    """
    predicted, target = _check_pair(predicted, target)
    if kind.kind == TIME_MSE:
        diff = predicted - target
        return float(np.mean(diff * diff))
    size = _resolve_size(kind, predicted.shape[0])
    diff = np.abs(_dft_bins(predicted, size)) - np.abs(_dft_bins(target, size))
    return float(np.mean(diff * diff))


def loss_backward(kind: LossKind, predicted: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Gradient of :func:`loss_forward` with respect to the predicted samples.

    For the DFT-magnitude loss the residual is propagated through the
    modulus (direction ``P_m / |P_m|``, taken as 0 at zero-magnitude bins)
    and through the linear DFT.
    """
    predicted, target = _check_pair(predicted, target)
    n = predicted.shape[0]
    if kind.kind == TIME_MSE:
        return (2.0 / n) * (predicted - target)
    size = _resolve_size(kind, n)
    pred_bins = _dft_bins(predicted, size)
    pred_mag = np.abs(pred_bins)
    target_mag = np.abs(_dft_bins(target, size))
    g = (2.0 / size) * (pred_mag - target_mag)
    with np.errstate(invalid="ignore", divide="ignore"):
        direction = np.where(pred_mag > 0, np.conj(pred_bins) / pred_mag, 0.0)
    # dL/dx_n = Re(DFT(c)_n) with c_m = g_m * conj(P_m)/|P_m|
    return _dft_bins(g * direction, size)[:n].real.copy()


def _dft_mag_value_and_grad(
    predicted: np.ndarray, target_mag: np.ndarray, size: int
) -> tuple[float, np.ndarray]:
    """Fused loss value and sample gradient against a precomputed |DFT(target)|.

    The optimizer loop uses this so the constant target transform is done
    once per fit instead of once per step. Matches ``loss_forward`` /
    ``loss_backward`` bit for bit (same expressions, same order).
    """
    pred_bins = _dft_bins(predicted, size)
    pred_mag = np.abs(pred_bins)
    diff = pred_mag - target_mag
    value = float(np.mean(diff * diff))
    g = (2.0 / size) * diff
    with np.errstate(invalid="ignore", divide="ignore"):
        direction = np.where(pred_mag > 0, np.conj(pred_bins) / pred_mag, 0.0)
    grad = _dft_bins(g * direction, size)[: predicted.shape[0]].real.copy()
    return value, grad
