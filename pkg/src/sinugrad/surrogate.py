"""Complex-exponential surrogate oscillator and its conjugate-gradient rules.

Each component renders ``Re(z^n) = |z|^n * cos(n * angle(z))``, so the
complex parameter carries frequency in its angle and per-sample amplitude
decay in its magnitude. Gradients are conjugate Wirtinger derivatives,
``dL/dz_bar``; descending along their negation is steepest descent for a
real loss, and the equivalent real partials are
``(dL/dx, dL/dy) = (2*Re(dL/dz_bar), 2*Im(dL/dz_bar))``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateParameterError, ValidationError

__all__ = [
    "SurrogateModel",
    "SurrogateGradient",
    "ComponentEstimate",
    "default_magnitude_cap",
    "surrogate_forward",
    "surrogate_backward",
    "extract_frequencies",
    "init_params",
]

# Slack for |z| == cap after an exact polar rescale.
_CAP_TOL = 1e-12

IN_DISK = "in_disk"
ON_CIRCLE = "on_circle"


def default_magnitude_cap(length: int) -> float:
    """Largest allowed |z| for a given signal length.

    Bounds ``|z|**length`` by roughly e^16 so that rendering never overflows,
    while leaving room for excursions just outside the unit circle.
    """
    return 1.0 + 16.0 / length


@dataclass(eq=False)
class SurrogateModel:
    """Trainable surrogate: complex parameters plus linear amplitudes.

    ``z`` and ``amplitudes`` are equal-length 1-D arrays (one entry per
    component); ``length`` is the rendered sample count. All |z| must stay
    at or below ``magnitude_cap`` (defaults to ``default_magnitude_cap``).
    """

    z: np.ndarray
    amplitudes: np.ndarray
    length: int
    magnitude_cap: float | None = None

    def __post_init__(self):
        self.z = np.atleast_1d(np.asarray(self.z, dtype=np.complex128))
        self.amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=np.float64))
        if not (isinstance(self.length, (int, np.integer)) and self.length >= 1):
            raise ValidationError(f"length must be a positive integer, got {self.length}")
        self.length = int(self.length)
        if self.magnitude_cap is None:
            self.magnitude_cap = default_magnitude_cap(self.length)
        if self.z.ndim != 1 or self.z.shape != self.amplitudes.shape:
            raise ValidationError(
                "z and amplitudes must be 1-D arrays of equal length, got shapes "
                f"{self.z.shape} and {self.amplitudes.shape}"
            )
        if self.z.size < 1:
            raise ValidationError("model must have at least one component")
        if not (np.isfinite(self.z).all() and np.isfinite(self.amplitudes).all()):
            raise ValidationError("model parameters must all be finite")
        _check_cap(self.z, self.magnitude_cap)

    @property
    def count(self) -> int:
        return self.z.size


def _check_cap(z: np.ndarray, cap: float) -> None:
    worst = float(np.max(np.abs(z)))
    if worst > cap * (1.0 + _CAP_TOL):
        raise ValidationError(
            f"|z| = {worst} exceeds the magnitude cap {cap}; "
            "the optimizer's projection step should prevent this"
        )


@dataclass(frozen=True, eq=False)
class SurrogateGradient:
    """Conjugate Wirtinger derivatives plus amplitude partials.

    ``wirtinger_conj[k]`` is dL/dz_bar_k; ``amplitudes[k]`` is dL/da_k.
    ``real_partials`` exposes the equivalent (dL/dx_k, dL/dy_k) pairs.
    """

    wirtinger_conj: np.ndarray
    amplitudes: np.ndarray

    @property
    def real_partials(self) -> tuple[np.ndarray, np.ndarray]:
        return 2.0 * self.wirtinger_conj.real, 2.0 * self.wirtinger_conj.imag


class ComponentEstimate(NamedTuple):
    """Readout of one converged component."""

    frequency: float
    decay: float
    amplitude: float


def _powers(z: np.ndarray, length: int) -> np.ndarray:
    """(K, length) table of z^0 .. z^(length-1) by running complex products."""
    out = np.empty((z.size, length), dtype=np.complex128)
    out[:, 0] = 1.0
    if length > 1:
        out[:, 1:] = z[:, None]
        np.cumprod(out, axis=1, out=out)
    return out


def _forward(z: np.ndarray, amplitudes: np.ndarray, length: int) -> np.ndarray:
    return amplitudes @ _powers(z, length).real


def surrogate_forward(model: SurrogateModel) -> np.ndarray:
    """Render ``sum_k a_k * |z_k|^n * cos(n * angle(z_k))`` for n in [0, N).

    Powers are accumulated by iterated complex multiplication rather than
    per-sample polar exponentiation. Re-checks the magnitude cap so a buggy
    caller that mutated ``z`` past the cap fails loudly instead of
    overflowing.
    """
    _check_cap(model.z, model.magnitude_cap)
    return _forward(model.z, model.amplitudes, model.length)


def surrogate_backward(model: SurrogateModel, upstream: np.ndarray) -> SurrogateGradient:
    """Conjugate Wirtinger derivative of a loss through :func:`surrogate_forward`.

    Parameters
    ----------
    model : SurrogateModel
    upstream : np.ndarray, shape (length,)
        dL/ds_n for each rendered sample.

    Returns
    -------
    SurrogateGradient
        ``dL/dz_bar_k = sum_n u_n * a_k * (n/2) * conj(z_k)^(n-1)`` and
        ``dL/da_k = sum_n u_n * Re(z_k^n)``.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (model.length,):
        raise ValidationError(
            f"upstream length {upstream.shape} does not match model length {model.length}"
        )
    powers = _powers(model.z, model.length)
    return SurrogateGradient(
        wirtinger_conj=_wirtinger_conj(powers, model.amplitudes, upstream),
        amplitudes=powers.real @ upstream,
    )


def _wirtinger_conj(powers: np.ndarray, amplitudes: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    # sum over n >= 1 of u_n * n * conj(z)^(n-1); the n=0 term vanishes.
    length = powers.shape[1]
    if length == 1:
        return np.zeros(powers.shape[0], dtype=np.complex128)
    weights = upstream[1:] * np.arange(1, length)
    return 0.5 * amplitudes * np.conj(powers[:, :-1] @ weights)


def extract_frequencies(model: SurrogateModel) -> list[ComponentEstimate]:
    """Per-component (frequency, decay, amplitude) readout.

    The frequency estimate is ``|angle(z_k)|`` folded into [0, pi]: a real
    target renders identically under ``z`` and ``conj(z)``, so the
    nonnegative representative is reported. Raises
    :class:`DegenerateParameterError` for any ``z_k == 0``, whose angle is
    undefined.
    """
    if np.any(model.z == 0):
        bad = int(np.flatnonzero(model.z == 0)[0])
        raise DegenerateParameterError(
            f"component {bad} has z == 0; its frequency is undefined"
        )
    freqs = np.abs(np.angle(model.z))
    mags = np.abs(model.z)
    return [
        ComponentEstimate(float(f), float(m), float(a))
        for f, m, a in zip(freqs, mags, model.amplitudes)
    ]


def init_params(
    count: int,
    length: int,
    mode: str = IN_DISK,
    seed=None,
    magnitude_cap: float | None = None,
) -> SurrogateModel:
    """Random initial surrogate parameters.

    ``in_disk`` draws z uniformly by area over the unit disk (radius
    ``sqrt(u)``, angle uniform); ``on_circle`` draws unit-magnitude z with
    uniform angle. Amplitudes start at ``1/count`` in either mode.
    """
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    if mode not in (IN_DISK, ON_CIRCLE):
        raise ValidationError(f"unknown init mode {mode!r}")
    rng = np.random.default_rng(seed)
    angles = rng.uniform(-np.pi, np.pi, size=count)
    radii = np.sqrt(rng.random(count)) if mode == IN_DISK else np.ones(count)
    return SurrogateModel(
        z=radii * np.exp(1j * angles),
        amplitudes=np.full(count, 1.0 / count),
        length=length,
        magnitude_cap=magnitude_cap,
    )
