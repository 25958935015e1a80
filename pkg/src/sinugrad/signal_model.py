"""Real sinusoidal signal synthesis and the directly-parameterized baseline model.

Signals throughout the package are plain 1-D ``float64`` arrays. The sample
index convention is ``n = 0, 1, ..., N-1``, so a zero-phase cosine component
starts at its amplitude peak.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "Sinusoid",
    "TargetSpec",
    "RealBaselineModel",
    "BaselineGradient",
    "synthesize",
    "snr_to_sigma",
    "baseline_forward",
    "baseline_backward",
]


@dataclass(frozen=True)
class Sinusoid:
    """One real sinusoidal component: ``amplitude * cos(frequency * n + phase)``.

    Frequency is in radians per sample and must lie strictly inside the real
    Nyquist interval ``(0, pi)``; amplitude must be positive.
    """

    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValidationError(f"amplitude must be finite and > 0, got {self.amplitude}")
        if not (np.isfinite(self.frequency) and 0.0 < self.frequency < np.pi):
            raise ValidationError(
                f"frequency must lie in the open interval (0, pi), got {self.frequency}"
            )
        if not np.isfinite(self.phase):
            raise ValidationError(f"phase must be finite, got {self.phase}")


@dataclass(frozen=True)
class TargetSpec:
    """Ground-truth parameters of a noisy sum of real sinusoids.

    The component list is unordered: any permutation describes the same
    target. ``noise_sigma`` is the standard deviation of additive white
    Gaussian noise; ``length`` is the sample count N.
    """

    components: tuple[Sinusoid, ...]
    noise_sigma: float = 0.0
    length: int = 4096

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ValidationError(f"noise_sigma must be finite and >= 0, got {self.noise_sigma}")
        if not (isinstance(self.length, (int, np.integer)) and self.length >= 2):
            raise ValidationError(f"length must be an integer >= 2, got {self.length}")

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([c.amplitude for c in self.components], dtype=np.float64)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([c.frequency for c in self.components], dtype=np.float64)

    @property
    def phases(self) -> np.ndarray:
        return np.array([c.phase for c in self.components], dtype=np.float64)


@dataclass(eq=False)
class RealBaselineModel:
    """Directly-parameterized bank of zero-phase cosines.

    Produces ``sum_k amplitudes[k] * cos(frequencies[k] * n)``. Phases are
    fixed at zero and are not trainable. Unlike target components, the
    trainable parameters are unconstrained reals.
    """

    frequencies: np.ndarray
    amplitudes: np.ndarray
    length: int

    def __post_init__(self):
        self.frequencies = np.atleast_1d(np.asarray(self.frequencies, dtype=np.float64))
        self.amplitudes = np.atleast_1d(np.asarray(self.amplitudes, dtype=np.float64))
        if self.frequencies.ndim != 1 or self.frequencies.shape != self.amplitudes.shape:
            raise ValidationError(
                "frequencies and amplitudes must be 1-D arrays of equal length, got shapes "
                f"{self.frequencies.shape} and {self.amplitudes.shape}"
            )
        if self.frequencies.size < 1:
            raise ValidationError("model must have at least one component")
        if not (np.isfinite(self.frequencies).all() and np.isfinite(self.amplitudes).all()):
            raise ValidationError("model parameters must all be finite")
        if not (isinstance(self.length, (int, np.integer)) and self.length >= 1):
            raise ValidationError(f"length must be a positive integer, got {self.length}")
        self.length = int(self.length)

    @property
    def count(self) -> int:
        return self.frequencies.size


@dataclass(frozen=True, eq=False)
class BaselineGradient:
    """Partials of a scalar loss with respect to baseline parameters."""

    frequencies: np.ndarray
    amplitudes: np.ndarray


def synthesize(spec: TargetSpec, noise_seed=None) -> np.ndarray:
    """Render the noisy target signal described by ``spec``.

    Parameters
    ----------
    spec : TargetSpec
        Component parameters, noise level, and length.
    noise_seed : int, SeedSequence, Generator, or None
        Source of the Gaussian noise draw; ignored when ``noise_sigma`` is 0.
        The output is deterministic for a fixed seed.

    Returns
    -------
    np.ndarray, shape (length,)
        ``x_n = v_n + sum_k a_k cos(w_k n + p_k)`` with ``v_n`` i.i.d.
        ``N(0, noise_sigma**2)`` and n starting at 0.
    """
    n = np.arange(spec.length, dtype=np.float64)
    x = np.zeros(spec.length, dtype=np.float64)
    for comp in spec.components:
        x += comp.amplitude * np.cos(comp.frequency * n + comp.phase)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(noise_seed)
        x += rng.normal(0.0, spec.noise_sigma, size=spec.length)
    return x


def snr_to_sigma(snr_db: float, amplitudes) -> float:
    """Noise standard deviation realizing a requested signal-to-noise ratio.

    The signal power of a sum of sinusoids at distinct frequencies is
    ``sum_k a_k**2 / 2``; sigma is chosen so that
    ``10*log10(P_signal / sigma**2) == snr_db``.

    Parameters
    ----------
    snr_db : float
        Requested SNR in decibels. ``inf`` maps to sigma = 0.
    amplitudes : array_like
        Nonempty list of component amplitudes.
    """
    amps = np.atleast_1d(np.asarray(amplitudes, dtype=np.float64))
    if amps.size == 0:
        raise ValidationError("amplitude list must be nonempty")
    if not np.isfinite(amps).all():
        raise ValidationError("amplitudes must be finite")
    if np.isinf(snr_db) and snr_db > 0:
        return 0.0
    if not np.isfinite(snr_db):
        raise ValidationError(f"snr_db must be finite (or +inf for noiseless), got {snr_db}")
    power = float(np.sum(amps**2) / 2.0)
    return float(np.sqrt(power / 10.0 ** (snr_db / 10.0)))


def baseline_forward(model: RealBaselineModel) -> np.ndarray:
    """Render ``sum_k amplitudes[k] * cos(frequencies[k] * n)`` for n in [0, N)."""
    n = np.arange(model.length, dtype=np.float64)
    return model.amplitudes @ np.cos(np.outer(model.frequencies, n))


def baseline_backward(model: RealBaselineModel, upstream: np.ndarray) -> BaselineGradient:
    """Chain-rule partials of a loss through :func:`baseline_forward`.

    Parameters
    ----------
    model : RealBaselineModel
    upstream : np.ndarray, shape (length,)
        dL/ds_n for each output sample.

    Returns
    -------
    BaselineGradient
        ``dL/da_k = sum_n u_n cos(w_k n)`` and
        ``dL/dw_k = -a_k * sum_n u_n n sin(w_k n)``.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (model.length,):
        raise ValidationError(
            f"upstream length {upstream.shape} does not match model length {model.length}"
        )
    n = np.arange(model.length, dtype=np.float64)
    phases = np.outer(model.frequencies, n)
    amp_grads = np.cos(phases) @ upstream
    freq_grads = -model.amplitudes * (np.sin(phases) @ (upstream * n))
    return BaselineGradient(frequencies=freq_grads, amplitudes=amp_grads)
