"""Adam optimization of surrogate and baseline models.

The optimizer is the standard bias-corrected Adam acting on a flat real
parameter vector. Complex surrogate parameters enter the vector as
Cartesian pairs (x_k, y_k); their gradient entries are the real partials
(2*Re(dL/dz_bar), 2*Im(dL/dz_bar)), so the update descends along the
negated conjugate Wirtinger derivative. After each update the surrogate
parameters are projected back inside the magnitude cap so rendering z^n
cannot overflow.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DivergenceError, ValidationError
from .losses import (
    DFT_MAG_MSE,
    LossKind,
    _dft_bins,
    _dft_mag_value_and_grad,
    _resolve_size,
)
from .metrics import spectral_mse_db
from .signal_model import BaselineGradient, RealBaselineModel
from .surrogate import SurrogateGradient, SurrogateModel, _powers, _wirtinger_conj

__all__ = [
    "AdamConfig",
    "AdamState",
    "ParamLayout",
    "TracePoint",
    "FitResult",
    "flatten_params",
    "unflatten_params",
    "flatten_gradient",
    "adam_step",
    "project",
    "fit",
]

_SURROGATE = "surrogate"
_BASELINE = "baseline"


@dataclass(frozen=True)
class AdamConfig:
    """Adam hyperparameters plus the step budget.

    ``steps`` may be zero, which makes ``fit`` a pure evaluation.
    """

    steps: int
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (isinstance(self.steps, (int, np.integer)) and self.steps >= 0):
            raise ValidationError(f"steps must be a non-negative integer, got {self.steps}")
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not (0 <= value < 1):
                raise ValidationError(f"{name} must be in [0, 1), got {value}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValidationError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(eq=False)
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(m=np.zeros(size), v=np.zeros(size), t=0)


@dataclass(frozen=True)
class ParamLayout:
    """Describes how a model maps onto a flat real vector.

    Surrogate: ``[x_1, y_1, ..., x_K, y_K, a_1, ..., a_K]`` with
    ``z_k = x_k + i*y_k``. Baseline: ``[w_1, ..., w_K, a_1, ..., a_K]``.
    """

    kind: str
    count: int
    length: int
    magnitude_cap: float | None = None

    @property
    def size(self) -> int:
        return 3 * self.count if self.kind == _SURROGATE else 2 * self.count

    @property
    def amplitude_start(self) -> int:
        return 2 * self.count if self.kind == _SURROGATE else self.count


def flatten_params(model) -> tuple[np.ndarray, ParamLayout]:
    """Model parameters as a flat float64 vector plus its layout."""
    if isinstance(model, SurrogateModel):
        layout = ParamLayout(_SURROGATE, model.count, model.length, model.magnitude_cap)
        vec = np.empty(layout.size)
        vec[0 : 2 * model.count : 2] = model.z.real
        vec[1 : 2 * model.count : 2] = model.z.imag
        vec[2 * model.count :] = model.amplitudes
        return vec, layout
    if isinstance(model, RealBaselineModel):
        layout = ParamLayout(_BASELINE, model.count, model.length)
        return np.concatenate([model.frequencies, model.amplitudes]), layout
    raise ValidationError(f"cannot flatten a {type(model).__name__}")


def unflatten_params(vector: np.ndarray, layout: ParamLayout):
    """Inverse of :func:`flatten_params`."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (layout.size,):
        raise ValidationError(
            f"vector shape {vector.shape} does not match layout size {layout.size}"
        )
    k = layout.count
    if layout.kind == _SURROGATE:
        z = vector[0 : 2 * k : 2] + 1j * vector[1 : 2 * k : 2]
        return SurrogateModel(
            z=z,
            amplitudes=vector[2 * k :].copy(),
            length=layout.length,
            magnitude_cap=layout.magnitude_cap,
        )
    return RealBaselineModel(
        frequencies=vector[:k].copy(),
        amplitudes=vector[k:].copy(),
        length=layout.length,
    )


def flatten_gradient(gradient, layout: ParamLayout) -> np.ndarray:
    """Gradient object flattened to match the parameter vector layout."""
    k = layout.count
    out = np.empty(layout.size)
    if layout.kind == _SURROGATE:
        if not isinstance(gradient, SurrogateGradient):
            raise ValidationError("surrogate layout requires a SurrogateGradient")
        dx, dy = gradient.real_partials
        out[0 : 2 * k : 2] = dx
        out[1 : 2 * k : 2] = dy
        out[2 * k :] = gradient.amplitudes
    else:
        if not isinstance(gradient, BaselineGradient):
            raise ValidationError("baseline layout requires a BaselineGradient")
        out[:k] = gradient.frequencies
        out[k:] = gradient.amplitudes
    return out


def adam_step(
    state: AdamState, params: np.ndarray, grads: np.ndarray, config: AdamConfig
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns new params and state.

    Inputs are not mutated. A non-finite gradient raises
    :class:`DivergenceError` carrying the (1-based) step index.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValidationError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"state {state.m.shape}"
        )
    if not np.isfinite(grads).all():
        raise DivergenceError(state.t + 1)
    t = state.t + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grads
    v = config.beta2 * state.v + (1.0 - config.beta2) * grads * grads
    m_hat = m / (1.0 - config.beta1**t)
    v_hat = v / (1.0 - config.beta2**t)
    updated = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return updated, AdamState(m=m, v=v, t=t)


def project(model: SurrogateModel, cap: float | None = None) -> SurrogateModel:
    """Pull any |z_k| > cap radially back to the cap, preserving angles.

    ``cap`` defaults to the model's own magnitude cap. Components already
    inside are untouched.
    """
    if cap is None:
        cap = model.magnitude_cap
    magnitudes = np.abs(model.z)
    z = np.where(magnitudes > cap, model.z * (cap / np.maximum(magnitudes, 1e-300)), model.z)
    return SurrogateModel(
        z=z,
        amplitudes=model.amplitudes.copy(),
        length=model.length,
        magnitude_cap=model.magnitude_cap,
    )


class TracePoint(NamedTuple):
    """One sampled point of a fit trajectory."""

    step: int
    loss: float
    metric_db: float


@dataclass(eq=False)
class FitResult:
    """Fitted model plus the sampled trajectory.

    ``trace`` holds one point per ``trace_every`` steps (step 0 included)
    plus the final step; ``cap_activated`` records whether the magnitude
    projection ever fired.
    """

    model: "SurrogateModel | RealBaselineModel"
    trace: list[TracePoint]
    final_loss: float
    cap_activated: bool


def _render(vec: np.ndarray, layout: ParamLayout, n: np.ndarray):
    """Forward pass on the flat vector; returns (signal, per-model context)."""
    k = layout.count
    amps = vec[layout.amplitude_start :]
    if layout.kind == _SURROGATE:
        z = vec[0 : 2 * k : 2] + 1j * vec[1 : 2 * k : 2]
        powers = _powers(z, layout.length)
        return amps @ powers.real, powers
    phases = np.outer(vec[:k], n)
    return amps @ np.cos(phases), phases


def _flat_gradient(
    vec: np.ndarray,
    layout: ParamLayout,
    context,
    upstream: np.ndarray,
    n: np.ndarray,
    train_amplitudes: bool,
) -> np.ndarray:
    k = layout.count
    amps = vec[layout.amplitude_start :]
    out = np.empty(layout.size)
    if layout.kind == _SURROGATE:
        powers = context
        wirtinger = _wirtinger_conj(powers, amps, upstream)
        out[0 : 2 * k : 2] = 2.0 * wirtinger.real
        out[1 : 2 * k : 2] = 2.0 * wirtinger.imag
        out[2 * k :] = powers.real @ upstream if train_amplitudes else 0.0
    else:
        phases = context
        out[:k] = -amps * (np.sin(phases) @ (upstream * n))
        out[k:] = np.cos(phases) @ upstream if train_amplitudes else 0.0
    return out


def _project_vector(vec: np.ndarray, layout: ParamLayout) -> bool:
    """In-place magnitude projection on a flat surrogate vector."""
    if layout.kind != _SURROGATE:
        return False
    k = layout.count
    x = vec[0 : 2 * k : 2]
    y = vec[1 : 2 * k : 2]
    mags = np.hypot(x, y)
    over = mags > layout.magnitude_cap
    if not over.any():
        return False
    scale = layout.magnitude_cap / mags[over]
    x[over] *= scale
    y[over] *= scale
    return True


def fit(
    model,
    target: np.ndarray,
    loss: LossKind,
    config: AdamConfig,
    trace_every: int = 100,
    train_amplitudes: bool = True,
    metric_normalize: str | None = "peak",
    metric_dft_size: int | None = None,
) -> FitResult:
    """Gradient-descent fit of a model to a target signal.

    Runs forward -> loss -> backward -> adam_step -> project for
    ``config.steps`` steps. The trace records (step, training loss,
    magnitude-spectrum metric in dB) at step 0, every ``trace_every``-th
    step, and the final step. With ``train_amplitudes=False`` amplitude
    entries receive zero gradient and stay at their initial values.

    Deterministic given its inputs; the model instance passed in is never
    mutated. Raises :class:`DivergenceError` (with the failing step index)
    if a non-finite gradient appears.
    """
    target = np.asarray(target, dtype=np.float64)
    layout_len = model.length
    if target.shape != (layout_len,):
        raise ValidationError(
            f"target shape {target.shape} does not match model length {layout_len}"
        )
    if not np.isfinite(target).all():
        raise ValidationError("target contains non-finite samples")
    if not (isinstance(trace_every, (int, np.integer)) and trace_every >= 1):
        raise ValidationError(f"trace_every must be a positive integer, got {trace_every}")

    vec, layout = flatten_params(model)
    state = AdamState.zeros(layout.size)
    n = np.arange(layout_len, dtype=np.float64)
    trace: list[TracePoint] = []
    cap_activated = False
    loss_value = None

    # The target is fixed for the whole fit, so transform it once and fuse
    # loss value + upstream gradient into a single pass per step.
    if loss.kind == DFT_MAG_MSE:
        size = _resolve_size(loss, layout_len)
        target_mag = np.abs(_dft_bins(target, size))

        def evaluate(signal: np.ndarray) -> tuple[float, np.ndarray]:
            return _dft_mag_value_and_grad(signal, target_mag, size)

    else:
        scale = 2.0 / layout_len

        def evaluate(signal: np.ndarray) -> tuple[float, np.ndarray]:
            diff = signal - target
            return float(np.mean(diff * diff)), scale * diff

    def record(step: int, signal: np.ndarray, loss_value: float) -> None:
        metric = spectral_mse_db(
            signal, target, dft_size=metric_dft_size, normalize=metric_normalize
        )
        trace.append(TracePoint(step, loss_value, metric.db))

    def diverged(step: int) -> DivergenceError:
        return DivergenceError(
            step,
            f"fit diverged at step {step} "
            f"({layout.kind} model, {loss.kind} loss, N={layout_len})",
        )

    # Overflow inside a diverging render is reported as DivergenceError
    # below, so the interim numpy warnings are just noise.
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(config.steps):
            signal, context = _render(vec, layout, n)
            loss_value, upstream = evaluate(signal)
            if not np.isfinite(loss_value):
                raise diverged(step + 1)
            if step % trace_every == 0:
                record(step, signal, loss_value)
            grads = _flat_gradient(vec, layout, context, upstream, n, train_amplitudes)
            try:
                vec, state = adam_step(state, vec, grads, config)
            except DivergenceError as err:
                raise diverged(step + 1) from err
            if _project_vector(vec, layout):
                cap_activated = True

        signal, _ = _render(vec, layout, n)
        loss_value, _ = evaluate(signal)
        if not np.isfinite(loss_value):
            raise diverged(config.steps)
        record(config.steps, signal, loss_value)
    return FitResult(
        model=unflatten_params(vec, layout),
        trace=trace,
        final_loss=loss_value,
        cap_activated=cap_activated,
    )
