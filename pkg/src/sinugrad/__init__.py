"""Gradient-descent sinusoidal frequency and amplitude estimation.

Real sinusoidal models have notoriously uninformative frequency gradients:
the time-domain MSE between two sinusoids is a rippling, multi-minimum
function of the candidate frequency. This package fits a
complex-exponential surrogate ``s_n(z) = Re(z^n)`` instead, whose
conjugate Wirtinger derivative gives first-order optimizers a usable
descent direction; frequency is read out as ``angle(z)`` and amplitude
decay as ``|z|``. Amplitudes are either learned jointly or recovered
afterwards by ordinary least squares.

Library layout: :mod:`signal_model` (targets and the real baseline),
:mod:`surrogate` (the complex model and its gradients), :mod:`losses`
(time MSE and DFT-magnitude MSE with hand-rolled DFT), :mod:`optim`
(Adam and the fit loop), :mod:`amplitude` (OLS recovery),
:mod:`metrics` (CRLB and spectral metrics), and :mod:`experiments`
(configurable, seeded, CSV-emitting experiment drivers behind the
``sinugrad`` CLI).
"""

from .amplitude import Representation, design_matrix, recover_amplitudes, render_surrogate_sum
from .errors import (
    ConditioningError,
    ConfigError,
    DegenerateParameterError,
    DivergenceError,
    SampleFileError,
    SinugradError,
    UndefinedBoundError,
    ValidationError,
)
from .losses import (
    DFT_MAG_MSE,
    TIME_MSE,
    LossKind,
    Spectrum,
    dft,
    loss_backward,
    loss_forward,
)
from .metrics import (
    SPECTRAL_DB_FLOOR,
    CrlbQuery,
    SpectralMse,
    crlb_frequency,
    db_from_mse,
    freq_sq_error,
    spectral_mse_db,
)
from .optim import (
    AdamConfig,
    AdamState,
    FitResult,
    ParamLayout,
    TracePoint,
    adam_step,
    fit,
    flatten_gradient,
    flatten_params,
    project,
    unflatten_params,
)
from .signal_model import (
    BaselineGradient,
    RealBaselineModel,
    Sinusoid,
    TargetSpec,
    baseline_backward,
    baseline_forward,
    snr_to_sigma,
    synthesize,
)
from .surrogate import (
    IN_DISK,
    ON_CIRCLE,
    ComponentEstimate,
    SurrogateGradient,
    SurrogateModel,
    default_magnitude_cap,
    extract_frequencies,
    init_params,
    surrogate_backward,
    surrogate_forward,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "SinugradError", "ValidationError", "DegenerateParameterError",
    "DivergenceError", "ConditioningError", "UndefinedBoundError",
    "ConfigError", "SampleFileError",
    # signal model
    "Sinusoid", "TargetSpec", "RealBaselineModel", "BaselineGradient",
    "synthesize", "snr_to_sigma", "baseline_forward", "baseline_backward",
    # surrogate
    "SurrogateModel", "SurrogateGradient", "ComponentEstimate",
    "IN_DISK", "ON_CIRCLE", "default_magnitude_cap",
    "surrogate_forward", "surrogate_backward", "extract_frequencies", "init_params",
    # losses
    "LossKind", "Spectrum", "TIME_MSE", "DFT_MAG_MSE",
    "dft", "loss_forward", "loss_backward",
    # optimization
    "AdamConfig", "AdamState", "ParamLayout", "TracePoint", "FitResult",
    "flatten_params", "unflatten_params", "flatten_gradient",
    "adam_step", "project", "fit",
    # amplitude recovery
    "Representation", "design_matrix", "render_surrogate_sum", "recover_amplitudes",
    # metrics
    "CrlbQuery", "SpectralMse", "SPECTRAL_DB_FLOOR",
    "crlb_frequency", "freq_sq_error", "spectral_mse_db", "db_from_mse",
]
