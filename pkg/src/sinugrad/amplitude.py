"""Ordinary-least-squares amplitude recovery from a converged surrogate.

The surrogate's components are rendered without their learned amplitudes
into ``v_n = sum_k Re(z_k^n)``, a sinusoidal design matrix is built from
the component angles alone, both are passed through a linear signal
representation ``h`` (identity, or the modulus of the DFT), and the
amplitude vector solving ``min ||H(U) a - h(v)||`` is returned.

The design basis is ``cos`` by default: the surrogate renders cosines and
zero-phase targets are cosines, so a sine basis is nearly orthogonal to
the signal being projected and recovers nothing useful. ``sin`` remains
available for comparison.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, ValidationError
from .losses import _dft_bins
from .surrogate import SurrogateModel, _powers

__all__ = [
    "IDENTITY",
    "DFT_MAGNITUDE",
    "COS_BASIS",
    "SIN_BASIS",
    "Representation",
    "design_matrix",
    "render_surrogate_sum",
    "recover_amplitudes",
]

IDENTITY = "identity"
DFT_MAGNITUDE = "dft-magnitude"
COS_BASIS = "cos"
SIN_BASIS = "sin"

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class Representation:
    """Linear signal representation ``h`` applied before the solve.

    ``dft_size`` applies to the DFT-magnitude representation only; ``None``
    means "use the signal length".
    """

    tag: str
    dft_size: int | None = None

    def __post_init__(self):
        if self.tag not in (IDENTITY, DFT_MAGNITUDE):
            raise ValidationError(f"unknown representation {self.tag!r}")
        if self.tag == IDENTITY and self.dft_size is not None:
            raise ValidationError("dft_size only applies to the DFT-magnitude representation")
        if self.dft_size is not None and self.dft_size < 1:
            raise ValidationError(f"dft_size must be positive, got {self.dft_size}")

    @classmethod
    def identity(cls) -> "Representation":
        return cls(IDENTITY)

    @classmethod
    def dft_magnitude(cls, dft_size: int | None = None) -> "Representation":
        return cls(DFT_MAGNITUDE, dft_size)

    def output_dim(self, length: int) -> int:
        if self.tag == IDENTITY:
            return length
        return self.dft_size if self.dft_size is not None else length

    def apply(self, signals: np.ndarray, length: int) -> np.ndarray:
        """Transform one signal (shape (N,)) or stacked signals (..., N)."""
        if self.tag == IDENTITY:
            return np.asarray(signals, dtype=np.float64)
        size = self.output_dim(length)
        if size < length:
            raise ValidationError(
                f"dft_size {size} is smaller than signal length {length}"
            )
        return np.abs(_dft_bins(np.asarray(signals, dtype=np.float64), size))


def design_matrix(model: SurrogateModel, basis: str = COS_BASIS) -> np.ndarray:
    """N-by-K sinusoidal basis built from the component angles.

    Column k is ``basis(angle(z_k) * n)``; the magnitudes |z_k| do not
    enter, so a decayed component still projects onto a constant-amplitude
    sinusoid at its frequency.
    """
    if basis not in (COS_BASIS, SIN_BASIS):
        raise ValidationError(f"unknown basis {basis!r}")
    phases = np.outer(np.arange(model.length, dtype=np.float64), np.angle(model.z))
    return np.cos(phases) if basis == COS_BASIS else np.sin(phases)


def render_surrogate_sum(model: SurrogateModel) -> np.ndarray:
    """``v_n = sum_k Re(z_k^n)``: the component sum without learned amplitudes."""
    return _powers(model.z, model.length).real.sum(axis=0)


def _most_collinear_pair(h: np.ndarray) -> tuple[int, int]:
    """Indices of the two columns with the largest |cosine similarity|."""
    norms = np.linalg.norm(h, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    unit = h / safe
    gram = np.abs(unit.T @ unit)
    np.fill_diagonal(gram, -np.inf)
    i, j = np.unravel_index(np.argmax(gram), gram.shape)
    return (int(min(i, j)), int(max(i, j)))


def recover_amplitudes(
    model: SurrogateModel,
    rep: Representation = Representation(IDENTITY),
    basis: str = COS_BASIS,
) -> np.ndarray:
    """Least-squares amplitude estimates for each surrogate component.

    Solves ``argmin_a || H(U) a - h(v) ||`` by QR factorization, where U is
    the angle-derived design matrix and v the unit-amplitude component sum.
    The result estimates each component's constant-amplitude projection; a
    caller tracking learned amplitudes multiplies them in separately.

    Raises
    ------
    ConditioningError
        If H(U) is (near) rank deficient — typically two components sharing
        a folded frequency. The error carries the most collinear column
        pair.
    ValidationError
        If there are more components than representation rows.
    """
    u = design_matrix(model, basis)
    v = render_surrogate_sum(model)
    h_u = rep.apply(u.T, model.length).T
    h_v = rep.apply(v, model.length)
    rows, cols = h_u.shape
    if cols > rows:
        raise ValidationError(
            f"underdetermined system: {cols} components but only {rows} rows"
        )
    q, r = np.linalg.qr(h_u)
    diag = np.abs(np.diag(r))
    if np.min(diag) <= _RANK_TOL * np.max(diag):
        raise ConditioningError(_most_collinear_pair(h_u))
    return np.linalg.solve(r, q.T @ h_v)
