"""Shared numerical oracles for the test suite.

Everything here deliberately takes an independent route from the library:
gradients come from central finite differences of the forward functions,
transforms from numpy's FFT, and least-squares solutions from dense numpy
solvers. Library internals are never reused to check themselves.
"""

import numpy as np

from sinugrad import (
    RealBaselineModel,
    SurrogateModel,
    baseline_forward,
    loss_forward,
    surrogate_forward,
)

FD_STEP = 1e-6


def central_diff(f, x, h=FD_STEP):
    """Central finite-difference gradient of scalar ``f`` at 1-D point ``x``."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        bump = np.zeros_like(x)
        bump[i] = h
        grad[i] = (f(x + bump) - f(x - bump)) / (2.0 * h)
    return grad


def relative_error(a, b, floor=1e-12):
    """Norm-relative error between two gradient vectors."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    scale = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / scale)


def surrogate_probe_grad(model, upstream, h=FD_STEP):
    """Finite-difference gradient of ``sum_n upstream_n * s_n`` for a surrogate.

    Returns a flat vector [x_1, y_1, ..., x_K, y_K, a_1, ..., a_K] matching
    the (2*Re, 2*Im) real-partial convention of the analytic backward pass.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    k = model.count

    def probe(vec):
        z = vec[0 : 2 * k : 2] + 1j * vec[1 : 2 * k : 2]
        candidate = SurrogateModel(
            z=z,
            amplitudes=vec[2 * k :].copy(),
            length=model.length,
            magnitude_cap=model.magnitude_cap,
        )
        return float(np.dot(upstream, surrogate_forward(candidate)))

    vec = np.empty(3 * k)
    vec[0 : 2 * k : 2] = model.z.real
    vec[1 : 2 * k : 2] = model.z.imag
    vec[2 * k :] = model.amplitudes
    return central_diff(probe, vec, h)


def baseline_probe_grad(model, upstream, h=FD_STEP):
    """Finite-difference gradient of ``sum_n upstream_n * s_n`` for a baseline.

    Returns a flat vector [w_1, ..., w_K, a_1, ..., a_K].
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    k = model.count

    def probe(vec):
        candidate = RealBaselineModel(
            frequencies=vec[:k].copy(),
            amplitudes=vec[k:].copy(),
            length=model.length,
        )
        return float(np.dot(upstream, baseline_forward(candidate)))

    return central_diff(probe, np.concatenate([model.frequencies, model.amplitudes]), h)


def loss_probe_grad(kind, predicted, target, h=FD_STEP):
    """Finite-difference gradient of the loss with respect to the samples."""
    target = np.asarray(target, dtype=np.float64)

    def probe(vec):
        return loss_forward(kind, vec, target)

    return central_diff(probe, np.asarray(predicted, dtype=np.float64), h)


def _projected_power(x, omega, idx):
    """Concentrated likelihood of a real tone: energy of x projected onto
    span{cos(omega n), sin(omega n)}, with the exact 2x2 Gram solve."""
    c = np.cos(omega * idx)
    s = np.sin(omega * idx)
    g11 = np.dot(c, c)
    g12 = np.dot(c, s)
    g22 = np.dot(s, s)
    b1 = np.dot(c, x)
    b2 = np.dot(s, x)
    det = g11 * g22 - g12 * g12
    if det <= 1e-12 * g11 * max(g22, 1.0):
        return b1 * b1 / g11
    return (g22 * b1 * b1 - 2.0 * g12 * b1 * b2 + g11 * b2 * b2) / det


def ml_frequency(signal, pad_factor=16):
    """Maximum-likelihood frequency estimate for a single real tone.

    Coarse search on a zero-padded FFT grid (numpy's FFT), then
    golden-section refinement of the exact projection objective. The
    periodogram alone is biased for real tones at short N by interference
    from the conjugate component, so the refinement maximizes the proper
    two-column projection instead of ``|S(w)|^2``.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = x.size
    m = pad_factor * n
    half = m // 2
    spectrum = np.fft.rfft(x, m)
    peak = int(np.argmax(np.abs(spectrum[1:half])) + 1)
    grid = 2.0 * np.pi / m
    idx = np.arange(n, dtype=np.float64)
    lo = max(grid * (peak - 3), 1e-9)
    hi = min(grid * (peak + 3), np.pi - 1e-9)
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c_pt = b - invphi * (b - a)
    d_pt = a + invphi * (b - a)
    fc = _projected_power(x, c_pt, idx)
    fd = _projected_power(x, d_pt, idx)
    while b - a > 1e-13:
        if fc > fd:
            b, d_pt, fd = d_pt, c_pt, fc
            c_pt = b - invphi * (b - a)
            fc = _projected_power(x, c_pt, idx)
        else:
            a, c_pt, fc = c_pt, d_pt, fd
            d_pt = a + invphi * (b - a)
            fd = _projected_power(x, d_pt, idx)
    return float((a + b) / 2.0)
