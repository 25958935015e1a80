"""Experiment drivers: landscape, single, multi, and fit.

Every random draw comes from a dedicated ``numpy`` SeedSequence spawned as
``SeedSequence([base_seed, stream, *coordinates])``, where ``stream`` is
one of the constants below and the coordinates identify the grid cell.
Cells therefore never share or race on generator state, results are
independent of execution order and worker count, and the emitted CSVs are
byte-identical across re-runs with the same configuration and seed.
"""

import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..amplitude import Representation, recover_amplitudes
from ..errors import (
    ConditioningError,
    DegenerateParameterError,
    DivergenceError,
    UndefinedBoundError,
)
from ..losses import DFT_MAG_MSE, TIME_MSE, LossKind, _dft_bins
from ..metrics import CrlbQuery, crlb_frequency, db_from_mse, freq_sq_error, spectral_mse_db
from ..optim import fit
from ..signal_model import (
    RealBaselineModel,
    Sinusoid,
    TargetSpec,
    baseline_forward,
    snr_to_sigma,
    synthesize,
)
from ..surrogate import (
    IN_DISK,
    ON_CIRCLE,
    extract_frequencies,
    init_params,
    surrogate_forward,
)
from .analysis import detect_plateau_drops, mean_median_db
from .config import (
    FIT,
    LANDSCAPE,
    MULTI,
    SINGLE,
    ExperimentConfig,
    config_hash,
    validate_config,
)
from .io import load_samples, write_csv, write_manifest, write_trace

__all__ = [
    "STREAM_NOISE",
    "STREAM_INIT",
    "STREAM_TARGET",
    "STREAM_CONTROL",
    "TIME_MAE",
    "ExperimentResult",
    "run_landscape",
    "run_single",
    "run_multi",
    "run_fit",
    "run_experiment",
]

# RNG stream identifiers (second entry of every SeedSequence).
STREAM_NOISE = 0
STREAM_INIT = 1
STREAM_TARGET = 2
STREAM_CONTROL = 3

TIME_MAE = "time-mae"  # landscape-only curve; not a trainable loss

_OK = "ok"
_DIVERGED = "diverged"
_DEGENERATE = "degenerate"

_METRIC_NORMALIZE = "peak"

LANDSCAPE_COLUMNS = [
    "experiment", "scale", "config_hash", "n", "loss",
    "target_freq", "omega_hat", "value",
]
SINGLE_COLUMNS = [
    "experiment", "scale", "config_hash", "loss", "n",
    "freq_index", "target_freq", "snr_index", "snr_db", "seed_index",
    "status", "init_z_re", "init_z_im",
    "final_freq", "final_decay", "final_amp",
    "freq_sq_error", "freq_sq_error_db", "crlb_var",
    "cap_activated", "trace_id",
]
SINGLE_AGGREGATE_COLUMNS = [
    "experiment", "scale", "config_hash", "loss",
    "snr_index", "snr_db", "runs", "failures",
    "mean_db", "median_db", "crlb_db",
]
MULTI_COLUMNS = [
    "experiment", "scale", "config_hash", "k", "draw", "model", "loss", "n",
    "status", "target_freqs", "target_amps", "init_freqs", "init_amps",
    "final_freqs", "final_decays", "final_amps", "recovered_products",
    "init_metric_db", "final_metric_db", "metric_floored",
    "cap_activated", "trace_id",
]
MULTI_AGGREGATE_COLUMNS = [
    "experiment", "scale", "config_hash", "k", "model", "loss",
    "runs", "failures", "mean_metric_db", "median_metric_db",
]
FIT_COLUMNS = [
    "experiment", "scale", "config_hash", "model", "loss", "n", "k",
    "status", "source", "target_freqs", "target_amps",
    "init_freqs", "init_amps",
    "final_freqs", "final_decays", "final_amps",
    "recovered_alphas", "recovered_products",
    "final_loss", "final_metric_db", "metric_floored",
    "cap_activated", "plateau_drops", "trace_id",
]


@dataclass(eq=False)
class ExperimentResult:
    """Everything a caller (or test) needs after a run."""

    out_dir: str
    summary_path: str
    aggregates_path: str | None
    manifest_path: str
    rows: list
    aggregates: list
    trace_files: list


def _rng(base_seed: int, stream: int, *coords) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([base_seed, stream, *coords]))


def _loss_kind(token: str) -> LossKind:
    return LossKind.time_mse() if token == TIME_MSE else LossKind.dft_mag_mse()


def _map_cells(cells, worker, jobs: int) -> list:
    if jobs <= 1:
        return [worker(cell) for cell in cells]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, cells))


def _prepare(config: ExperimentConfig, experiment: str) -> tuple[str, str]:
    if config.experiment != experiment:
        raise ValueError(
            f"config is for {config.experiment!r}, not {experiment!r}"
        )
    validate_config(config)
    out_dir = config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    return out_dir, config_hash(config)


def _manifest_payload(config: ExperimentConfig, digest: str, wall: float, extra: dict) -> dict:
    payload = {
        "experiment": config.experiment,
        "scale": config.scale,
        "config_hash": digest,
        "seed": config.seed,
        "jobs": config.jobs,
        "trace_every": config.trace_every,
        "config": {
            "optimizer": asdict(config.optimizer),
            "settings": asdict(config.settings),
        },
        "package_version": _package_version(),
        "python_version": sys.version.split()[0],
        "numpy_version": np.__version__,
        "platform": platform.platform(),
        "wall_time_seconds": round(wall, 3),
    }
    payload.update(extra)
    return payload


def _package_version() -> str:
    from .. import __version__

    return __version__


def _write_outputs(config, experiment, digest, started, rows, columns,
                   aggregates=None, agg_columns=None, traces=(), extra=None):
    out_dir = config.out_dir
    summary_path = os.path.join(out_dir, "summary.csv")
    write_csv(summary_path, columns, [[row.get(c) for c in columns] for row in rows])
    aggregates_path = None
    if aggregates is not None:
        aggregates_path = os.path.join(out_dir, "aggregates.csv")
        write_csv(
            aggregates_path, agg_columns,
            [[row.get(c) for c in agg_columns] for row in aggregates],
        )
    trace_files = []
    for trace_id, trace in traces:
        trace_files.append(write_trace(out_dir, trace_id, trace))
    manifest_path = os.path.join(out_dir, "manifest.json")
    payload = _manifest_payload(
        config, digest, time.monotonic() - started,
        {"rows": len(rows), "trace_files": len(trace_files), **(extra or {})},
    )
    write_manifest(manifest_path, payload)
    return ExperimentResult(
        out_dir=out_dir,
        summary_path=summary_path,
        aggregates_path=aggregates_path,
        manifest_path=manifest_path,
        rows=rows,
        aggregates=aggregates or [],
        trace_files=trace_files,
    )


# ---------------------------------------------------------------- landscape


def run_landscape(config: ExperimentConfig) -> ExperimentResult:
    """Loss value between a fixed target sinusoid and a swept candidate.

    For each configured signal length, renders the target ``cos(w n)`` and
    candidates ``cos(w_hat n)`` over the frequency grid, then emits one row
    per (length, curve, grid point) for the time MSE, time MAE, and
    DFT-magnitude MSE curves.
    """
    started = time.monotonic()
    _, digest = _prepare(config, LANDSCAPE)
    s = config.settings
    grid = np.linspace(s.freq_min, s.freq_max, s.grid_points)
    rows = []
    for n_samples in s.lengths:
        n = np.arange(n_samples, dtype=np.float64)
        target = s.amplitude * np.cos(s.target_freq * n)
        candidates = s.amplitude * np.cos(np.outer(grid, n))
        diff = candidates - target
        curves = [
            (TIME_MSE, np.mean(diff * diff, axis=1)),
            (TIME_MAE, np.mean(np.abs(diff), axis=1)),
        ]
        target_mag = np.abs(_dft_bins(target, n_samples))
        cand_mag = np.abs(_dft_bins(candidates, n_samples))
        spec_diff = cand_mag - target_mag
        curves.append((DFT_MAG_MSE, np.mean(spec_diff * spec_diff, axis=1)))
        for loss_token, values in curves:
            for omega, value in zip(grid, values):
                rows.append({
                    "experiment": LANDSCAPE, "scale": config.scale,
                    "config_hash": digest, "n": n_samples, "loss": loss_token,
                    "target_freq": float(s.target_freq),
                    "omega_hat": float(omega), "value": float(value),
                })
    return _write_outputs(config, LANDSCAPE, digest, started, rows, LANDSCAPE_COLUMNS)


# ------------------------------------------------------------------- single


def run_single(config: ExperimentConfig) -> ExperimentResult:
    """Single-sinusoid frequency estimation over a (frequency, SNR, seed) grid.

    One in-disk initial parameter is drawn per seed and shared by every
    grid cell of that seed; the amplitude stays fixed at 1 (not trained)
    and each cell gets its own noise stream. Emits per-run rows plus
    per-(loss, SNR) aggregates with the CRLB reference.
    """
    started = time.monotonic()
    _, digest = _prepare(config, SINGLE)
    s = config.settings
    adam = config.optimizer.to_adam()
    freqs = np.linspace(s.freq_min, s.freq_max, s.freq_steps)
    snrs = list(np.linspace(s.snr_min, s.snr_max, s.snr_steps))
    if s.include_noiseless:
        snrs.append(float("inf"))

    # One shared init per seed; amplitudes start (and stay) at 1/|K| = 1.
    inits = [
        init_params(1, s.length, IN_DISK, seed=_rng(config.seed, STREAM_INIT, r))
        for r in range(s.seeds)
    ]

    def worker(cell):
        fi, si, ri = cell
        omega = float(freqs[fi])
        snr = snrs[si]
        sigma = snr_to_sigma(snr, [1.0])
        spec = TargetSpec(
            components=(Sinusoid(amplitude=1.0, frequency=omega),),
            noise_sigma=sigma,
            length=s.length,
        )
        target = synthesize(spec, noise_seed=_rng(config.seed, STREAM_NOISE, ri, fi, si))
        try:
            crlb = crlb_frequency(CrlbQuery(snr_db=snr, length=s.length, amplitude=1.0))
        except UndefinedBoundError:
            crlb = None
        out = []
        for loss_token in s.losses:
            trace_id = f"single-{loss_token}-f{fi:03d}-s{si:02d}-r{ri:02d}"
            row = {
                "experiment": SINGLE, "scale": config.scale, "config_hash": digest,
                "loss": loss_token, "n": s.length,
                "freq_index": fi, "target_freq": omega,
                "snr_index": si, "snr_db": snr, "seed_index": ri,
                "init_z_re": float(inits[ri].z[0].real),
                "init_z_im": float(inits[ri].z[0].imag),
                "crlb_var": crlb, "trace_id": trace_id,
            }
            try:
                result = fit(
                    inits[ri], target, _loss_kind(loss_token), adam,
                    trace_every=config.trace_every, train_amplitudes=False,
                    metric_normalize=_METRIC_NORMALIZE,
                )
                estimate = extract_frequencies(result.model)[0]
            except DivergenceError:
                row.update({"status": _DIVERGED})
                out.append((row, None))
                continue
            except DegenerateParameterError:
                row.update({"status": _DEGENERATE})
                out.append((row, None))
                continue
            error = freq_sq_error(estimate.frequency, omega)
            row.update({
                "status": _OK,
                "final_freq": estimate.frequency,
                "final_decay": estimate.decay,
                "final_amp": estimate.amplitude,
                "freq_sq_error": error,
                "freq_sq_error_db": db_from_mse(error).db,
                "cap_activated": result.cap_activated,
            })
            out.append((row, result.trace))
        return out

    cells = [
        (fi, si, ri)
        for fi in range(len(freqs))
        for si in range(len(snrs))
        for ri in range(s.seeds)
    ]
    results = _map_cells(cells, worker, config.jobs)

    rows, traces = [], []
    for cell_rows in results:
        for row, trace in cell_rows:
            rows.append(row)
            if trace is not None:
                traces.append((row["trace_id"], trace))
    rows.sort(key=lambda r: (r["loss"], r["snr_index"], r["freq_index"], r["seed_index"]))

    aggregates = []
    for loss_token in s.losses:
        for si, snr in enumerate(snrs):
            group = [r for r in rows if r["loss"] == loss_token and r["snr_index"] == si]
            ok = [r for r in group if r["status"] == _OK]
            agg = {
                "experiment": SINGLE, "scale": config.scale, "config_hash": digest,
                "loss": loss_token, "snr_index": si, "snr_db": snr,
                "runs": len(group), "failures": len(group) - len(ok),
            }
            if ok:
                mean_db, median_db = mean_median_db([r["freq_sq_error"] for r in ok])
                agg.update({"mean_db": mean_db, "median_db": median_db})
            crlb = group[0]["crlb_var"] if group else None
            agg["crlb_db"] = db_from_mse(crlb).db if crlb is not None else None
            aggregates.append(agg)

    return _write_outputs(
        config, SINGLE, digest, started, rows, SINGLE_COLUMNS,
        aggregates, SINGLE_AGGREGATE_COLUMNS, traces,
    )


# -------------------------------------------------------------------- multi


def _draw_components(rng: np.random.Generator, count: int, s) -> tuple[np.ndarray, np.ndarray]:
    freqs = rng.uniform(s.freq_min, s.freq_max, size=count)
    amps = rng.uniform(s.amp_min, s.amp_max, size=count)
    return freqs, amps


def _target_for_draw(config: ExperimentConfig, s, count: int, draw: int):
    freqs, amps = _draw_components(_rng(config.seed, STREAM_TARGET, count, draw), count, s)
    sigma = 0.0 if s.snr_db is None else snr_to_sigma(s.snr_db, amps)
    spec = TargetSpec(
        components=tuple(Sinusoid(amplitude=a, frequency=w) for a, w in zip(amps, freqs)),
        noise_sigma=sigma,
        length=s.length,
    )
    signal = synthesize(spec, noise_seed=_rng(config.seed, STREAM_NOISE, count, draw))
    return freqs, amps, signal


def _score(signal: np.ndarray, target: np.ndarray):
    return spectral_mse_db(signal, target, normalize=_METRIC_NORMALIZE)


def _recovered_products(model) -> np.ndarray | None:
    try:
        alphas = recover_amplitudes(model, Representation.identity())
    except (ConditioningError, DegenerateParameterError):
        return None
    return model.amplitudes * alphas


def run_multi(config: ExperimentConfig) -> ExperimentResult:
    """Multi-sinusoid estimation: surrogate and baseline fits plus controls.

    Per draw: random zero-phase target, on-circle surrogate init with
    amplitudes 1/|K|, baseline initialized at the same frequencies and
    amplitudes, both fitted with each configured loss. Separately,
    ``control_draws`` random-parameter models are scored against targets
    without any fitting. All spectral scores are peak-normalized.
    """
    started = time.monotonic()
    _, digest = _prepare(config, MULTI)
    s = config.settings
    adam = config.optimizer.to_adam()

    def fit_worker(cell):
        count, draw = cell
        target_freqs, target_amps, target = _target_for_draw(config, s, count, draw)
        init = init_params(count, s.length, ON_CIRCLE, seed=_rng(config.seed, STREAM_INIT, count, draw))
        init_freqs = np.abs(np.angle(init.z))
        init_amps = init.amplitudes.copy()
        baseline_init = RealBaselineModel(
            frequencies=init_freqs.copy(), amplitudes=init_amps.copy(), length=s.length
        )
        out = []
        common = {
            "experiment": MULTI, "scale": config.scale, "config_hash": digest,
            "k": count, "draw": draw, "n": s.length,
            "target_freqs": target_freqs, "target_amps": target_amps,
            "init_freqs": init_freqs, "init_amps": init_amps,
        }
        surrogate_init_db = _score(surrogate_forward(init), target)
        baseline_init_db = _score(baseline_forward(baseline_init), target)
        for loss_token in s.losses:
            kind = _loss_kind(loss_token)
            for model_name, model_init, init_db in (
                ("surrogate", init, surrogate_init_db),
                ("baseline", baseline_init, baseline_init_db),
            ):
                trace_id = f"multi-k{count:02d}-d{draw:04d}-{model_name}-{loss_token}"
                row = dict(common)
                row.update({
                    "model": model_name, "loss": loss_token,
                    "init_metric_db": init_db.db, "trace_id": trace_id,
                })
                try:
                    result = fit(
                        model_init, target, kind, adam,
                        trace_every=config.trace_every, train_amplitudes=True,
                        metric_normalize=_METRIC_NORMALIZE,
                    )
                except DivergenceError:
                    row["status"] = _DIVERGED
                    out.append((row, None))
                    continue
                final = result.model
                score = _score(
                    surrogate_forward(final) if model_name == "surrogate" else baseline_forward(final),
                    target,
                )
                row.update({
                    "status": _OK,
                    "final_metric_db": score.db,
                    "metric_floored": score.floored,
                    "cap_activated": result.cap_activated,
                })
                if model_name == "surrogate":
                    estimates = extract_frequencies(final)
                    row.update({
                        "final_freqs": [e.frequency for e in estimates],
                        "final_decays": [e.decay for e in estimates],
                        "final_amps": [e.amplitude for e in estimates],
                        "recovered_products": _recovered_products(final),
                    })
                else:
                    row.update({
                        "final_freqs": final.frequencies,
                        "final_amps": final.amplitudes,
                    })
                out.append((row, result.trace))
        return out

    fit_cells = [(count, draw) for count in s.component_counts for draw in range(s.draws)]
    fit_results = _map_cells(fit_cells, fit_worker, config.jobs)

    rows, traces = [], []
    for cell_rows in fit_results:
        for row, trace in cell_rows:
            rows.append(row)
            if trace is not None:
                traces.append((row["trace_id"], trace))

    for count in s.component_counts:
        for draw in range(s.control_draws):
            target_freqs, target_amps, target = _target_for_draw(config, s, count, draw)
            rnd_freqs, rnd_amps = _draw_components(
                _rng(config.seed, STREAM_CONTROL, count, draw), count, s
            )
            control = RealBaselineModel(
                frequencies=rnd_freqs, amplitudes=rnd_amps, length=s.length
            )
            score = _score(baseline_forward(control), target)
            rows.append({
                "experiment": MULTI, "scale": config.scale, "config_hash": digest,
                "k": count, "draw": draw, "model": "random", "loss": None,
                "n": s.length, "status": _OK,
                "target_freqs": target_freqs, "target_amps": target_amps,
                "final_freqs": rnd_freqs, "final_amps": rnd_amps,
                "final_metric_db": score.db, "metric_floored": score.floored,
            })

    model_order = {"surrogate": 0, "baseline": 1, "random": 2}
    rows.sort(key=lambda r: (
        r["k"], model_order[r["model"]], r["loss"] or "", r["draw"]
    ))

    aggregates = []
    for count in s.component_counts:
        for model_name in ("surrogate", "baseline", "random"):
            losses = s.losses if model_name != "random" else (None,)
            for loss_token in losses:
                group = [
                    r for r in rows
                    if r["k"] == count and r["model"] == model_name and r.get("loss") == loss_token
                ]
                if not group:
                    continue
                ok = [r for r in group if r["status"] == _OK]
                agg = {
                    "experiment": MULTI, "scale": config.scale, "config_hash": digest,
                    "k": count, "model": model_name, "loss": loss_token,
                    "runs": len(group), "failures": len(group) - len(ok),
                }
                if ok:
                    scores = np.array([r["final_metric_db"] for r in ok])
                    agg.update({
                        "mean_metric_db": float(np.mean(scores)),
                        "median_metric_db": float(np.median(scores)),
                    })
                aggregates.append(agg)

    return _write_outputs(
        config, MULTI, digest, started, rows, MULTI_COLUMNS,
        aggregates, MULTI_AGGREGATE_COLUMNS, traces,
    )


# ---------------------------------------------------------------------- fit


def run_fit(config: ExperimentConfig) -> ExperimentResult:
    """One densely-traced fit, from a synthetic target or a sample file."""
    started = time.monotonic()
    _, digest = _prepare(config, FIT)
    s = config.settings
    adam = config.optimizer.to_adam()

    if s.target_file is not None:
        target = load_samples(s.target_file)
        length = target.size
        source = s.target_file
        target_freqs = None
        target_amps = None
    else:
        length = s.length
        target_freqs, target_amps, target = _target_for_draw(config, s, s.components, 0)
        source = "synthetic"

    count = s.components
    if s.model == "surrogate":
        model = init_params(count, length, ON_CIRCLE, seed=_rng(config.seed, STREAM_INIT, count, 0))
        init_freqs = np.abs(np.angle(model.z))
        init_amps = model.amplitudes.copy()
    else:
        seed_model = init_params(count, length, ON_CIRCLE, seed=_rng(config.seed, STREAM_INIT, count, 0))
        init_freqs = np.abs(np.angle(seed_model.z))
        init_amps = seed_model.amplitudes.copy()
        model = RealBaselineModel(
            frequencies=init_freqs.copy(), amplitudes=init_amps.copy(), length=length
        )

    trace_id = f"fit-{s.model}-{s.loss}"
    row = {
        "experiment": FIT, "scale": config.scale, "config_hash": digest,
        "model": s.model, "loss": s.loss, "n": length, "k": count,
        "source": source, "target_freqs": target_freqs, "target_amps": target_amps,
        "init_freqs": init_freqs, "init_amps": init_amps, "trace_id": trace_id,
    }
    traces = []
    drops = None
    try:
        result = fit(
            model, target, _loss_kind(s.loss), adam,
            trace_every=config.trace_every, train_amplitudes=True,
            metric_normalize=_METRIC_NORMALIZE,
        )
    except DivergenceError:
        row["status"] = _DIVERGED
    else:
        final = result.model
        rendered = surrogate_forward(final) if s.model == "surrogate" else baseline_forward(final)
        score = _score(rendered, target)
        steps = [p.step for p in result.trace]
        metric = [p.metric_db for p in result.trace]
        drops = detect_plateau_drops(steps, metric, total_steps=adam.steps)
        row.update({
            "status": _OK,
            "final_loss": result.final_loss,
            "final_metric_db": score.db,
            "metric_floored": score.floored,
            "cap_activated": result.cap_activated,
            "plateau_drops": drops,
        })
        if s.model == "surrogate":
            estimates = extract_frequencies(final)
            row.update({
                "final_freqs": [e.frequency for e in estimates],
                "final_decays": [e.decay for e in estimates],
                "final_amps": [e.amplitude for e in estimates],
            })
            try:
                alphas = recover_amplitudes(final, Representation.identity())
            except (ConditioningError, DegenerateParameterError):
                alphas = None
            if alphas is not None:
                row["recovered_alphas"] = alphas
                row["recovered_products"] = final.amplitudes * alphas
        else:
            row.update({
                "final_freqs": final.frequencies,
                "final_amps": final.amplitudes,
            })
        traces.append((trace_id, result.trace))

    return _write_outputs(
        config, FIT, digest, started, [row], FIT_COLUMNS,
        traces=traces, extra={"plateau_drops": drops},
    )


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Dispatch on ``config.experiment``."""
    runners = {
        LANDSCAPE: run_landscape,
        SINGLE: run_single,
        MULTI: run_multi,
        FIT: run_fit,
    }
    return runners[config.experiment](config)
