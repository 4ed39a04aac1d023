"""Trial runner and statistics layer over the network engine.

Produces photon-count time series, bias sweeps, saturation fractions,
boot-up times and the linear boot-up fit, plus deterministic CSV/JSON
emission.  Trial k of a run always draws from the substream derived from
(seed, k), so aggregates are independent of execution order and of the
number of worker processes.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from photonloop._kernel import run_trial_kernel
from photonloop.network import (
    RING_POSITIONS,
    SimParams,
    new_network,
    ring_capacity,
    step,
)

DEFAULT_TRIALS = 1000
SATURATION_TRIALS = 3000
DEFAULT_CADENCE = RING_POSITIONS      # one record per recirculation cycle
Z_95 = 1.959963984540054              # two-sided 95% normal quantile

# Bias grid: 2, then increments of ten up to 192.
BIAS_GRID = tuple(float(b) for b in ([2] + list(range(12, 193, 10))))
BOOTUP_LINE_COUNTS = (8, 24, 40, 56, 72, 88)


@dataclass(frozen=True)
class TrialResult:
    """Recorded population series of one trial.

    saturated_at is the first recorded step at which the total photon
    count strictly exceeded the ring capacity 9N/2 (None if never).
    """

    params: SimParams
    trial: int
    t: np.ndarray
    computational: np.ndarray
    shunt: np.ndarray
    total: np.ndarray
    saturated_at: Optional[int]


@dataclass(frozen=True)
class SweepResult:
    """Per-point mean, standard deviation and 95% CI along one axis."""

    axis_name: str
    axis: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    ci95: np.ndarray
    trials: int


@dataclass(frozen=True)
class BootupFit:
    """Ordinary least-squares line through (N, boot-up time) points."""

    n_lines: np.ndarray
    bootup_steps: np.ndarray
    slope: float
    intercept: float
    r_squared: float


def _reference_trial(params: SimParams, trial: int, cadence: int):
    """Record a pure-Python trial exactly the way the kernel records."""
    state = new_network(params, trial=trial)
    n_rec = params.t_max // cadence + (1 if params.t_max % cadence else 0)
    clock = np.zeros(n_rec, dtype=np.int64)
    comp = np.zeros(n_rec, dtype=np.int64)
    shunt = np.zeros(n_rec, dtype=np.int64)
    cap = ring_capacity(params.n_lines)
    saturated_at = -1
    idx = 0
    for t in range(params.t_max):
        m = step(state)
        c = t + 1
        if c % cadence == 0 or c == params.t_max:
            clock[idx] = c
            comp[idx] = m.computational_count
            shunt[idx] = m.shunt_count
            if saturated_at < 0 and m.total_count > cap:
                saturated_at = c
            idx += 1
    return clock, comp, shunt, saturated_at


def _one_trial(args) -> TrialResult:
    params, trial, cadence = args
    if params.p_m == 0.0:
        kr = run_trial_kernel(params, trial=trial, cadence=cadence)
        clock, comp, shunt = kr.clock, kr.computational, kr.shunt
        saturated_at = kr.saturated_at
    else:
        clock, comp, shunt, saturated_at = _reference_trial(
            params, trial, cadence)
    return TrialResult(
        params=params,
        trial=trial,
        t=clock,
        computational=comp,
        shunt=shunt,
        total=comp + shunt,
        saturated_at=None if saturated_at < 0 else int(saturated_at),
    )


def worker_count() -> int:
    """Worker processes to use, from PHOTONLOOP_WORKERS (default 1)."""
    raw = os.environ.get("PHOTONLOOP_WORKERS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(
            f"PHOTONLOOP_WORKERS must be an integer, got {raw!r}") from exc
    return max(1, value)


def run_trials(params: SimParams, trials: int = DEFAULT_TRIALS,
               record_cadence: int = DEFAULT_CADENCE,
               workers: Optional[int] = None) -> list:
    """Run independent trials; trial k draws from substream (seed, k).

    Results are returned ordered by trial index and are identical for any
    worker count, including 1 (serial).
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if record_cadence < 1:
        raise ValueError(f"record_cadence must be >= 1, got {record_cadence}")
    if workers is None:
        workers = worker_count()
    jobs = [(params, k, record_cadence) for k in range(trials)]
    if workers <= 1 or trials == 1:
        return [_one_trial(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, trials // (8 * workers))
        return list(pool.map(_one_trial, jobs, chunksize=chunk))


def _mean_sd_ci(samples: np.ndarray):
    mean = float(np.mean(samples))
    if samples.size < 2:
        return mean, 0.0, 0.0
    sd = float(np.std(samples, ddof=1))
    return mean, sd, Z_95 * sd / math.sqrt(samples.size)


def _operating_point(base: SimParams, bias: float, seed: int) -> SimParams:
    """Fresh parameters at a new bias with p_L rederived from p_s/B."""
    derived_p_s = 1.0 / (3.0 * base.n_lines)
    p_s = None if base.p_s == derived_p_s else base.p_s
    return SimParams(
        n_lines=base.n_lines,
        bias=bias,
        p_m=base.p_m,
        t_max=base.t_max,
        seed=seed,
        source_stagger=base.source_stagger,
        p_s=p_s,
    )


def sweep_bias(base_params: SimParams,
               bias_values: Sequence[float] = BIAS_GRID,
               trials: int = DEFAULT_TRIALS,
               record_cadence: int = DEFAULT_CADENCE,
               workers: Optional[int] = None) -> SweepResult:
    """Mean final total photon count at each bias value.

    Each bias point rederives p_L = p_s/B, runs its own independently
    seeded trials (substream (seed, point index)), and reports the mean,
    sd and 95% CI of total_count at the final recorded step.
    """
    if len(bias_values) == 0:
        raise ValueError("bias_values must be non-empty")
    if base_params.p_L != base_params.p_s / base_params.bias:
        raise ValueError(
            "bias sweep requires the operating relation p_L = p_s/B; "
            "explicit p_L overrides cannot vary with B")
    means, sds, cis = [], [], []
    for j, bias in enumerate(bias_values):
        point_seed = int(np.random.SeedSequence(
            [base_params.seed, j]).generate_state(1, np.uint64)[0])
        params = _operating_point(base_params, float(bias), point_seed)
        results = run_trials(params, trials, record_cadence, workers)
        finals = np.array([r.total[-1] for r in results], dtype=np.float64)
        mean, sd, ci = _mean_sd_ci(finals)
        means.append(mean)
        sds.append(sd)
        cis.append(ci)
    return SweepResult(
        axis_name="bias",
        axis=np.asarray(bias_values, dtype=np.float64),
        mean=np.array(means),
        sd=np.array(sds),
        ci95=np.array(cis),
        trials=trials,
    )


def saturation_fraction(params: SimParams, trials: int = SATURATION_TRIALS,
                        record_cadence: int = DEFAULT_CADENCE,
                        workers: Optional[int] = None) -> SweepResult:
    """Fraction of trials holding total > 9N/2 at each recorded step.

    The count is instantaneous, not first-passage: a trial contributes at
    step t only if its total population exceeds the bound at t.  Near the
    bias threshold the steady state hovers at the bound, so small networks
    plateau visibly below 1 even though almost every trial crosses the
    bound at some point.
    """
    results = run_trials(params, trials, record_cadence, workers)
    grid = results[0].t
    bound = ring_capacity(params.n_lines)
    above = np.stack([r.total > bound for r in results])
    fraction = above.mean(axis=0)
    sd = np.sqrt(fraction * (1.0 - fraction))
    ci = Z_95 * sd / math.sqrt(trials)
    return SweepResult(
        axis_name="t",
        axis=grid.astype(np.float64),
        mean=fraction,
        sd=sd,
        ci95=ci,
        trials=trials,
    )


def bootup_time(params: SimParams, trials: int = SATURATION_TRIALS,
                record_cadence: int = DEFAULT_CADENCE,
                workers: Optional[int] = None,
                fraction: Optional[SweepResult] = None) -> Optional[int]:
    """First recorded step where the saturation fraction reaches 0.5.

    Returns None when the configuration never boots within t_max (the
    explicit "no boot-up within t_max" outcome).  A precomputed fraction
    sweep may be passed to avoid rerunning the trials.
    """
    if fraction is None:
        fraction = saturation_fraction(params, trials, record_cadence, workers)
    crossed = np.nonzero(fraction.mean >= 0.5)[0]
    if crossed.size == 0:
        return None
    return int(fraction.axis[crossed[0]])


def fit_bootup_scaling(points: Sequence) -> BootupFit:
    """Ordinary least squares through (n_lines, bootup_steps) points."""
    if len(points) < 3:
        raise ValueError(f"need at least 3 points to fit, got {len(points)}")
    n = np.array([p[0] for p in points], dtype=np.float64)
    t_boot = np.array([p[1] for p in points], dtype=np.float64)
    if np.all(n == n[0]):
        raise ValueError("all points share one network size; fit is degenerate")
    slope, intercept = np.polyfit(n, t_boot, 1)
    predicted = slope * n + intercept
    ss_res = float(np.sum((t_boot - predicted) ** 2))
    ss_tot = float(np.sum((t_boot - np.mean(t_boot)) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return BootupFit(
        n_lines=n.astype(np.int64),
        bootup_steps=t_boot,
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(r_squared),
    )


# --- deterministic emission --------------------------------------------------

def _metadata(params: SimParams, **extra) -> dict:
    meta = {
        "n_lines": params.n_lines,
        "bias": params.bias,
        "p_s": params.p_s,
        "p_L": params.p_L,
        "p_m": params.p_m,
        "t_max": params.t_max,
        "seed": params.seed,
        "source_stagger": params.source_stagger,
    }
    meta.update(extra)
    return meta


def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _metadata_line(meta: dict) -> str:
    body = " ".join(f"{k}={_format_value(v)}" for k, v in meta.items())
    return f"# {body}\n"


def _write_rows(path, header: Sequence[str], rows, meta: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_metadata_line(meta))
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(v) for v in row) + "\n")


def _write_json(path, header: Sequence[str], rows, meta: dict) -> None:
    records = [dict(zip(header, row)) for row in rows]
    payload = {"metadata": meta, "records": records}

    def _default(value):
        if isinstance(value, (np.integer,)):
            return int(value)
        if isinstance(value, (np.floating,)):
            return float(value)
        if isinstance(value, (np.bool_,)):
            return bool(value)
        raise TypeError(f"not JSON serializable: {type(value)}")

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1, default=_default)
        fh.write("\n")


def _emit(path, header, rows, meta, fmt: str) -> None:
    if fmt == "csv":
        _write_rows(path, header, rows, meta)
    elif fmt == "json":
        _write_json(path, header, rows, meta)
    else:
        raise ValueError(f"unknown output format {fmt!r}")


TIMESERIES_HEADER = ("trial", "t", "computational", "shunt", "total")
BIAS_SWEEP_HEADER = ("N", "B", "t", "mean_total", "sd_total", "ci95", "trials")
SATURATION_HEADER = ("N", "B", "t", "fraction_saturated", "trials")
BOOTUP_HEADER = ("N", "B", "bootup_steps", "trials")
FIT_HEADER = ("slope", "intercept", "r_squared", "points")


def write_timeseries(path, results: Sequence[TrialResult],
                     record_cadence: int = DEFAULT_CADENCE,
                     fmt: str = "csv") -> None:
    params = results[0].params
    meta = _metadata(params, trials=len(results), record_cadence=record_cadence)
    rows = [
        (r.trial, int(t), int(c), int(s), int(tot))
        for r in results
        for t, c, s, tot in zip(r.t, r.computational, r.shunt, r.total)
    ]
    _emit(path, TIMESERIES_HEADER, rows, meta, fmt)


def write_bias_sweep(path, base_params: SimParams, sweep: SweepResult,
                     fmt: str = "csv") -> None:
    meta = _metadata(base_params, trials=sweep.trials)
    # Bias and p_L vary per row; the metadata carries the grid instead.
    del meta["bias"]
    del meta["p_L"]
    meta["bias_values"] = ";".join(repr(float(b)) for b in sweep.axis)
    t_final = base_params.t_max
    rows = [
        (base_params.n_lines, float(b), t_final, m, sd, ci, sweep.trials)
        for b, m, sd, ci in zip(sweep.axis, sweep.mean, sweep.sd, sweep.ci95)
    ]
    _emit(path, BIAS_SWEEP_HEADER, rows, meta, fmt)


def write_saturation(path, params: SimParams, sweep: SweepResult,
                     record_cadence: int = DEFAULT_CADENCE,
                     fmt: str = "csv") -> None:
    meta = _metadata(params, trials=sweep.trials, record_cadence=record_cadence)
    rows = [
        (params.n_lines, params.bias, int(t), f, sweep.trials)
        for t, f in zip(sweep.axis, sweep.mean)
    ]
    _emit(path, SATURATION_HEADER, rows, meta, fmt)


def write_bootup(path, entries, trials: int, bias: float, seed: int = 0,
                 p_m: float = 0.0, source_stagger: bool = True,
                 record_cadence: int = DEFAULT_CADENCE,
                 fmt: str = "csv") -> None:
    """entries: sequence of (n_lines, bootup_steps or None)."""
    meta = {"bias": bias, "trials": trials, "seed": seed, "p_m": p_m,
            "source_stagger": source_stagger, "record_cadence": record_cadence,
            "n_values": ";".join(str(n) for n, _ in entries)}
    rows = [
        (n, bias, -1 if t_boot is None else int(t_boot), trials)
        for n, t_boot in entries
    ]
    _emit(path, BOOTUP_HEADER, rows, meta, fmt)


def write_fit(path, fit: BootupFit, fmt: str = "csv") -> None:
    meta = {"points": int(fit.n_lines.size)}
    rows = [(fit.slope, fit.intercept, fit.r_squared, int(fit.n_lines.size))]
    _emit(path, FIT_HEADER, rows, meta, fmt)
