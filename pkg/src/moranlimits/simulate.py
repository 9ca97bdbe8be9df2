"""Exact event-driven simulation of the finite-N chain and path ensembles.

Every jump is simulated: the holding time at state k is exponential
with rate lambda_k + mu_k and the jump goes up with probability
lambda_k / (lambda_k + mu_k). No time discretisation enters anywhere;
grid values are read off the right-continuous step path. With u = 0 the
boundary states absorb and simulation stops early.

Reproducibility contract: a path is a pure function of
(seed, params, k0, horizon). Ensembles give path p the dedicated stream
seeded by (master_seed, p), so results do not depend on scheduling and
any prefix of paths can be regenerated in isolation.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import kstest

from .deterministic import DeterministicSolution
from .fluctuations import FluctuationLaw
from .model import DomainError, ModelParams, rate_tables

ArrayLike = Union[float, np.ndarray]

# Random variates are pre-drawn in growing batches: single-event paths pay
# for 64 draws, long paths amortise refills at the cap.
_BATCH_START = 64
_BATCH_MAX = 8192


@dataclass(frozen=True)
class TrajectoryPath:
    """One realised path: event times and the state after each event.

    The path starts at k0 at time 0 and is constant between events; its
    value at time t is the state after the last event at or before t.
    `absorbed` records that the chain hit a zero-rate state (only
    possible for u = 0 at the boundaries) before the horizon.
    """

    params: ModelParams
    k0: int
    times: np.ndarray
    states: np.ndarray
    final_time: float
    absorbed: bool

    @property
    def n_events(self) -> int:
        return int(self.times.size)


def _validate_state(k0: int, params: ModelParams) -> int:
    if isinstance(k0, bool) or not isinstance(k0, (int, np.integer)):
        raise DomainError(f"k0 must be an integer, got {k0!r}")
    if not 0 <= k0 <= params.N:
        raise DomainError(f"k0 must lie in 0..{params.N}, got {k0}")
    return int(k0)


def _validate_seed(seed) -> None:
    values = seed if isinstance(seed, (list, tuple)) else (seed,)
    for value in values:
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise DomainError(f"rng_seed must be an integer, got {value!r}")
        if value < 0:
            raise DomainError(f"rng_seed entries must be >= 0, got {value}")


def _chain_tables(params: ModelParams) -> tuple[list, list]:
    """Total event rate and up-move probability per state, as plain lists.

    Scalar indexing into lists is what the event loop spends its time
    on; numpy arrays are markedly slower there.
    """
    lam, mu = rate_tables(params)
    total = lam + mu
    with np.errstate(invalid="ignore", divide="ignore"):
        p_up = np.where(total > 0.0, lam / np.where(total > 0.0, total, 1.0), 0.0)
    return total.tolist(), p_up.tolist()


def _run_chain(
    k0: int,
    t_end: float,
    rng: np.random.Generator,
    total_rates: list,
    p_up: list,
    grid: Optional[np.ndarray] = None,
    record: bool = False,
):
    """Drive one chain to t_end; optionally record events and/or grid states."""
    t = 0.0
    k = k0
    events_t: list = []
    events_k: list = []
    absorbed = False
    if grid is not None:
        n_grid = grid.size
        grid_states = np.empty(n_grid, dtype=np.int64)
        grid_list = grid.tolist()
    else:
        n_grid = 0
        grid_states = None
        grid_list = None
    gi = 0

    batch = _BATCH_START
    waits = rng.exponential(size=batch).tolist()
    coins = rng.random(size=batch).tolist()
    idx = 0
    while True:
        rate = total_rates[k]
        if rate <= 0.0:
            absorbed = True
            break
        if idx == batch:
            batch = min(batch * 4, _BATCH_MAX)
            waits = rng.exponential(size=batch).tolist()
            coins = rng.random(size=batch).tolist()
            idx = 0
        t_next = t + waits[idx] / rate
        up = coins[idx] < p_up[k]
        idx += 1
        if t_next > t_end:
            break
        if grid_list is not None:
            # state k holds on [t, t_next); grid points there read k
            while gi < n_grid and grid_list[gi] < t_next:
                grid_states[gi] = k
                gi += 1
        t = t_next
        k = k + 1 if up else k - 1
        if record:
            events_t.append(t)
            events_k.append(k)
    if grid_states is not None:
        while gi < n_grid:
            grid_states[gi] = k
            gi += 1
    return events_t, events_k, k, absorbed, grid_states


def simulate_path(
    k0: int, t_end: float, rng_seed, params: ModelParams
) -> TrajectoryPath:
    """Simulate one path on [0, t_end], retaining every event.

    Args:
        k0: initial type-0 count.
        t_end: horizon, >= 0.
        rng_seed: non-negative integer (or sequence of them) feeding
            numpy's seed sequence; identical inputs give the identical
            path.
        params: model parameters.
    """
    k0 = _validate_state(k0, params)
    if not (t_end >= 0.0) or not math.isfinite(t_end):
        raise DomainError(f"t_end must be finite and >= 0, got {t_end!r}")
    _validate_seed(rng_seed)
    total_rates, p_up = _chain_tables(params)
    rng = np.random.default_rng(rng_seed)
    events_t, events_k, _, absorbed, _ = _run_chain(
        k0, float(t_end), rng, total_rates, p_up, record=True
    )
    return TrajectoryPath(
        params=params,
        k0=k0,
        times=np.asarray(events_t, dtype=float),
        states=np.asarray(events_k, dtype=np.int64),
        final_time=float(t_end),
        absorbed=absorbed,
    )


def _validate_grid(t_grid) -> np.ndarray:
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("t_grid must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(grid)) or grid[0] < 0.0:
        raise DomainError("t_grid must be finite and >= 0")
    if np.any(np.diff(grid) <= 0.0):
        raise DomainError("t_grid must be strictly increasing")
    return grid


def simulate_on_grid(
    k0: int, t_grid: Sequence[float], rng_seed, params: ModelParams
) -> np.ndarray:
    """States at the grid times only, without retaining events.

    Consumes randomness identically to simulate_path with
    t_end = t_grid[-1], so both views of one seed agree.
    """
    k0 = _validate_state(k0, params)
    grid = _validate_grid(t_grid)
    _validate_seed(rng_seed)
    total_rates, p_up = _chain_tables(params)
    rng = np.random.default_rng(rng_seed)
    _, _, _, _, grid_states = _run_chain(
        k0, float(grid[-1]), rng, total_rates, p_up, grid=grid, record=False
    )
    return grid_states


def sample_Z_at(times: ArrayLike, path: TrajectoryPath) -> ArrayLike:
    """Proportion Z^N = X^N / N of the path at the given times.

    Right-continuous lookup: a query at an event time sees the state
    after the jump. Times must lie in [0, path.final_time].
    """
    arr = np.asarray(times, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.all(np.isfinite(arr)):
        raise DomainError("times must be finite")
    if np.any(arr < 0.0) or np.any(arr > path.final_time):
        raise DomainError(
            f"times must lie in [0, {path.final_time}] where the path is defined"
        )
    states = np.concatenate(([path.k0], path.states))
    idx = np.searchsorted(path.times, arr, side="right")
    values = states[idx] / path.params.N
    return float(values[0]) if scalar else values


@dataclass(frozen=True)
class EnsembleSummary:
    """Grid values of an i.i.d. path ensemble plus deviation statistics.

    z_values[p, j] is path p's proportion at t_grid[j]. When a
    reference curve was supplied, z_ref holds its grid values and the
    deviation views below compare against it.
    """

    params: ModelParams
    k0: int
    rng_seed: int
    n_paths: int
    t_grid: np.ndarray
    z_values: np.ndarray
    z_ref: Optional[np.ndarray]
    absorbed_count: int

    @property
    def mean_z(self) -> np.ndarray:
        return self.z_values.mean(axis=0)

    @property
    def var_z(self) -> np.ndarray:
        if self.n_paths < 2:
            return np.zeros(self.t_grid.size)
        return self.z_values.var(axis=0, ddof=1)

    @property
    def sup_deviation(self) -> np.ndarray:
        """Per-path sup over the grid of |Z^N_t - reference(t)|."""
        if self.z_ref is None:
            raise DomainError("ensemble was run without a reference curve")
        return np.abs(self.z_values - self.z_ref).max(axis=1)

    @property
    def scaled_deviations(self) -> np.ndarray:
        """Per-path, per-time sqrt(N) (Z^N_t - reference(t))."""
        if self.z_ref is None:
            raise DomainError("ensemble was run without a reference curve")
        return math.sqrt(self.params.N) * (self.z_values - self.z_ref)

    def to_record(self) -> dict:
        record = {
            "n_paths": self.n_paths,
            "k0": self.k0,
            "rng_seed": self.rng_seed,
            "absorbed_count": self.absorbed_count,
            "t_grid": self.t_grid.tolist(),
            "mean_z": self.mean_z.tolist(),
            "var_z": self.var_z.tolist(),
        }
        if self.z_ref is not None:
            scaled = self.scaled_deviations
            record["z_ref"] = self.z_ref.tolist()
            record["sup_deviation"] = self.sup_deviation.tolist()
            record["scaled_dev_mean"] = scaled.mean(axis=0).tolist()
            record["scaled_dev_var"] = (
                scaled.var(axis=0, ddof=1).tolist()
                if self.n_paths > 1
                else np.zeros(self.t_grid.size).tolist()
            )
        return record


def run_ensemble(
    k0: int,
    t_grid: Sequence[float],
    n_paths: int,
    rng_seed: int,
    params: ModelParams,
    reference: Optional[DeterministicSolution] = None,
    threads: int = 1,
) -> EnsembleSummary:
    """Simulate n_paths independent paths and collect grid statistics.

    Reductions run over the preallocated path matrix in fixed path
    order, so the summary is identical for any thread count; threads
    only distribute the per-path event loops.
    """
    k0 = _validate_state(k0, params)
    grid = _validate_grid(t_grid)
    if isinstance(n_paths, bool) or not isinstance(n_paths, (int, np.integer)):
        raise DomainError(f"n_paths must be an integer, got {n_paths!r}")
    if n_paths < 1:
        raise DomainError(f"n_paths must be >= 1, got {n_paths}")
    _validate_seed(rng_seed)
    if isinstance(threads, bool) or not isinstance(threads, (int, np.integer)):
        raise DomainError(f"threads must be an integer, got {threads!r}")
    if threads < 1:
        raise DomainError(f"threads must be >= 1, got {threads}")

    total_rates, p_up = _chain_tables(params)
    t_end = float(grid[-1])
    states = np.empty((n_paths, grid.size), dtype=np.int64)
    absorbed_flags = np.zeros(n_paths, dtype=bool)

    def one_path(p: int) -> None:
        rng = np.random.default_rng([rng_seed, p])
        _, _, _, absorbed, grid_states = _run_chain(
            k0, t_end, rng, total_rates, p_up, grid=grid, record=False
        )
        states[p] = grid_states
        absorbed_flags[p] = absorbed

    if threads == 1:
        for p in range(n_paths):
            one_path(p)
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            list(pool.map(one_path, range(n_paths)))

    z_ref = None
    if reference is not None:
        z_ref = np.asarray(reference(grid), dtype=float)
    return EnsembleSummary(
        params=params,
        k0=k0,
        rng_seed=int(rng_seed),
        n_paths=int(n_paths),
        t_grid=grid,
        z_values=states / params.N,
        z_ref=z_ref,
        absorbed_count=int(absorbed_flags.sum()),
    )


def clt_statistics(
    z0: float,
    times: Sequence[float],
    n_paths: int,
    rng_seed: int,
    params: ModelParams,
    threads: int = 1,
) -> dict:
    """Scaled-deviation marginals at fixed times against the Gaussian law.

    Starts the chain at k0 = round(z0 N), simulates n_paths exact paths,
    and for each time reports the empirical mean and variance of
    sqrt(N) (Z^N_t - z(t)) next to the predicted variance Sigma(t) and
    the Kolmogorov-Smirnov distance from N(0, Sigma(t)). A leading t=0
    row carries only the deterministic rounding offset
    sqrt(N) (k0 / N - z0); its variance entries are None.

    Requires u > 0 (the Gaussian law needs a positive noise floor).
    """
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise DomainError("times must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(ts)) or np.any(ts <= 0.0):
        raise DomainError("times must be finite and > 0")
    if np.any(np.diff(ts) <= 0.0):
        raise DomainError("times must be strictly increasing")

    law = FluctuationLaw(z0, params)
    reference = law.solution
    k0 = int(round(reference.z0 * params.N))
    grid = np.concatenate(([0.0], ts))
    summary = run_ensemble(
        k0, grid, n_paths, rng_seed, params, reference=reference, threads=threads
    )
    sigma2 = law.variance_on_grid(grid)
    scaled = summary.scaled_deviations

    rows = []
    for j, t in enumerate(grid):
        column = scaled[:, j]
        variance = float(column.var(ddof=1)) if n_paths > 1 else 0.0
        row = {
            "t": float(t),
            "scaled_mean": float(column.mean()),
            "scaled_var": variance,
            "sigma2": float(sigma2[j]),
        }
        if sigma2[j] > 0.0:
            row["var_ratio"] = variance / float(sigma2[j])
            row["ks_statistic"] = float(
                kstest(column, "norm", args=(0.0, math.sqrt(float(sigma2[j])))).statistic
            )
        else:
            row["var_ratio"] = None
            row["ks_statistic"] = None
        rows.append(row)

    return {
        "k0": k0,
        "grid": grid,
        "rows": rows,
        "rounding_offset": float(scaled[0, 0]),
        "sigma2": sigma2,
        "summary": summary,
    }
