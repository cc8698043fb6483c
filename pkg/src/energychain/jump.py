"""Exact event-driven simulation of the chain at the fast time scale.

Clock rates are ``M * f``, so O(M) exchanges happen per unit time and the
mean bond flux is O(1).  Waiting times are read off the uniform
stream as ``dt = -log(1 - q) / (M * R)`` with ``R`` the total capped bond
rate, and each event consumes uniforms in the fixed order

    ``q, p1, [p2 if boundary], p3, u_b1, u_b2``

(5 uniforms for an interior event, 6 for a boundary event, the waiting-time
draw ``q`` included).  Because every draw comes from one seeded stream, a
trajectory is a pure function of ``(cfg, e0, t_end, seed)``, and advancing a
path in pieces consumes exactly the same stream as advancing it in one shot.

The inner loop is compiled with numba when available and falls back to the
same code interpreted otherwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import ChainConfig, EventRecord, ExchangeDraw, RATE_KINDS, apply_exchange, \
    sample_beta, select_clock, total_rate, validate_state
from .streams import derive_path_seed, uniform_block

try:  # pragma: no cover - exercised implicitly by which branch runs
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

__all__ = [
    "Trajectory",
    "EnsembleStats",
    "PathFunctionals",
    "BatchAverages",
    "PathState",
    "step",
    "simulate",
    "ensemble",
    "path_functionals",
    "time_averages",
    "write_trajectory_csv",
    "write_events_csv",
    "DEFAULT_EVENT_CAP",
]

DEFAULT_EVENT_CAP = 10_000_000

_KIND_CODE = {kind: i for i, kind in enumerate(RATE_KINDS)}

# kernel return codes
_REACHED = 0
_NEED_UNIFORMS = 1
_LOG_FULL = 2


@njit(cache=True, nogil=True, inline="always")
def _bond_rate(kind, cpar, cap, a, b):
    if kind == 0:
        v = cpar
    elif kind == 1:
        v = math.sqrt(a * b)
    elif kind == 2:
        v = math.sqrt(a * b / (a + b))
    elif kind == 3:
        v = math.sqrt(a if a < b else b)
    else:
        v = a if a < b else b
    return v if v < cap else cap


@njit(cache=True, nogil=True)
def _advance(e, t, t_next, t_stop, u, iu, m, kind, cpar, cap, tl, tr,
             bond_flux, counters, scalars, rbuf,
             log_t, log_clock, log_flux, log_bath, log_cap,
             acc_e, acc_ee, accumulate):
    """Advance one path to ``t_stop``, mutating state and accumulators.

    ``t_next`` carries the already-scheduled next event time across calls
    (-1.0 when no waiting time has been drawn yet), so re-entry after a
    uniform refill or a log-growth pause continues the exact same path.
    ``rbuf`` and ``scalars[2]`` cache the bond rates and their sum between
    the waiting-time draw and the event that uses them (the state cannot
    change in between).  Returns ``(t, t_next, iu, status)``.
    """
    n = e.shape[0]
    nu = u.shape[0]
    while True:
        if t_next < 0.0:
            if iu >= nu:
                return t, t_next, iu, 1
            r = 0.0
            left = tl
            for j in range(n + 1):
                right = tr if j == n else e[j]
                fj = _bond_rate(kind, cpar, cap, left, right)
                rbuf[j] = fj
                r += fj
                left = right
            scalars[2] = r
            q = u[iu]
            iu += 1
            t_next = t - math.log1p(-q) / (m * r)
        if t_next >= t_stop:
            if accumulate:
                w = t_stop - t
                scalars[1] += w
                for a in range(n):
                    acc_e[a] += w * e[a]
                    for b in range(n):
                        acc_ee[a, b] += w * e[a] * e[b]
            return t_stop, t_next, iu, 0
        if iu + 5 > nu:
            return t, t_next, iu, 1
        if log_cap > 0 and counters[1] >= log_cap:
            return t, t_next, iu, 2
        if accumulate:
            w = t_next - t
            scalars[1] += w
            for a in range(n):
                acc_e[a] += w * e[a]
                for b in range(n):
                    acc_ee[a, b] += w * e[a] * e[b]
        t = t_next
        t_next = -1.0
        target = u[iu] * scalars[2]
        iu += 1
        k = n
        acc = 0.0
        for j in range(n + 1):
            acc += rbuf[j]
            if target < acc:
                k = j
                break
        p2 = 0.0
        if k == 0 or k == n:
            p2 = u[iu]
            iu += 1
        p3 = u[iu]
        iu += 1
        ub1 = u[iu]
        iu += 1
        ub2 = u[iu]
        iu += 1
        inv = 1.0 / (m - 1.0)
        b1 = -math.expm1(math.log1p(-ub1) * inv)
        b2 = -math.expm1(math.log1p(-ub2) * inv)
        bath_in = 0.0
        if k == 0:
            bath = -tl * math.log1p(-p2)
            flux = p3 * (b2 * bath) - (1.0 - p3) * (b1 * e[0])
            e[0] += flux
            bath_in = p3 * (b2 * bath)
        elif k == n:
            bath = -tr * math.log1p(-p2)
            flux = (1.0 - p3) * (b1 * e[n - 1]) - p3 * (b2 * bath)
            e[n - 1] -= flux
            bath_in = p3 * (b2 * bath)
        else:
            flux = (1.0 - p3) * (b1 * e[k - 1]) - p3 * (b2 * e[k])
            e[k - 1] -= flux
            e[k] += flux
        bond_flux[k] += flux
        scalars[0] += bath_in
        counters[0] += 1
        if log_cap > 0:
            i2 = counters[1]
            log_t[i2] = t
            log_clock[i2] = k
            log_flux[i2] = flux
            log_bath[i2] = bath_in
            counters[1] = i2 + 1


_EMPTY_F = np.empty(0)
_EMPTY_I = np.empty(0, dtype=np.int64)


class PathState:
    """A resumable single path of the fast-scale jump process.

    Crossing a target time does not discard the pending waiting time, so a
    path advanced in pieces (grid sampling, batch windows) is bit-identical
    to the same path advanced in one call.
    """

    def __init__(self, cfg: ChainConfig, e0, seed: int, block_size: int = 1 << 17):
        self.cfg = cfg
        self.seed = int(seed)
        self.state = validate_state(e0, cfg.n_cells)
        self.t = 0.0
        self._t_next = -1.0
        self._rng = np.random.Generator(np.random.PCG64(self.seed))
        self._block_size = int(block_size)
        self._u = _EMPTY_F
        self._iu = 0
        self.bond_flux = np.zeros(cfg.n_cells + 1)
        self._counters = np.zeros(2, dtype=np.int64)   # [n_events, log cursor]
        self._scalars = np.zeros(3)                    # [bath influx, acc. time, cached rate]
        self._rbuf = np.zeros(cfg.n_cells + 1)
        self._kind = _KIND_CODE[cfg.rate_fn.kind]
        self._cpar = float(cfg.rate_fn.c)

    @property
    def n_events(self) -> int:
        return int(self._counters[0])

    @property
    def bath_influx(self) -> float:
        return float(self._scalars[0])

    def _refill(self):
        fresh = uniform_block(self._rng, self._block_size)
        tail = self._u[self._iu:]
        self._u = np.concatenate((tail, fresh)) if tail.size else fresh
        self._iu = 0

    def advance(self, t_stop: float, log=None, accumulate=None) -> int:
        """Advance to ``t_stop`` (handling uniform refills internally).

        ``log`` is an optional ``(t, clock, flux, bath)`` array 4-tuple to
        record events into; returns ``_LOG_FULL`` when it fills, leaving the
        path paused just before the next event.  ``accumulate`` is an
        optional ``(acc_e, acc_ee)`` pair of time-integral accumulators.
        """
        cfg = self.cfg
        if log is None:
            lt, lc, lf, lb, cap = _EMPTY_F, _EMPTY_I, _EMPTY_F, _EMPTY_F, 0
        else:
            lt, lc, lf, lb = log
            cap = lt.shape[0]
        if accumulate is None:
            acc_e, acc_ee, do_acc = _EMPTY_F, _EMPTY_F.reshape(0, 0), False
        else:
            acc_e, acc_ee = accumulate
            do_acc = True
        while True:
            self.t, self._t_next, self._iu, status = _advance(
                self.state, self.t, self._t_next, float(t_stop),
                self._u, self._iu,
                float(cfg.particles_per_cell), self._kind, self._cpar,
                float(cfg.rate_cap), float(cfg.t_left), float(cfg.t_right),
                self.bond_flux, self._counters, self._scalars, self._rbuf,
                lt, lc, lf, lb, cap,
                acc_e, acc_ee, do_acc,
            )
            if status != _NEED_UNIFORMS:
                return status
            self._refill()

    def reset_accumulated_time(self) -> float:
        """Return and clear the time-weight accumulated by ``accumulate`` runs."""
        w = float(self._scalars[1])
        self._scalars[1] = 0.0
        return w


def step(state, cfg: ChainConfig, uniform_stream, t0: float = 0.0) -> tuple[float, EventRecord]:
    """One event of the fast-scale process, drawn from ``uniform_stream``.

    Pure reference implementation of a single kernel iteration: it consumes
    the stream in the documented order and returns ``(dt, record)`` with
    ``record.time = t0 + dt``.  Replaying the same stream reproduces the
    same event bit for bit.
    """
    e = validate_state(state, cfg.n_cells)
    m = cfg.particles_per_cell
    r = total_rate(e, cfg)
    q = uniform_stream.next()
    if not 0.0 < q < 1.0:
        raise ValueError("uniform stream produced a value outside (0, 1)")
    dt = -math.log1p(-q) / (m * r)
    p1 = uniform_stream.next()
    k = select_clock(e, cfg, p1)
    p2 = uniform_stream.next() if (k == 0 or k == cfg.n_cells) else 0.5
    p3 = uniform_stream.next()
    b1 = sample_beta(uniform_stream.next(), m)
    b2 = sample_beta(uniform_stream.next(), m)
    draw = ExchangeDraw(p1=p1, p2=p2, p3=p3, b1=b1, b2=b2)
    new_state, flux = apply_exchange(e, cfg, k, draw)
    return dt, EventRecord(time=t0 + dt, clock_index=k, flux=flux, state_after=new_state)


def _apply_flux(e: np.ndarray, k: int, flux: float, n: int):
    # identical increment arithmetic to the kernel, so replays are bit-exact
    if k == 0:
        e[0] += flux
    elif k == n:
        e[n - 1] -= flux
    else:
        e[k - 1] -= flux
        e[k] += flux


@dataclass
class Trajectory:
    """Piecewise-constant right-continuous path with event log and flux accounting.

    When the run stays below ``event_cap`` the full ``(t, clock, flux)`` log
    is kept and states are reconstructed on demand; above the cap only grid
    snapshots plus accumulated functionals are stored.
    """

    cfg: ChainConfig
    seed: int
    t_end: float
    initial_state: np.ndarray
    final_state: np.ndarray
    n_events: int
    bond_flux_totals: np.ndarray
    bath_influx_total: float
    events_logged: bool
    times: np.ndarray = field(default_factory=lambda: _EMPTY_F)
    clocks: np.ndarray = field(default_factory=lambda: _EMPTY_I)
    fluxes: np.ndarray = field(default_factory=lambda: _EMPTY_F)
    bath_influxes: np.ndarray = field(default_factory=lambda: _EMPTY_F)
    grid_times: np.ndarray | None = None
    grid_states: np.ndarray | None = None
    grid_influx: np.ndarray | None = None

    def events(self):
        """Iterate ``EventRecord`` entries (logged trajectories only)."""
        if not self.events_logged:
            raise ValueError("event log not stored (run exceeded the event cap)")
        n = self.cfg.n_cells
        e = self.initial_state.copy()
        for t, k, j in zip(self.times, self.clocks, self.fluxes):
            _apply_flux(e, int(k), float(j), n)
            yield EventRecord(time=float(t), clock_index=int(k), flux=float(j),
                              state_after=e.copy())

    def sample_on_grid(self, grid) -> np.ndarray:
        """States at the given times (state after the last event <= t)."""
        grid = np.asarray(grid, dtype=float)
        n = self.cfg.n_cells
        out = np.empty((grid.size, n))
        if self.events_logged:
            e = self.initial_state.copy()
            idx = np.searchsorted(self.times, grid, side="right")
            prev = 0
            for row, stop in enumerate(idx):
                for i in range(prev, stop):
                    _apply_flux(e, int(self.clocks[i]), float(self.fluxes[i]), n)
                prev = stop
                out[row] = e
            return out
        # snapshot mode: nearest snapshot at or before t
        pos = np.searchsorted(self.grid_times, grid, side="right") - 1
        if np.any(pos < 0):
            raise ValueError("requested time precedes the first stored snapshot")
        return self.grid_states[pos]

    def state_at(self, t: float) -> np.ndarray:
        return self.sample_on_grid(np.array([float(t)]))[0]

    def total_energy_series(self) -> tuple[np.ndarray, np.ndarray]:
        """Total chain energy at event times (or snapshot times)."""
        if self.events_logged:
            delta = np.where(self.clocks == 0, self.fluxes,
                             np.where(self.clocks == self.cfg.n_cells, -self.fluxes, 0.0))
            return self.times, float(np.sum(self.initial_state)) + np.cumsum(delta)
        return self.grid_times, self.grid_states.sum(axis=1)

    def influx_series(self) -> tuple[np.ndarray, np.ndarray]:
        """Cumulative gross energy absorbed from the baths."""
        if self.events_logged:
            return self.times, np.cumsum(self.bath_influxes)
        return self.grid_times, self.grid_influx


def simulate(cfg: ChainConfig, e0, t_end: float, seed: int, *,
             event_cap: int = DEFAULT_EVENT_CAP, snapshot_grid=None,
             block_size: int = 1 << 17) -> Trajectory:
    """Simulate one path on [0, t_end) and return its :class:`Trajectory`.

    All events strictly before ``t_end`` are included.  If the event count
    would exceed ``event_cap`` the log is dropped and the run continues in
    snapshot mode on ``snapshot_grid`` (default: 1025 uniform times).
    """
    if not t_end > 0.0:
        raise ValueError("t_end must be positive")
    if event_cap < 1:
        raise ValueError("event_cap must be at least 1")
    path = PathState(cfg, e0, seed, block_size=block_size)
    e0 = path.state.copy()
    cap = int(event_cap)
    size = min(4096, cap)
    log = (np.empty(size), np.empty(size, dtype=np.int64), np.empty(size), np.empty(size))

    while True:
        status = path.advance(t_end, log=log if size else None)
        if status == _REACHED:
            n_logged = int(path._counters[1])
            return Trajectory(
                cfg=cfg, seed=int(seed), t_end=float(t_end),
                initial_state=e0, final_state=path.state.copy(),
                n_events=path.n_events,
                bond_flux_totals=path.bond_flux.copy(),
                bath_influx_total=path.bath_influx,
                events_logged=True,
                times=log[0][:n_logged].copy(), clocks=log[1][:n_logged].copy(),
                fluxes=log[2][:n_logged].copy(), bath_influxes=log[3][:n_logged].copy(),
            )
        # log filled
        if size < cap:
            size = min(2 * size, cap)
            log = tuple(np.concatenate((a, np.empty(size - a.shape[0], dtype=a.dtype)))
                        for a in log)
            continue
        return _simulate_snapshots(cfg, path, e0, t_end, seed, log, snapshot_grid)


def _simulate_snapshots(cfg, path, e0, t_end, seed, log, snapshot_grid) -> Trajectory:
    """Continuation of :func:`simulate` once the event cap is reached."""
    grid = (np.linspace(0.0, t_end, 1025) if snapshot_grid is None
            else np.asarray(snapshot_grid, dtype=float))
    n_logged = int(path._counters[1])
    done = Trajectory(
        cfg=cfg, seed=int(seed), t_end=float(t_end),
        initial_state=e0, final_state=path.state.copy(), n_events=path.n_events,
        bond_flux_totals=path.bond_flux.copy(), bath_influx_total=path.bath_influx,
        events_logged=True,
        times=log[0][:n_logged], clocks=log[1][:n_logged],
        fluxes=log[2][:n_logged], bath_influxes=log[3][:n_logged],
    )
    states = np.empty((grid.size, cfg.n_cells))
    influx = np.empty(grid.size)
    passed = grid <= path.t
    states[passed] = done.sample_on_grid(grid[passed])
    cum = np.cumsum(done.bath_influxes)
    pos = np.searchsorted(done.times, grid[passed], side="right") - 1
    influx[passed] = np.where(pos >= 0, cum[np.maximum(pos, 0)], 0.0)
    del done, log
    for i in np.nonzero(~passed)[0]:
        path.advance(float(grid[i]))
        states[i] = path.state
        influx[i] = path.bath_influx
    if grid[-1] < t_end:
        path.advance(t_end)
    return Trajectory(
        cfg=cfg, seed=int(seed), t_end=float(t_end),
        initial_state=e0, final_state=path.state.copy(), n_events=path.n_events,
        bond_flux_totals=path.bond_flux.copy(), bath_influx_total=path.bath_influx,
        events_logged=False,
        grid_times=grid, grid_states=states, grid_influx=influx,
    )


@dataclass
class EnsembleStats:
    """Grid means and final-time covariance over independent paths."""

    time_grid: np.ndarray
    mean_path: np.ndarray          # (len(grid), N)
    cov_final: np.ndarray          # (N, N), ddof=1
    n_paths: int
    rescaled: bool                 # True when deviations are sqrt(M)-rescaled
    final_samples: np.ndarray      # (n_paths, N), raw or rescaled like mean_path
    sup_abs_dev: np.ndarray | None = None   # per-path sup over grid and cells


def ensemble(cfg: ChainConfig, e0, t_end: float, n_paths: int, time_grid, *,
             reference=None, n_workers: int | None = None,
             block_size: int = 1 << 17) -> EnsembleStats:
    """Simulate ``n_paths`` independent paths and reduce them on a time grid.

    Path ``i`` uses seed ``derive_path_seed(cfg.master_seed, i)``.  When a
    ``reference`` path on the same grid is supplied, statistics are taken of
    the rescaled deviations ``sqrt(M) * (path - reference)``.  Results are
    reduced into per-path slots and averaged with numpy's pairwise
    summation, so they do not depend on worker scheduling.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    grid = np.asarray(time_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) < 0):
        raise ValueError("time_grid must be a non-decreasing 1-D array")
    if not math.isclose(grid[-1], t_end, rel_tol=1e-12):
        raise ValueError("time_grid must end at t_end")
    e0 = validate_state(e0, cfg.n_cells)
    if reference is not None:
        reference = np.asarray(reference, dtype=float)
        if reference.shape != (grid.size, cfg.n_cells):
            raise ValueError("reference must have shape (len(time_grid), n_cells)")

    states = np.empty((n_paths, grid.size, cfg.n_cells))

    def run(i: int):
        p = PathState(cfg, e0, derive_path_seed(cfg.master_seed, i), block_size=block_size)
        for j, g in enumerate(grid):
            p.advance(float(g))
            states[i, j] = p.state

    if n_workers is None or n_workers <= 1:
        for i in range(n_paths):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=int(n_workers)) as pool:
            list(pool.map(run, range(n_paths)))

    if reference is not None:
        dev = (states - reference[None, :, :]) * math.sqrt(cfg.particles_per_cell)
        final = dev[:, -1, :]
        mean_path = dev.mean(axis=0)
        sup = np.abs(dev).max(axis=(1, 2))
    else:
        final = states[:, -1, :]
        mean_path = states.mean(axis=0)
        sup = None
    cov = np.cov(final.T, ddof=1) if n_paths > 1 else np.zeros((cfg.n_cells, cfg.n_cells))
    cov = np.atleast_2d(cov)
    return EnsembleStats(time_grid=grid, mean_path=mean_path, cov_final=cov,
                         n_paths=int(n_paths), rescaled=reference is not None,
                         final_samples=final, sup_abs_dev=sup)


@dataclass
class PathFunctionals:
    """Flux and influx functionals of one trajectory.

    ``kappa_hat`` is the empirical conductivity of the fast-scale path: minus
    the sum over all N + 1 bonds of the time-averaged signed flux, divided by
    ``T_R - T_L``.  Events fire at rate O(M) with O(1/M) flux each, so every
    bond average is O(1) and ``kappa_hat`` is O(1).  Undefined (``None``,
    with ``kappa_defined=False``) when the baths are equal.
    """

    times: np.ndarray
    boundary_influx: np.ndarray
    bond_avg_flux: np.ndarray
    kappa_defined: bool
    kappa_hat: float | None
    energy_times: np.ndarray
    total_energy: np.ndarray


def path_functionals(traj: Trajectory) -> PathFunctionals:
    """Boundary influx, per-bond time-averaged flux, and total-energy series."""
    times, influx = traj.influx_series()
    e_times, tot = traj.total_energy_series()
    avg = traj.bond_flux_totals / traj.t_end
    dt = traj.cfg.t_right - traj.cfg.t_left
    defined = dt != 0.0
    kappa = float(-np.sum(avg) / dt) if defined else None
    return PathFunctionals(times=times, boundary_influx=influx, bond_avg_flux=avg,
                           kappa_defined=defined, kappa_hat=kappa,
                           energy_times=e_times, total_energy=tot)


@dataclass
class BatchAverages:
    """Batch-means time averages over a measurement window of one path."""

    burn_in: float
    t_measure: float
    n_batches: int
    batch_means: np.ndarray        # (n_batches, N)
    batch_seconds: np.ndarray      # (n_batches, N, N) time-averaged outer products
    batch_flux: np.ndarray         # (n_batches, N+1) time-averaged bond flux
    n_events: int

    @property
    def mean(self) -> np.ndarray:
        return self.batch_means.mean(axis=0)

    @property
    def mean_se(self) -> np.ndarray:
        return self.batch_means.std(axis=0, ddof=1) / math.sqrt(self.n_batches)

    def covariance(self) -> np.ndarray:
        mu = self.mean
        return self.batch_seconds.mean(axis=0) - np.outer(mu, mu)

    def covariance_se(self) -> np.ndarray:
        # first-order influence of each batch on (mean seconds - mu muT),
        # which removes the batch-mean wander from the error bar
        mu = self.mean
        cross = np.einsum("i,bj->bij", mu, self.batch_means)
        infl = self.batch_seconds - cross - cross.transpose(0, 2, 1) + np.outer(mu, mu)
        return infl.std(axis=0, ddof=1) / math.sqrt(self.n_batches)

    def flux_mean(self) -> np.ndarray:
        return self.batch_flux.mean(axis=0)

    def flux_se(self) -> np.ndarray:
        return self.batch_flux.std(axis=0, ddof=1) / math.sqrt(self.n_batches)


def time_averages(cfg: ChainConfig, e0, seed: int, *, burn_in: float,
                  t_measure: float, n_batches: int = 20,
                  block_size: int = 1 << 17) -> BatchAverages:
    """Exact time averages of E and E Eᵀ over a post-burn-in window.

    The state is piecewise constant, so the integrals are accumulated exactly
    event by event; batch means over ``n_batches`` equal sub-windows give
    autocorrelation-aware error bars.
    """
    if t_measure <= 0.0 or burn_in < 0.0:
        raise ValueError("need t_measure > 0 and burn_in >= 0")
    if n_batches < 2:
        raise ValueError("need at least 2 batches for error bars")
    n = cfg.n_cells
    path = PathState(cfg, e0, seed, block_size=block_size)
    if burn_in > 0.0:
        path.advance(burn_in)
    dt_batch = t_measure / n_batches
    means = np.empty((n_batches, n))
    seconds = np.empty((n_batches, n, n))
    fluxes = np.empty((n_batches, n + 1))
    acc_e = np.zeros(n)
    acc_ee = np.zeros((n, n))
    for b in range(n_batches):
        acc_e[:] = 0.0
        acc_ee[:] = 0.0
        flux0 = path.bond_flux.copy()
        path.advance(burn_in + (b + 1) * dt_batch, accumulate=(acc_e, acc_ee))
        w = path.reset_accumulated_time()
        means[b] = acc_e / w
        seconds[b] = acc_ee / w
        fluxes[b] = (path.bond_flux - flux0) / w
    return BatchAverages(burn_in=float(burn_in), t_measure=float(t_measure),
                         n_batches=int(n_batches), batch_means=means,
                         batch_seconds=seconds, batch_flux=fluxes,
                         n_events=path.n_events)


def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def write_trajectory_csv(path, traj_or_states, grid=None):
    """Write ``t,E1,...,EN`` rows, one per grid snapshot."""
    if isinstance(traj_or_states, Trajectory):
        traj = traj_or_states
        if grid is None:
            grid = traj.grid_times if not traj.events_logged else \
                np.linspace(0.0, traj.t_end, 257)
        states = traj.sample_on_grid(grid)
        n = traj.cfg.n_cells
    else:
        states = np.asarray(traj_or_states, dtype=float)
        if grid is None or len(grid) != states.shape[0]:
            raise ValueError("grid must match the number of state rows")
        n = states.shape[1]
    header = "t," + ",".join(f"E{i + 1}" for i in range(n))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for t, row in zip(grid, states):
            fh.write(repr(float(t)) + "," + _format_row(row) + "\n")


def write_events_csv(path, traj: Trajectory):
    """Write the ``t,clock,flux`` event log."""
    if not traj.events_logged:
        raise ValueError("event log not stored (run exceeded the event cap)")
    with open(path, "w") as fh:
        fh.write("t,clock,flux\n")
        for t, k, j in zip(traj.times, traj.clocks, traj.fluxes):
            fh.write(f"{float(t)!r},{int(k)},{float(j)!r}\n")
