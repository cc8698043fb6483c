"""Core types and single-event mechanics of the energy-exchange chain.

The chain holds ``N`` cells with strictly positive energies ``E_1..E_N``
between two heat baths at temperatures ``T_L`` (virtual slot 0) and ``T_R``
(virtual slot ``N+1``).  Bond ``k`` joins slots ``k`` and ``k+1`` for
``k = 0..N``; each bond carries an exponential clock with state-dependent
rate ``f(E_k, E_{k+1})`` capped at ``K``.  When a clock rings, the two
endpoints each stake a ``Beta(1, M-1)`` fraction of their energy, the stakes
are pooled, and a uniform share ``p`` of the pool goes back to the left
endpoint, the rest to the right.  A bath endpoint stakes a fresh exponential
draw at bath temperature instead of cell energy.

Every function in this module is pure; nothing here owns random state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RATE_KINDS",
    "EnergyState",
    "RateFunction",
    "ChainConfig",
    "ExchangeDraw",
    "EventRecord",
    "validate_state",
    "rate",
    "total_rate",
    "sample_beta",
    "sample_bath_energy",
    "select_clock",
    "apply_exchange",
]

RATE_KINDS = ("constant", "sqrt_product", "sqrt_harmonic", "min_energy_sqrt", "min_energy")

#: An energy state is a float array of shape (n_cells,) with strictly positive entries.
EnergyState = np.ndarray


def validate_state(state, n_cells: int) -> np.ndarray:
    """Return a validated float copy of a cell-energy vector."""
    e = np.asarray(state, dtype=float)
    if e.shape != (n_cells,):
        raise ValueError(f"expected {n_cells} cell energies, got shape {e.shape}")
    if not np.all(np.isfinite(e)) or np.any(e <= 0.0):
        raise ValueError("cell energies must be finite and strictly positive")
    return e.copy()


def _check_positive_pair(e1: float, e2: float) -> tuple[float, float]:
    e1 = float(e1)
    e2 = float(e2)
    if not (e1 > 0.0 and e2 > 0.0) or not (math.isfinite(e1) and math.isfinite(e2)):
        raise ValueError("rate arguments must be finite and strictly positive")
    return e1, e2


@dataclass(frozen=True)
class RateFunction:
    """Exchange-rate function family ``f(e1, e2)``, evaluated before capping.

    Kinds:
      * ``constant``        -- ``f = c``
      * ``sqrt_product``    -- ``f = sqrt(e1 * e2)``
      * ``sqrt_harmonic``   -- ``f = sqrt(e1 * e2 / (e1 + e2))``
      * ``min_energy_sqrt`` -- ``f = sqrt(min(e1, e2))``
      * ``min_energy``      -- ``f = min(e1, e2)``

    All kinds are symmetric, strictly positive and non-decreasing in each
    argument on the open positive quadrant.  The two ``min`` kinds are not
    differentiable on the diagonal; their reported partials use the convention
    of splitting the subgradient evenly at ties.
    """

    kind: str = "sqrt_product"
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in RATE_KINDS:
            raise ValueError(f"unknown rate kind {self.kind!r}; choose one of {RATE_KINDS}")
        if self.kind == "constant" and not self.c > 0.0:
            raise ValueError("constant rate value must be positive")

    def value(self, e1, e2):
        """Uncapped rate, vectorized over numpy inputs."""
        a, b = np.broadcast_arrays(np.asarray(e1, dtype=float), np.asarray(e2, dtype=float))
        if self.kind == "constant":
            v = np.full(a.shape, self.c)
        elif self.kind == "sqrt_product":
            v = np.sqrt(a * b)
        elif self.kind == "sqrt_harmonic":
            v = np.sqrt(a * b / (a + b))
        elif self.kind == "min_energy_sqrt":
            v = np.sqrt(np.minimum(a, b))
        else:
            v = np.minimum(a, b)
        return float(v) if v.ndim == 0 else v

    def partials(self, e1: float, e2: float) -> tuple[float, float, float]:
        """Uncapped ``(f, df/de1, df/de2)`` at a scalar point."""
        e1, e2 = _check_positive_pair(e1, e2)
        if self.kind == "constant":
            return self.c, 0.0, 0.0
        if self.kind == "sqrt_product":
            v = math.sqrt(e1 * e2)
            return v, v / (2.0 * e1), v / (2.0 * e2)
        if self.kind == "sqrt_harmonic":
            s = e1 + e2
            v = math.sqrt(e1 * e2 / s)
            return v, v * e2 / (2.0 * e1 * s), v * e1 / (2.0 * e2 * s)
        if self.kind == "min_energy_sqrt":
            m = min(e1, e2)
            v = math.sqrt(m)
            g = 0.5 / v
            if e1 < e2:
                return v, g, 0.0
            if e1 > e2:
                return v, 0.0, g
            return v, 0.5 * g, 0.5 * g
        m = min(e1, e2)
        if e1 < e2:
            return m, 1.0, 0.0
        if e1 > e2:
            return m, 0.0, 1.0
        return m, 0.5, 0.5


def _default_rate_cap(t_left: float, t_right: float) -> float:
    # generous enough that the cap essentially never binds near equilibrium
    return 100.0 * math.sqrt(max(t_left, t_right))


@dataclass(frozen=True)
class ChainConfig:
    """Full parameterization of one chain: sizes, baths, rate law, cap, seed.

    ``rate_cap`` defaults to ``100 * sqrt(max(T_L, T_R))`` when left at
    ``None`` so the cap rarely binds for states near the bath temperatures.
    ``master_seed`` is the root of every derived per-path seed.
    """

    n_cells: int
    particles_per_cell: int
    t_left: float
    t_right: float
    rate_fn: RateFunction = field(default_factory=RateFunction)
    rate_cap: float | None = None
    master_seed: int = 0

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 1:
            raise ValueError("n_cells must be an integer >= 1")
        if int(self.particles_per_cell) != self.particles_per_cell or self.particles_per_cell < 2:
            raise ValueError("particles_per_cell must be an integer >= 2")
        object.__setattr__(self, "n_cells", int(self.n_cells))
        object.__setattr__(self, "particles_per_cell", int(self.particles_per_cell))
        if not (self.t_left > 0.0 and math.isfinite(self.t_left)):
            raise ValueError("t_left must be finite and positive")
        if not (self.t_right > 0.0 and math.isfinite(self.t_right)):
            raise ValueError("t_right must be finite and positive")
        if self.rate_cap is None:
            object.__setattr__(self, "rate_cap", _default_rate_cap(self.t_left, self.t_right))
        if not (self.rate_cap > 0.0 and math.isfinite(self.rate_cap)):
            raise ValueError("rate_cap must be finite and positive")
        if not isinstance(self.rate_fn, RateFunction):
            raise ValueError("rate_fn must be a RateFunction")
        seed = int(self.master_seed)
        if not 0 <= seed < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "master_seed", seed)

    def slot_energies(self, state) -> np.ndarray:
        """State padded with the two virtual bath slots: shape (N + 2,)."""
        e = validate_state(state, self.n_cells)
        return np.concatenate(([self.t_left], e, [self.t_right]))

    def bond_rates(self, state) -> np.ndarray:
        """Capped clock rates for bonds 0..N: shape (N + 1,)."""
        slots = self.slot_energies(state)
        return np.minimum(self.rate_fn.value(slots[:-1], slots[1:]), self.rate_cap)

    def rate(self, e1: float, e2: float) -> float:
        return rate(self.rate_fn, e1, e2, self.rate_cap)


@dataclass(frozen=True)
class ExchangeDraw:
    """One event's randomness: three uniforms and two Beta(1, M-1) fractions.

    ``p1`` selects the clock, ``p2`` feeds the bath draw (boundary events
    only; ignored for interior clocks), ``p3`` splits the pooled stake, and
    ``b1``/``b2`` are the staked fractions of the left/right endpoint.
    """

    p1: float
    p2: float
    p3: float
    b1: float
    b2: float

    def __post_init__(self):
        for name in ("p1", "p2", "p3", "b1", "b2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"ExchangeDraw.{name}={v!r} outside the open interval (0, 1)")


@dataclass(frozen=True)
class EventRecord:
    """A single exchange event: absolute time, bond index, signed flux, post-state.

    ``flux`` is the net energy moved from slot ``clock_index`` to slot
    ``clock_index + 1`` (so bond 0 flux is the gain of cell 1 and bond N flux
    is the loss of cell N).
    """

    time: float
    clock_index: int
    flux: float
    state_after: np.ndarray


def rate(fn: RateFunction, e1: float, e2: float, cap: float = math.inf) -> float:
    """Capped exchange rate ``min(f(e1, e2), cap)`` for one bond."""
    e1, e2 = _check_positive_pair(e1, e2)
    return min(float(fn.value(e1, e2)), cap)


def total_rate(state, cfg: ChainConfig) -> float:
    """Sum of the N + 1 capped bond rates, boundary bonds included."""
    return float(np.sum(cfg.bond_rates(state)))


def sample_beta(u: float, m: int) -> float:
    """Inverse-CDF sample of Beta(1, m-1) from one uniform.

    The CDF is ``F(x) = 1 - (1 - x)**(m - 1)``; inverting gives
    ``1 - (1 - u)**(1 / (m - 1))``, computed in log space for stability.
    Exactly one uniform is consumed per variate, which keeps whole event
    streams a deterministic function of the underlying uniform stream.
    """
    u = float(u)
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie in the open interval (0, 1)")
    if int(m) != m or m < 2:
        raise ValueError("m must be an integer >= 2")
    return -math.expm1(math.log1p(-u) / (m - 1))


def sample_bath_energy(u: float, t_bath: float) -> float:
    """Exponential bath draw with mean ``t_bath``: ``-t_bath * log(1 - u)``."""
    u = float(u)
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie in the open interval (0, 1)")
    if not t_bath > 0.0:
        raise ValueError("t_bath must be positive")
    return -t_bath * math.log1p(-u)


def select_clock(state, cfg: ChainConfig, p1: float) -> int:
    """Bond index whose cumulative-rate subinterval contains ``p1``.

    Bond ``k`` is returned when ``p1`` falls in
    ``[sum_{j<k} f_j / R, sum_{j<=k} f_j / R)``, so clock ``k`` fires with
    probability ``f_k / R``.
    """
    p1 = float(p1)
    if not 0.0 < p1 < 1.0:
        raise ValueError("p1 must lie in the open interval (0, 1)")
    cum = np.cumsum(cfg.bond_rates(state))
    k = int(np.searchsorted(cum, p1 * cum[-1], side="right"))
    return min(k, cfg.n_cells)


def apply_exchange(state, cfg: ChainConfig, k: int, draw: ExchangeDraw) -> tuple[np.ndarray, float]:
    """Apply one exchange event on bond ``k`` and return ``(new_state, flux)``.

    The flux is the signed energy moved from slot ``k`` to slot ``k + 1``:

    * interior ``1 <= k <= N-1``: cell ``k`` loses ``flux``, cell ``k+1``
      gains it, so the pair total is conserved up to one rounding ulp;
    * ``k = 0``: only cell 1 changes, ``flux = E_1' - E_1``;
    * ``k = N``: only cell N changes, ``flux = E_N - E_N'``.

    Post-exchange energies are bounded below by ``(1 - b) * E > 0`` for the
    staked fraction ``b``, so positivity is preserved by construction.
    """
    n = cfg.n_cells
    e = validate_state(state, n)
    if int(k) != k or not 0 <= k <= n:
        raise ValueError(f"clock index {k!r} outside [0, {n}]")
    k = int(k)
    b1, b2, p3 = draw.b1, draw.b2, draw.p3
    if k == 0:
        bath = sample_bath_energy(draw.p2, cfg.t_left)
        flux = p3 * (b2 * bath) - (1.0 - p3) * (b1 * e[0])
        e[0] += flux
    elif k == n:
        bath = sample_bath_energy(draw.p2, cfg.t_right)
        flux = (1.0 - p3) * (b1 * e[n - 1]) - p3 * (b2 * bath)
        e[n - 1] -= flux
    else:
        flux = (1.0 - p3) * (b1 * e[k - 1]) - p3 * (b2 * e[k])
        e[k - 1] -= flux
        e[k] += flux
    return e, float(flux)
