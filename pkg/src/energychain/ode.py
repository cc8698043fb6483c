"""Deterministic (many-particle) limit of the chain.

The limiting energy profile solves the nonlinear discrete heat equation

    dE_i/dt = F_i(E) = 1/2 f(E_{i-1}, E_i) (E_{i-1} - E_i)
                     + 1/2 f(E_i, E_{i+1}) (E_{i+1} - E_i)

with the bath convention E_0 = T_L, E_{N+1} = T_R.  This module provides the
drift field, a fixed-step 4th-order integrator, the equilibrium profile via
a shooting construction (forward recursion in the constant bond flux c,
outer bisection on c), the analytic tridiagonal Jacobian with stability
diagnostics, and the conductivity kappa = c* (N+1) / (2 (T_R - T_L)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import ChainConfig, RateFunction, rate, validate_state

__all__ = [
    "OdeSolution",
    "EquilibriumProfile",
    "JacobianReport",
    "Conductivity",
    "drift",
    "integrate_ode",
    "forward_profile",
    "solve_equilibrium",
    "drift_jacobian",
    "jacobian",
    "gamma",
    "conductivity",
    "write_equilibrium_csv",
]


def drift(state, cfg: ChainConfig) -> np.ndarray:
    """Velocity field F of the limiting discrete heat equation."""
    e = validate_state(state, cfg.n_cells)
    slots = cfg.slot_energies(e)
    f = cfg.bond_rates(e)
    left = slots[:-2]    # E_{i-1}
    right = slots[2:]    # E_{i+1}
    return 0.5 * (f[:-1] * (left - e) + f[1:] * (right - e))


@dataclass
class OdeSolution:
    times: np.ndarray
    states: np.ndarray   # (len(times), N)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def integrate_ode(cfg: ChainConfig, e0, t_end: float, dt: float) -> OdeSolution:
    """Classical fixed-step RK4 integration of the limit equation.

    The step count is ``round(t_end / dt)`` so halving ``dt`` doubles the
    steps; endpoint error is O(dt^4) on this smooth field.
    """
    if not dt > 0.0 or not t_end > 0.0:
        raise ValueError("dt and t_end must be positive")
    n_steps = max(1, round(t_end / dt))
    h = t_end / n_steps
    y = validate_state(e0, cfg.n_cells)
    states = np.empty((n_steps + 1, cfg.n_cells))
    states[0] = y
    for k in range(n_steps):
        k1 = drift(y, cfg)
        k2 = drift(y + 0.5 * h * k1, cfg)
        k3 = drift(y + 0.5 * h * k2, cfg)
        k4 = drift(y + h * k3, cfg)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.any(y <= 0.0):
            raise ValueError(f"state left the positive cone at step {k + 1}; reduce dt")
        states[k + 1] = y
    return OdeSolution(times=np.linspace(0.0, t_end, n_steps + 1), states=states)


@dataclass
class EquilibriumProfile:
    """Stationary profile E*, its constant bond flux c*, and solver diagnostics."""

    e_star: np.ndarray
    c_star: float
    residual: float
    iterations: int


def _solve_cell(cfg: ChainConfig, a: float, c: float, xtol: float) -> float:
    """Solve ``f(a, x) (x - a) = c`` for x >= a (c >= 0) by bracketing bisection."""
    if c == 0.0:
        return a
    fn, cap = cfg.rate_fn, cfg.rate_cap

    def g(x: float) -> float:
        return rate(fn, a, x, cap) * (x - a) - c

    width = c / rate(fn, a, a, cap) + 1.0
    hi = a + width
    for _ in range(200):
        if g(hi) >= 0.0:
            break
        width *= 2.0
        hi = a + width
    else:
        raise RuntimeError(
            f"bracket expansion failed: f({a}, x)(x - {a}) never reaches c={c}")
    lo = a
    for _ in range(200):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def forward_profile(cfg: ChainConfig, c: float, xtol: float = 1e-12) -> tuple[np.ndarray, float]:
    """Profile built from the left bath at bond flux ``c``; returns (cells, matched T_R).

    The matched right boundary is continuous and strictly increasing in
    ``c``, which is what makes the outer bisection in
    :func:`solve_equilibrium` well posed.  Requires ``c >= 0`` (solve the
    mirrored chain for decreasing profiles).
    """
    if c < 0.0:
        raise ValueError("forward_profile expects c >= 0")
    n = cfg.n_cells
    cells = np.empty(n)
    prev = cfg.t_left
    for i in range(n + 1):
        prev = _solve_cell(cfg, prev, c, xtol)
        if i < n:
            cells[i] = prev
    return cells, prev


def solve_equilibrium(cfg: ChainConfig, tol: float = 1e-10) -> EquilibriumProfile:
    """Equilibrium profile by shooting: bisection on the bond flux c.

    For T_L < T_R the forward recursion at flux c gives a matched right
    boundary T_R*(c) with T_R*(0) = T_L and T_R*(K (T_R - T_L)) >= T_R (each
    bond gap is at least c / K), so bisection over [0, K (T_R - T_L)]
    brackets c*.  The inner per-cell solves run at tolerance
    ``tol / (10 (N + 1))`` so their accumulated error stays an order below
    the outer residual target.  Equal baths return the flat profile with
    c* = 0 immediately; T_L > T_R is solved on the mirrored chain (every
    built-in rate kind is symmetric) and reflected back, giving c* < 0.
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    tl, tr = cfg.t_left, cfg.t_right
    n = cfg.n_cells
    if tl == tr:
        return EquilibriumProfile(e_star=np.full(n, tl), c_star=0.0, residual=0.0,
                                  iterations=0)
    if tl > tr:
        mirrored = solve_equilibrium(replace(cfg, t_left=tr, t_right=tl), tol)
        return EquilibriumProfile(e_star=mirrored.e_star[::-1].copy(),
                                  c_star=-mirrored.c_star,
                                  residual=mirrored.residual,
                                  iterations=mirrored.iterations)
    xtol = tol / (10.0 * (n + 1))
    c_lo, c_hi = 0.0, cfg.rate_cap * (tr - tl)
    for _ in range(60):
        _, matched = forward_profile(cfg, c_hi, xtol)
        if matched >= tr:
            break
        c_hi *= 2.0
    else:
        raise RuntimeError("could not bracket the equilibrium bond flux")
    cells = np.full(n, tl)
    for iteration in range(1, 201):
        c_mid = 0.5 * (c_lo + c_hi)
        cells, matched = forward_profile(cfg, c_mid, xtol)
        residual = abs(matched - tr)
        if residual <= tol:
            return EquilibriumProfile(e_star=cells, c_star=c_mid, residual=residual,
                                      iterations=iteration)
        if matched < tr:
            c_lo = c_mid
        else:
            c_hi = c_mid
    raise RuntimeError(
        f"equilibrium bisection did not reach residual {tol} in 200 iterations "
        f"(last residual {residual}, c interval [{c_lo}, {c_hi}])")


def _capped_partials(fn: RateFunction, a: float, b: float, cap: float):
    """(f, f1, f2) with the cap applied; partials vanish where the cap binds."""
    f, f1, f2 = fn.partials(a, b)
    if f >= cap:
        return cap, 0.0, 0.0
    return f, f1, f2


def drift_jacobian(state, cfg: ChainConfig) -> np.ndarray:
    """Analytic (tridiagonal) Jacobian of :func:`drift` at ``state``."""
    e = validate_state(state, cfg.n_cells)
    n = cfg.n_cells
    slots = cfg.slot_energies(e)
    parts = [_capped_partials(cfg.rate_fn, slots[j], slots[j + 1], cfg.rate_cap)
             for j in range(n + 1)]
    jac = np.zeros((n, n))
    for i in range(n):
        fl, fl1, fl2 = parts[i]          # bond i: (E_{i-1}, E_i)
        fr, fr1, fr2 = parts[i + 1]      # bond i+1: (E_i, E_{i+1})
        dl = slots[i] - e[i]
        dr = slots[i + 2] - e[i]
        jac[i, i] = 0.5 * (fl2 * dl - fl) + 0.5 * (fr1 * dr - fr)
        if i > 0:
            jac[i, i - 1] = 0.5 * (fl1 * dl + fl)
        if i < n - 1:
            jac[i, i + 1] = 0.5 * (fr2 * dr + fr)
    return jac


@dataclass
class JacobianReport:
    """Jacobian at a point plus the stability diagnostics used on equilibria.

    ``gershgorin_ok`` records the row-sum dominance check (every row of the
    Jacobian sums to a negative number), ``gamma_condition_ok`` whether the
    rate function's stability indicator :func:`gamma` has strictly negative
    partial derivatives at every bond pair, and ``fd_max_error`` the largest
    entrywise gap to a central finite-difference Jacobian at step ``h``.
    """

    jac: np.ndarray
    eigen_real_parts: np.ndarray
    gershgorin_ok: bool
    gamma_condition_ok: bool
    fd_max_error: float
    fd_step: float


def _fd_jacobian(state, cfg: ChainConfig, h: float) -> np.ndarray:
    e = validate_state(state, cfg.n_cells)
    n = cfg.n_cells
    out = np.empty((n, n))
    for j in range(n):
        ep = e.copy()
        em = e.copy()
        ep[j] += h
        em[j] -= h
        out[:, j] = (drift(ep, cfg) - drift(em, cfg)) / (2.0 * h)
    return out


def _gamma_partials_negative(cfg: ChainConfig, e_star) -> bool:
    slots = cfg.slot_energies(e_star)
    for j in range(cfg.n_cells + 1):
        a, b = float(slots[j]), float(slots[j + 1])
        h = 1e-6 * max(1.0, a, b)
        try:
            d1 = (gamma(cfg.rate_fn, a + h, b, cfg.rate_cap)
                  - gamma(cfg.rate_fn, a - h, b, cfg.rate_cap)) / (2.0 * h)
            d2 = (gamma(cfg.rate_fn, a, b + h, cfg.rate_cap)
                  - gamma(cfg.rate_fn, a, b - h, cfg.rate_cap)) / (2.0 * h)
        except ValueError:
            return False
        if not (d1 < 0.0 and d2 < 0.0):
            return False
    return True


def jacobian(e_star, cfg: ChainConfig, h: float = 1e-6) -> JacobianReport:
    """Analytic Jacobian at ``e_star`` with eigenvalues and stability checks."""
    if not h > 0.0:
        raise ValueError("h must be positive")
    jac = drift_jacobian(e_star, cfg)
    fd = _fd_jacobian(e_star, cfg, h)
    eigs = np.sort(np.linalg.eigvals(jac).real)
    return JacobianReport(
        jac=jac,
        eigen_real_parts=eigs,
        gershgorin_ok=bool(np.all(jac.sum(axis=1) < 0.0)),
        gamma_condition_ok=_gamma_partials_negative(cfg, e_star),
        fd_max_error=float(np.max(np.abs(jac - fd))),
        fd_step=float(h),
    )


def gamma(fn: RateFunction, e1: float, e2: float, cap: float = math.inf) -> float:
    """Stability indicator of the rate family at a bond pair.

    Closed forms per kind: 0 for constant rates, ``1 / (e1 + e2)`` for the
    square-root-product kind, ``(e1^2 + e2^2) / ((e1 + e2) e1 e2)`` for the
    square-root-harmonic kind, and ``1 / (2 min)`` resp. ``1 / min`` for the
    min kinds.  What matters downstream is the sign of its partial
    derivatives: strictly negative partials along the equilibrium profile
    certify the row-sum dominance that makes the equilibrium linearly
    stable.  Undefined where the cap flattens the rate (raises ValueError).
    """
    if not (e1 > 0.0 and e2 > 0.0):
        raise ValueError("gamma requires strictly positive energies")
    if float(fn.value(e1, e2)) >= cap:
        raise ValueError("rate cap active at this point; gamma undefined where the rate is flat")
    if fn.kind == "constant":
        return 0.0
    if fn.kind == "sqrt_product":
        return 1.0 / (e1 + e2)
    if fn.kind == "sqrt_harmonic":
        return (e1 * e1 + e2 * e2) / ((e1 + e2) * e1 * e2)
    if fn.kind == "min_energy_sqrt":
        return 1.0 / (2.0 * min(e1, e2))
    return 1.0 / min(e1, e2)


@dataclass
class Conductivity:
    """Fourier-law conductivity of the equilibrium profile with sandwich bounds."""

    kappa: float
    c_star: float
    lower: float
    upper: float
    equilibrium: EquilibriumProfile


def conductivity(cfg: ChainConfig, tol: float = 1e-10) -> Conductivity:
    """kappa = c* (N + 1) / (2 (T_R - T_L)), bracketed by the bath-rate bounds.

    Monotonicity of the rate function sandwiches kappa between
    ``f(T_L, T_L) / 2`` and ``f(T_R, T_R) / 2`` (in bath order), which pins
    the small-gap limit at half the cold-bath self-rate.
    """
    if cfg.t_left == cfg.t_right:
        raise ValueError("conductivity undefined for equal bath temperatures")
    prof = solve_equilibrium(cfg, tol)
    kappa = prof.c_star * (cfg.n_cells + 1) / (2.0 * (cfg.t_right - cfg.t_left))
    b1 = 0.5 * cfg.rate(cfg.t_left, cfg.t_left)
    b2 = 0.5 * cfg.rate(cfg.t_right, cfg.t_right)
    return Conductivity(kappa=float(kappa), c_star=prof.c_star,
                        lower=min(b1, b2), upper=max(b1, b2), equilibrium=prof)


def write_equilibrium_csv(path, profile: EquilibriumProfile):
    """Write the ``i,E_star`` table."""
    with open(path, "w") as fh:
        fh.write("i,E_star\n")
        for i, v in enumerate(profile.e_star, start=1):
            fh.write(f"{i},{float(v)!r}\n")
