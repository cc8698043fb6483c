"""Second-order structure: noise amplitudes, moment matrices, and the limit SDEs.

One exchange event moves an O(1/M) energy parcel; the rescaled second-moment
matrix of the event increment has the closed tridiagonal form assembled here
from Beta and uniform moments (E[B] = 1/M, E[B^2] = 2/(M(M+1)), E[p^2] = 1/3,
E[p(1-p)] = 1/6, and E[Z] = 1, E[Z^2] = 2 for the bath draw).  Its M -> inf
limit factorizes as H Hᵀ / R through the N x (N+1) bond-noise matrix H whose
row i carries +V on bond i-1 and -V on bond i, with

    V(x1, x2)      = sqrt(f (2/3 x1^2 - 1/3 x1 x2 + 2/3 x2^2))      interior
    V_left(x1, x2) = sqrt(f (4/3 x1^2 - 1/3 x1 x2 + 2/3 x2^2))      bath on x1
    V_right(x1,x2) = sqrt(f (2/3 x1^2 - 1/3 x1 x2 + 4/3 x2^2))      bath on x2

The signed H reproduces the negative neighbor correlations of the increment.
On top of that sit the Gaussian fluctuation SDE dG = DF(theta(t)) G dt +
H(theta(t)) dW driven by N+1 independent channels, the covariance evolution
ODE, the finite-M diffusion approximation dZ = F(Z) dt + M^{-1/2} H(Z) dW,
and the stationary Lyapunov solve behind the Gaussian steady-state picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ChainConfig, RateFunction, rate, validate_state
from .ode import drift_jacobian, jacobian, solve_equilibrium
from .streams import uniform_block

__all__ = [
    "MomentMatrix",
    "OracleMoments",
    "CovarianceSolution",
    "SdePath",
    "MesoResult",
    "NessGaussian",
    "v_coeff",
    "h_matrix",
    "sigma_matrix",
    "bond_flux_second_moment",
    "moments_exact",
    "moments_oracle",
    "covariance_flow",
    "covariance_ode",
    "integrate_clt_sde",
    "clt_ensemble",
    "integrate_mesoscopic",
    "lyapunov_solve",
    "ness_gaussian",
    "write_matrix_csv",
]

_ROLES = ("interior", "left", "right")


@dataclass(frozen=True)
class MomentMatrix:
    """A symmetric N x N moment/covariance matrix tagged with its meaning.

    Kinds in use: ``sigma`` (rescaled one-event limit H Hᵀ / R), ``hht``,
    ``event_moments`` (exact finite-M one-event second moments),
    ``empirical_cov``, ``covariance_ode``, and ``lyapunov_S``.
    """

    entries: np.ndarray
    kind: str


def _quadratic(e1, e2, role: str):
    q = (2.0 / 3.0) * e1 * e1 - (1.0 / 3.0) * e1 * e2 + (2.0 / 3.0) * e2 * e2
    if role == "left":
        q = q + (2.0 / 3.0) * e1 * e1
    elif role == "right":
        q = q + (2.0 / 3.0) * e2 * e2
    elif role != "interior":
        raise ValueError(f"unknown role {role!r}; expected one of {_ROLES}")
    return q


def v_coeff(fn: RateFunction, e1: float, e2: float, role: str = "interior",
            cap: float = math.inf) -> float:
    """Bond noise amplitude ``sqrt(f * q)`` with the role-dependent quadratic form.

    The interior form satisfies ``q(e, e) = e^2`` exactly; bath-side roles add
    ``2/3`` of the squared bath energy (the bath draw has second moment twice
    its squared mean).
    """
    f = rate(fn, e1, e2, cap)
    return math.sqrt(f * _quadratic(float(e1), float(e2), role))


def _bond_roles(n_bonds: int):
    return ["left"] + ["interior"] * (n_bonds - 2) + ["right"]


def h_matrix(state, cfg: ChainConfig) -> np.ndarray:
    """The N x (N+1) signed bond-noise matrix H.

    Row i has ``+V`` on bond i-1 and ``-V`` on bond i (0-indexed columns are
    bonds), so adjacent rows share a bond column with opposite signs and
    ``(H Hᵀ)_{i,i+1} = -V^2 <= 0``.
    """
    e = validate_state(state, cfg.n_cells)
    n = cfg.n_cells
    slots = cfg.slot_energies(e)
    roles = _bond_roles(n + 1)
    v = np.array([v_coeff(cfg.rate_fn, slots[j], slots[j + 1], roles[j], cfg.rate_cap)
                  for j in range(n + 1)])
    h = np.zeros((n, n + 1))
    for i in range(n):
        h[i, i] = v[i]
        h[i, i + 1] = -v[i + 1]
    return h


def sigma_matrix(state, cfg: ChainConfig) -> MomentMatrix:
    """Rescaled one-event second-moment limit ``H Hᵀ / R`` (tridiagonal, PSD)."""
    h = h_matrix(state, cfg)
    r = float(np.sum(cfg.bond_rates(state)))
    return MomentMatrix(entries=h @ h.T / r, kind="sigma")


def bond_flux_second_moment(e1: float, e2: float, m: int, role: str = "interior") -> float:
    """Exact one-event ``E[J^2]`` for a bond at finite M (unrescaled).

    Interior bonds:  ``(2/3 e1^2 M/(M+1) - 1/3 e1 e2 + 2/3 e2^2 M/(M+1)) / M^2``;
    a bath-side role promotes its ``2/3`` coefficient to ``4/3``.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    mm = m / (m + 1.0)
    base = (2.0 / 3.0) * e1 * e1 * mm - (1.0 / 3.0) * e1 * e2 + (2.0 / 3.0) * e2 * e2 * mm
    if role == "left":
        base += (2.0 / 3.0) * e1 * e1 * mm
    elif role == "right":
        base += (2.0 / 3.0) * e2 * e2 * mm
    elif role != "interior":
        raise ValueError(f"unknown role {role!r}; expected one of {_ROLES}")
    return base / (m * m)


def moments_exact(state, cfg: ChainConfig, m: int | None = None) -> MomentMatrix:
    """Exact one-event second-moment matrix ``E[zeta zetaᵀ]`` at finite M.

    Assembled from the per-bond ``E[J^2]`` and the clock probabilities
    ``f_k / R``: with ``C_k = (f_k / R) E[J_k^2]`` the matrix is tridiagonal
    with diagonal ``C_{k-1} + C_k`` and off-diagonal ``-C_k`` (neighbor
    increments are exact opposites, hence anticorrelated), and zero beyond
    the band.
    """
    m = cfg.particles_per_cell if m is None else int(m)
    e = validate_state(state, cfg.n_cells)
    n = cfg.n_cells
    slots = cfg.slot_energies(e)
    f = cfg.bond_rates(e)
    r = float(np.sum(f))
    roles = _bond_roles(n + 1)
    c = np.array([f[j] / r * bond_flux_second_moment(slots[j], slots[j + 1], m, roles[j])
                  for j in range(n + 1)])
    mat = np.zeros((n, n))
    for i in range(n):
        mat[i, i] = c[i] + c[i + 1]
        if i + 1 < n:
            mat[i, i + 1] = -c[i + 1]
            mat[i + 1, i] = -c[i + 1]
    return MomentMatrix(entries=mat, kind="event_moments")


@dataclass
class OracleMoments:
    """Monte Carlo estimate of ``M^2 E[zeta zetaᵀ]`` with entrywise standard errors."""

    entries: np.ndarray
    se: np.ndarray
    mean_increment: np.ndarray       # unscaled E[zeta]
    mean_increment_se: np.ndarray
    n_samples: int


def moments_oracle(state, cfg: ChainConfig, m: int | None = None,
                   n_samples: int = 100_000, seed: int = 0,
                   chunk: int = 200_000) -> OracleMoments:
    """Estimate the one-event moments by direct sampling from a fixed state.

    Each sample draws a clock through the cumulative-rate partition and an
    independent exchange, then averages ``M^2 zeta zetaᵀ``.  This is the
    independent arbiter for :func:`moments_exact` and for the coefficient
    set baked into :func:`v_coeff`.
    """
    m = cfg.particles_per_cell if m is None else int(m)
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    e = validate_state(state, cfg.n_cells)
    n = cfg.n_cells
    slots = cfg.slot_energies(e)
    f = cfg.bond_rates(e)
    cum = np.cumsum(f)
    rng = np.random.Generator(np.random.PCG64(seed))

    sum_p = np.zeros((n, n))
    sumsq_p = np.zeros((n, n))
    sum_z = np.zeros(n)
    sumsq_z = np.zeros(n)
    left = n_samples
    while left > 0:
        size = min(chunk, left)
        left -= size
        p1 = uniform_block(rng, size)
        p2 = uniform_block(rng, size)
        p3 = uniform_block(rng, size)
        b1 = -np.expm1(np.log1p(-uniform_block(rng, size)) / (m - 1))
        b2 = -np.expm1(np.log1p(-uniform_block(rng, size)) / (m - 1))
        clock = np.minimum(np.searchsorted(cum, p1 * cum[-1], side="right"), n)
        zeta = np.zeros((size, n))
        for k in range(n + 1):
            mask = clock == k
            if not np.any(mask):
                continue
            if k == 0:
                bath = -cfg.t_left * np.log1p(-p2[mask])
                flux = p3[mask] * (b2[mask] * bath) - (1.0 - p3[mask]) * (b1[mask] * e[0])
                zeta[mask, 0] += flux
            elif k == n:
                bath = -cfg.t_right * np.log1p(-p2[mask])
                flux = (1.0 - p3[mask]) * (b1[mask] * e[n - 1]) - p3[mask] * (b2[mask] * bath)
                zeta[mask, n - 1] -= flux
            else:
                flux = (1.0 - p3[mask]) * (b1[mask] * e[k - 1]) - p3[mask] * (b2[mask] * e[k])
                zeta[mask, k - 1] -= flux
                zeta[mask, k] += flux
        scaled = m * zeta
        prod = scaled[:, :, None] * scaled[:, None, :]
        sum_p += prod.sum(axis=0)
        sumsq_p += (prod * prod).sum(axis=0)
        sum_z += zeta.sum(axis=0)
        sumsq_z += (zeta * zeta).sum(axis=0)

    def _mean_se(s, sq):
        mean = s / n_samples
        var = np.maximum(sq - n_samples * mean * mean, 0.0) / (n_samples - 1)
        return mean, np.sqrt(var / n_samples)

    entries, se = _mean_se(sum_p, sumsq_p)
    mean_z, se_z = _mean_se(sum_z, sumsq_z)
    return OracleMoments(entries=entries, se=se, mean_increment=mean_z,
                         mean_increment_se=se_z, n_samples=int(n_samples))


@dataclass
class CovarianceSolution:
    times: np.ndarray
    covs: np.ndarray     # (len(times), N, N)

    @property
    def final(self) -> np.ndarray:
        return self.covs[-1]


def covariance_flow(a_nodes, q_nodes, t_end: float) -> np.ndarray:
    """RK4 integration of ``S' = A(t) S + S A(t)ᵀ + Q(t)`` from ``S(0) = 0``.

    ``a_nodes`` and ``q_nodes`` hold the coefficients on a uniform half-step
    grid of odd length ``2 n + 1`` covering [0, t_end], so every RK4 stage
    lands exactly on a node and the scheme keeps its 4th order.
    """
    a_nodes = np.asarray(a_nodes, dtype=float)
    q_nodes = np.asarray(q_nodes, dtype=float)
    if a_nodes.shape != q_nodes.shape or a_nodes.ndim != 3 or a_nodes.shape[0] % 2 == 0:
        raise ValueError("coefficient nodes must share an odd-length (2n+1, N, N) shape")
    n_steps = (a_nodes.shape[0] - 1) // 2
    dim = a_nodes.shape[1]
    h = t_end / n_steps
    covs = np.empty((n_steps + 1, dim, dim))
    s = np.zeros((dim, dim))
    covs[0] = s

    def rhs(a, q, x):
        return a @ x + x @ a.T + q

    for k in range(n_steps):
        a0, ah, a1 = a_nodes[2 * k], a_nodes[2 * k + 1], a_nodes[2 * k + 2]
        q0, qh, q1 = q_nodes[2 * k], q_nodes[2 * k + 1], q_nodes[2 * k + 2]
        k1 = rhs(a0, q0, s)
        k2 = rhs(ah, qh, s + 0.5 * h * k1)
        k3 = rhs(ah, qh, s + 0.5 * h * k2)
        k4 = rhs(a1, q1, s + h * k3)
        s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        s = 0.5 * (s + s.T)
        covs[k + 1] = s
    return covs


def _check_half_grid(theta_times, theta_states, t_end, dt, n_cells):
    theta_times = np.asarray(theta_times, dtype=float)
    theta_states = np.asarray(theta_states, dtype=float)
    n_steps = round(t_end / dt)
    if n_steps < 1 or not math.isclose(n_steps * dt, t_end, rel_tol=1e-9):
        raise ValueError("t_end must be an integer number of dt steps")
    expected = np.linspace(0.0, t_end, 2 * n_steps + 1)
    if theta_times.shape != expected.shape or not np.allclose(theta_times, expected,
                                                              rtol=1e-9, atol=1e-12):
        raise ValueError(
            "grid mismatch: the reference path must be sampled at dt/2 spacing "
            f"({2 * n_steps + 1} points on [0, {t_end}]); integrate it with dt/2")
    if theta_states.shape != (theta_times.size, n_cells):
        raise ValueError("reference states must have shape (len(times), n_cells)")
    return theta_times, theta_states, n_steps


def covariance_ode(cfg: ChainConfig, theta_times, theta_states, t_end: float,
                   dt: float) -> CovarianceSolution:
    """Covariance of the fluctuation SDE along a reference path.

    Integrates ``S' = DF(theta) S + S DF(theta)ᵀ + H(theta) H(theta)ᵀ`` with
    ``S(0) = 0`` by RK4.  The reference path must be supplied on the dt/2
    half grid (see :func:`covariance_flow`).
    """
    theta_times, theta_states, n_steps = _check_half_grid(
        theta_times, theta_states, t_end, dt, cfg.n_cells)
    a_nodes = np.array([drift_jacobian(th, cfg) for th in theta_states])
    q_nodes = np.empty_like(a_nodes)
    for i, th in enumerate(theta_states):
        h = h_matrix(th, cfg)
        q_nodes[i] = h @ h.T
    covs = covariance_flow(a_nodes, q_nodes, t_end)
    return CovarianceSolution(times=theta_times[::2].copy(), covs=covs)


@dataclass
class SdePath:
    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _theta_at(theta_times, theta_states, t):
    cols = [np.interp(t, theta_times, theta_states[:, j])
            for j in range(theta_states.shape[1])]
    return np.array(cols)


def integrate_clt_sde(cfg: ChainConfig, theta_times, theta_states, t_end: float,
                      dt: float, seed: int, noise_scale: float = 1.0) -> SdePath:
    """One Euler-Maruyama path of the fluctuation SDE, started at zero.

    ``dG = DF(theta(t)) G dt + H(theta(t)) dW`` with N+1 independent Gaussian
    channels per step, driven through the rectangular H rather than a matrix
    square root.  The reference path is linearly interpolated between its
    grid points; by default the caller supplies it at the same dt.
    ``noise_scale=0`` is the zero-noise diagnostic (the path stays at 0).
    """
    theta_times = np.asarray(theta_times, dtype=float)
    theta_states = np.asarray(theta_states, dtype=float)
    n_steps = max(1, round(t_end / dt))
    h = t_end / n_steps
    rng = np.random.Generator(np.random.PCG64(seed))
    n = cfg.n_cells
    g = np.zeros(n)
    out = np.empty((n_steps + 1, n))
    out[0] = g
    root = math.sqrt(h)
    for k in range(n_steps):
        th = _theta_at(theta_times, theta_states, k * h)
        a = drift_jacobian(th, cfg)
        hm = h_matrix(th, cfg)
        xi = rng.standard_normal(n + 1)
        g = g + (a @ g) * h + noise_scale * root * (hm @ xi)
        out[k + 1] = g
    return SdePath(times=np.linspace(0.0, t_end, n_steps + 1), states=out)


def clt_ensemble(cfg: ChainConfig, theta_times, theta_states, t_end: float,
                 dt: float, seed: int, n_paths: int) -> np.ndarray:
    """Final-time samples of the fluctuation SDE, vectorized across paths."""
    theta_times = np.asarray(theta_times, dtype=float)
    theta_states = np.asarray(theta_states, dtype=float)
    n_steps = max(1, round(t_end / dt))
    h = t_end / n_steps
    n = cfg.n_cells
    a_list = []
    h_list = []
    for k in range(n_steps):
        th = _theta_at(theta_times, theta_states, k * h)
        a_list.append(drift_jacobian(th, cfg))
        h_list.append(h_matrix(th, cfg))
    rng = np.random.Generator(np.random.PCG64(seed))
    g = np.zeros((n_paths, n))
    root = math.sqrt(h)
    for k in range(n_steps):
        xi = rng.standard_normal((n_paths, n + 1))
        g = g + (g @ a_list[k].T) * h + root * (xi @ h_list[k].T)
    return g


def _drift_rows(z, cfg: ChainConfig):
    """Drift field evaluated row-wise on a (paths, N) batch of states."""
    p, n = z.shape
    big = np.empty((p, n + 2))
    big[:, 0] = cfg.t_left
    big[:, 1:-1] = z
    big[:, -1] = cfg.t_right
    f = np.minimum(cfg.rate_fn.value(big[:, :-1], big[:, 1:]), cfg.rate_cap)
    return 0.5 * (f[:, :-1] * (big[:, :-2] - z) + f[:, 1:] * (big[:, 2:] - z))


def _v_rows(z, cfg: ChainConfig):
    """Bond noise amplitudes evaluated row-wise: shape (paths, N + 1)."""
    p, n = z.shape
    big = np.empty((p, n + 2))
    big[:, 0] = cfg.t_left
    big[:, 1:-1] = z
    big[:, -1] = cfg.t_right
    a = big[:, :-1]
    b = big[:, 1:]
    f = np.minimum(cfg.rate_fn.value(a, b), cfg.rate_cap)
    q = (2.0 / 3.0) * a * a - (1.0 / 3.0) * a * b + (2.0 / 3.0) * b * b
    q[:, 0] += (2.0 / 3.0) * a[:, 0] ** 2
    q[:, -1] += (2.0 / 3.0) * b[:, -1] ** 2
    return np.sqrt(f * q)


@dataclass
class MesoResult:
    """Euler-Maruyama output for the finite-M diffusion approximation."""

    times: np.ndarray
    path: np.ndarray | None        # (n_steps + 1, N) for single-path runs
    finals: np.ndarray             # (n_paths, N)
    clamp_count: int
    n_steps: int
    m: int


def integrate_mesoscopic(cfg: ChainConfig, z0, t_end: float, dt: float, seed: int, *,
                         m: int | None = None, n_paths: int = 1,
                         max_clamp_frac: float = 0.1) -> MesoResult:
    """Euler-Maruyama integration of ``dZ = F(Z) dt + M^{-1/2} H(Z) dW``.

    The continuous process is positive but the discretization is not, so a
    guard protects the positive cone: if a step would push any entry at or
    below ``eps0 = 1e-9 max(T_L, T_R)``, that path's Gaussian is resampled
    once; if the retry still violates, offending entries are clamped to
    ``eps0`` and counted.  A clamp fraction above ``max_clamp_frac`` of all
    path-steps raises, signalling a dt too large for the given M.
    """
    m = cfg.particles_per_cell if m is None else int(m)
    if m < 2:
        raise ValueError("m must be >= 2")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    z0 = validate_state(z0, cfg.n_cells)
    n_steps = max(1, round(t_end / dt))
    h = t_end / n_steps
    eps0 = 1e-9 * max(cfg.t_left, cfg.t_right)
    root = math.sqrt(h / m)
    rng = np.random.Generator(np.random.PCG64(seed))
    n = cfg.n_cells
    z = np.tile(z0, (n_paths, 1))
    store = n_paths == 1
    path = np.empty((n_steps + 1, n)) if store else None
    if store:
        path[0] = z0
    clamps = 0
    for k in range(n_steps):
        f = _drift_rows(z, cfg)
        v = _v_rows(z, cfg)
        xi = rng.standard_normal((n_paths, n + 1))
        w = v * xi
        prop = z + f * h + root * (w[:, :-1] - w[:, 1:])
        bad = (prop <= eps0).any(axis=1)
        if np.any(bad):
            xi2 = rng.standard_normal((int(bad.sum()), n + 1))
            w2 = v[bad] * xi2
            prop[bad] = z[bad] + f[bad] * h + root * (w2[:, :-1] - w2[:, 1:])
            still = prop <= eps0
            count = int(still.sum())
            if count:
                prop[still] = eps0
                clamps += count
        z = prop
        if store:
            path[k + 1] = z[0]
    if clamps > max_clamp_frac * n_steps * n_paths:
        raise RuntimeError(
            f"positivity clamp fired {clamps} times over {n_steps * n_paths} path-steps; "
            f"dt={dt} is too large for m={m}")
    return MesoResult(times=np.linspace(0.0, t_end, n_steps + 1), path=path,
                      finals=z, clamp_count=clamps, n_steps=n_steps, m=m)


def lyapunov_solve(jac, q, residual_tol: float = 1e-8) -> np.ndarray:
    """Solve ``S Jᵀ + J S + Q = 0`` for symmetric PSD S.

    Solved as a dense linear system on the N(N+1)/2 symmetric unknowns,
    which is ample at desk-scale N.  Requires a Hurwitz ``jac`` (all
    eigenvalue real parts negative) and symmetric ``q``; the residual is
    verified against ``residual_tol * ||Q||_max``.
    """
    jac = np.asarray(jac, dtype=float)
    q = np.asarray(q, dtype=float)
    n = jac.shape[0]
    if jac.shape != (n, n) or q.shape != (n, n):
        raise ValueError("jac and q must be square matrices of matching size")
    if not np.allclose(q, q.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(q).max())):
        raise ValueError("q must be symmetric")
    if np.max(np.linalg.eigvals(jac).real) >= 0.0:
        raise ValueError("jac must be Hurwitz (all eigenvalue real parts negative)")
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    index = {p: r for r, p in enumerate(pairs)}
    dim = len(pairs)
    a = np.zeros((dim, dim))
    rhs = np.empty(dim)
    for row, (i, j) in enumerate(pairs):
        rhs[row] = -q[i, j]
        # (J S + S Jᵀ)_{ij} = sum_k J_{ik} S_{kj} + S_{ik} J_{jk}
        for k in range(n):
            a[row, index[(min(k, j), max(k, j))]] += jac[i, k]
            a[row, index[(min(i, k), max(i, k))]] += jac[j, k]
    sol = np.linalg.solve(a, rhs)
    s = np.empty((n, n))
    for (i, j), r in index.items():
        s[i, j] = sol[r]
        s[j, i] = sol[r]
    residual = np.abs(s @ jac.T + jac @ s + q).max()
    scale = max(np.abs(q).max(), np.finfo(float).tiny)
    if residual > residual_tol * scale:
        raise RuntimeError(f"Lyapunov residual {residual:.3e} exceeds {residual_tol:.1e} * ||Q||")
    return s


@dataclass
class NessGaussian:
    """Gaussian approximation N(E*, S/M) of the nonequilibrium steady state.

    ``S`` solves the stationary Lyapunov equation at the equilibrium profile,
    so the covariance shrinks exactly like 1/M.
    """

    e_star: np.ndarray
    s_matrix: np.ndarray
    jacobian_report: object
    lyapunov_residual: float
    m_default: int

    def covariance(self, m: int | None = None) -> np.ndarray:
        m = self.m_default if m is None else int(m)
        return self.s_matrix / m

    def log_density(self, x, m: int | None = None):
        """Log density of N(E*, S/m); normalized, so exp integrates to 1."""
        cov = self.covariance(m)
        n = self.e_star.size
        x = np.asarray(x, dtype=float)
        squeeze = x.ndim == 1
        diff = np.atleast_2d(x) - self.e_star
        sign, logdet = np.linalg.slogdet(cov)
        if sign <= 0:
            raise ValueError("stationary covariance is not positive definite")
        quad = np.einsum("ij,ji->i", diff, np.linalg.solve(cov, diff.T))
        out = -0.5 * (n * math.log(2.0 * math.pi) + logdet + quad)
        return float(out[0]) if squeeze else out

    def density(self, x, m: int | None = None):
        out = self.log_density(x, m)
        return math.exp(out) if np.isscalar(out) else np.exp(out)


def ness_gaussian(cfg: ChainConfig, tol: float = 1e-10) -> NessGaussian:
    """Equilibrium profile, Lyapunov covariance scale, and Gaussian evaluator."""
    prof = solve_equilibrium(cfg, tol)
    report = jacobian(prof.e_star, cfg)
    if report.eigen_real_parts.max() >= 0.0:
        raise ValueError("equilibrium is not linearly stable; no Gaussian steady state")
    h = h_matrix(prof.e_star, cfg)
    s = lyapunov_solve(report.jac, h @ h.T)
    residual = float(np.abs(s @ report.jac.T + report.jac @ s + h @ h.T).max())
    return NessGaussian(e_star=prof.e_star, s_matrix=s, jacobian_report=report,
                        lyapunov_residual=residual, m_default=cfg.particles_per_cell)


def write_matrix_csv(path, matrix):
    """Write a matrix as ``i,j,value`` rows (1-indexed)."""
    m = matrix.entries if isinstance(matrix, MomentMatrix) else np.asarray(matrix)
    with open(path, "w") as fh:
        fh.write("i,j,value\n")
        for i in range(m.shape[0]):
            for j in range(m.shape[1]):
                fh.write(f"{i + 1},{j + 1},{float(m[i, j])!r}\n")
