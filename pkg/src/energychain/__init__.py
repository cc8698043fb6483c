"""Boundary-driven stochastic energy-exchange chain: simulation and limit laws.

The package is organized by scale:

* :mod:`energychain.model`   -- domain types, rate functions, one exchange event;
* :mod:`energychain.jump`    -- exact event-driven simulation, trajectories, ensembles;
* :mod:`energychain.ode`     -- the deterministic limit, equilibria, conductivity;
* :mod:`energychain.sde`     -- fluctuation structure: moment matrices, limit SDEs,
  Lyapunov steady-state Gaussian;
* :mod:`energychain.verify`  -- statistical experiments confronting simulation with
  the limit laws;
* :mod:`energychain.cli`     -- the ``energychain`` command-line tool.
"""

__version__ = "0.1.0"

from .model import (
    ChainConfig,
    EnergyState,
    EventRecord,
    ExchangeDraw,
    RATE_KINDS,
    RateFunction,
    apply_exchange,
    rate,
    sample_bath_energy,
    sample_beta,
    select_clock,
    total_rate,
    validate_state,
)
from .streams import SequenceStream, UniformStream, derive_path_seed, splitmix64
from .jump import (
    EnsembleStats,
    PathState,
    Trajectory,
    ensemble,
    path_functionals,
    simulate,
    step,
    time_averages,
)
from .ode import (
    Conductivity,
    EquilibriumProfile,
    JacobianReport,
    OdeSolution,
    conductivity,
    drift,
    drift_jacobian,
    forward_profile,
    gamma,
    integrate_ode,
    jacobian,
    solve_equilibrium,
)
from .sde import (
    CovarianceSolution,
    MesoResult,
    MomentMatrix,
    NessGaussian,
    OracleMoments,
    SdePath,
    bond_flux_second_moment,
    clt_ensemble,
    covariance_flow,
    covariance_ode,
    h_matrix,
    integrate_clt_sde,
    integrate_mesoscopic,
    lyapunov_solve,
    moments_exact,
    moments_oracle,
    ness_gaussian,
    sigma_matrix,
    v_coeff,
)
from .verify import (
    Check,
    ExperimentReport,
    beta_tail_check,
    clt_experiment,
    fourier_experiment,
    lln_experiment,
    mesoscopic_comparison,
    moment_oracle_experiment,
    ness_experiment,
    render_text,
)

__all__ = [name for name in dir() if not name.startswith("_")]
