"""Entropy-production functionals: unified form, Clausius form, corrections.

The unified entropy production compares relative entropies to the reference
family rho_S x gamma_E(beta) at the two endpoints.  The Clausius form is the
system entropy change plus the beta-weighted heat integral; the difference
between the two is the temperature-drift correction, which vanishes for a
constant inverse-temperature assignment.  No sign is asserted for the
Clausius form on its own: only the unified form carries the nonnegativity
guarantees (for product-Gibbs initial states), so the Clausius value is a
diagnostic for general policies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidInput
from .dynamics import Trajectory
from .linalg import BipartiteState, HermitianMatrix, _expi
from .thermo import (
    BetaSolveConfig,
    GibbsSolver,
    mutual_information,
    relative_entropy,
    von_neumann_entropy,
)


@dataclass(frozen=True)
class ConstantBeta:
    """Fixed inverse temperature over the whole trajectory."""

    beta: float

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise InvalidInput("ConstantBeta requires a finite value")


@dataclass(frozen=True)
class EnergyMatching:
    """Track the effective inverse temperature beta_star of the trajectory."""


@dataclass(frozen=True)
class TabulatedBeta:
    """Piecewise-linear interpolation through (time, beta) knots."""

    times: tuple
    betas: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        b = np.asarray(self.betas, dtype=float)
        if t.ndim != 1 or t.shape != b.shape or len(t) < 2:
            raise InvalidInput("tabulated policy needs matching 1-d knots, at least two")
        if not (np.isfinite(t).all() and np.isfinite(b).all()):
            raise InvalidInput("tabulated knots must be finite")
        if not (np.diff(t) > 0).all():
            raise InvalidInput("tabulated times must be strictly increasing")
        object.__setattr__(self, "times", tuple(float(x) for x in t))
        object.__setattr__(self, "betas", tuple(float(x) for x in b))

    def values(self, t) -> np.ndarray:
        return np.interp(np.asarray(t, dtype=float), self.times, self.betas)


BetaPolicy = Union[ConstantBeta, EnergyMatching, TabulatedBeta]

# Tabulated knots must cover the trajectory span up to this slack.
_SPAN_TOL = 1e-9


def policy_grid_betas(policy: BetaPolicy, traj: Trajectory) -> np.ndarray:
    """Inverse temperature at every trajectory grid point."""
    if isinstance(policy, ConstantBeta):
        return np.full(len(traj), policy.beta)
    if isinstance(policy, EnergyMatching):
        return np.asarray(traj.beta_star)
    if isinstance(policy, TabulatedBeta):
        if policy.times[0] > traj.times[0] + _SPAN_TOL or \
                policy.times[-1] < traj.times[-1] - _SPAN_TOL:
            raise InvalidInput(
                f"tabulated policy spans [{policy.times[0]}, {policy.times[-1]}] "
                f"but the trajectory covers [{traj.times[0]}, {traj.times[-1]}]"
            )
        return policy.values(traj.times)
    raise InvalidInput(f"unknown beta policy {policy!r}")


def policy_endpoints(policy: BetaPolicy, traj: Trajectory) -> tuple[float, float]:
    betas = policy_grid_betas(policy, traj)
    return float(betas[0]), float(betas[-1])


def entropy_production(initial: BipartiteState, final: BipartiteState,
                       beta0: float, beta_tau: float,
                       h_env: HermitianMatrix) -> float:
    """Change in relative entropy to the references rho_S x gamma(beta).

    Computed through the marginal decomposition: change in mutual
    information plus the change of the environment's divergence from the
    respective Gibbs state.  Infinite endpoint temperatures are rejected;
    resolve them to the spectral-edge Gibbs projectors upstream if needed.
    """
    if not (isinstance(initial, BipartiteState) and isinstance(final, BipartiteState)):
        raise InvalidInput("entropy_production expects BipartiteState endpoints")
    if (initial.d_s, initial.d_e) != (final.d_s, final.d_e):
        raise InvalidInput("endpoint states must share dimensions")
    if not (math.isfinite(beta0) and math.isfinite(beta_tau)):
        raise InvalidInput("endpoint inverse temperatures must be finite")
    solver = GibbsSolver(h_env)
    if solver.dim != initial.d_e:
        raise InvalidInput("environment Hamiltonian does not match the states")
    d_i = mutual_information(final) - mutual_information(initial)
    d_env = (relative_entropy(final.rho_env, solver.state(beta_tau))
             - relative_entropy(initial.rho_env, solver.state(beta0)))
    return d_i + d_env


def clausius_entropy_production(traj: Trajectory, policy: BetaPolicy) -> float:
    """System entropy change plus the beta-weighted heat integral.

    For ConstantBeta the integral telescopes to the endpoint energy
    difference and is evaluated in closed form; other policies use
    per-segment trapezoidal quadrature of beta_t times the analytic
    environment-energy rate (segment-local rates keep boundary jumps of the
    generator out of the quadrature error).
    """
    d_s_entropy = _system_entropy_change(traj)
    if isinstance(policy, ConstantBeta):
        return d_s_entropy + policy.beta * float(traj.env_energy[-1] - traj.env_energy[0])
    betas = policy_grid_betas(policy, traj)
    if not np.isfinite(betas).all():
        raise InvalidInput(
            "policy produced a non-finite inverse temperature on the grid; "
            "the quadrature form needs finite values throughout"
        )
    heat_term = 0.0
    for sl, rates in zip(traj.segment_slices, traj.segment_rates):
        heat_term += float(np.trapezoid(betas[sl] * rates, traj.times[sl]))
    return d_s_entropy + heat_term


def temperature_drift_correction(traj: Trajectory, policy: BetaPolicy) -> float:
    """Integral of beta_dot times the thermal-energy mismatch.

    Exactly zero for ConstantBeta.  For EnergyMatching the integrand is
    identically zero because the policy values are the matched temperatures
    themselves.  The quadrature uses exact per-interval beta increments, so
    piecewise-linear tabulated policies incur only the O(dt^2) error of the
    smooth factor.
    """
    if isinstance(policy, ConstantBeta):
        return 0.0
    betas = policy_grid_betas(policy, traj)
    if not np.isfinite(betas).all():
        raise InvalidInput("temperature_drift_correction needs finite grid betas")
    solver = GibbsSolver(traj.schedule.h_env)
    finite_star = np.isfinite(traj.beta_star)
    if not finite_star.all():
        raise InvalidInput("trajectory has spectral-edge beta_star; drift is undefined")
    mismatch = solver.energy(np.asarray(traj.beta_star)) - solver.energy(betas)
    dbeta = np.diff(betas)
    return float((dbeta * 0.5 * (mismatch[:-1] + mismatch[1:])).sum())


def matched_entropy_production(traj: Trajectory) -> float:
    """Entropy production at the energy-matching temperatures (endpoint form).

    Equals the Clausius form evaluated along beta_star, but is computed from
    endpoint entropies alone so it carries no quadrature error.
    """
    solver = GibbsSolver(traj.schedule.h_env)
    return _matched_entropy_form(
        traj.initial, traj.final, solver,
        float(traj.beta_star[0]), float(traj.beta_star[-1]),
    )


def _matched_entropy_form(initial: BipartiteState, final: BipartiteState,
                          solver: GibbsSolver,
                          beta_star_0: float, beta_star_tau: float) -> float:
    d_s_entropy = (von_neumann_entropy(final.rho_sys)
                   - von_neumann_entropy(initial.rho_sys))
    d_e_entropy = (von_neumann_entropy(final.rho_env)
                   - von_neumann_entropy(initial.rho_env))
    d_gibbs = ((solver.entropy(beta_star_tau) - von_neumann_entropy(final.rho_env))
               - (solver.entropy(beta_star_0) - von_neumann_entropy(initial.rho_env)))
    return d_s_entropy + d_e_entropy + d_gibbs


def entropy_production_rate(rho: BipartiteState, h_total: HermitianMatrix,
                            h_env: HermitianMatrix, beta: float, beta_dot: float,
                            dt_fd: float = 1e-6,
                            beta_cfg: BetaSolveConfig = BetaSolveConfig()) -> float:
    """Instantaneous rate: dS_S/dt - beta dQ/dt + beta_dot * energy mismatch.

    The system-entropy derivative is a symmetric finite difference over a
    short auxiliary evolution of length ``dt_fd`` under the frozen
    Hamiltonian; the other two terms are analytic.  The mismatch term is
    exactly zero when ``beta`` equals the state's effective inverse
    temperature or when ``beta_dot`` is zero.
    """
    from .dynamics import env_energy_rate  # local import keeps module load acyclic

    if not isinstance(rho, BipartiteState):
        raise InvalidInput("entropy_production_rate expects a BipartiteState")
    if not (math.isfinite(beta) and math.isfinite(beta_dot)):
        raise InvalidInput("beta and beta_dot must be finite")
    if not (dt_fd > 0 and math.isfinite(dt_fd)):
        raise InvalidInput("dt_fd must be positive and finite")
    if not isinstance(h_total, HermitianMatrix):
        h_total = HermitianMatrix(h_total)
    if not isinstance(h_env, HermitianMatrix):
        h_env = HermitianMatrix(h_env)

    solver = GibbsSolver(h_env)
    rate_env = env_energy_rate(rho, h_total, h_env)

    u = _expi(h_total.mat, dt_fd)
    fwd = BipartiteState._trusted(rho.d_s, rho.d_e, u @ rho.state.mat @ u.conj().T)
    bwd = BipartiteState._trusted(rho.d_s, rho.d_e, u.conj().T @ rho.state.mat @ u)
    ds_dt = (von_neumann_entropy(fwd.rho_sys)
             - von_neumann_entropy(bwd.rho_sys)) / (2.0 * dt_fd)

    env_e = float(np.einsum("ij,ji->", rho.rho_env.mat, solver.h_env.mat).real)
    beta_star = solver.solve_beta(env_e, beta_cfg)
    if beta_dot == 0.0 or beta_star == beta:
        mismatch_term = 0.0
    elif math.isinf(beta_star):
        raise InvalidInput("state sits at a spectral edge; rate mismatch term undefined")
    else:
        mismatch_term = beta_dot * (solver.energy(beta_star) - solver.energy(beta))
    # -beta dQ/dt with dQ/dt = -rate_env.
    return ds_dt + beta * rate_env + mismatch_term


@dataclass(frozen=True)
class EPReport:
    """Full decomposition ledger for one trajectory and policy.

    ``residual_split`` is |entropy_production - clausius - drift| and is
    limited by quadrature accuracy; ``residual_matched_split`` checks the
    endpoint-only decomposition through the matched value and the two
    Gibbs-mismatch terms, and should sit at rounding level.
    """

    entropy_production: float
    clausius_entropy_production: float
    temperature_drift_correction: float
    matched_entropy_production: float
    gibbs_mismatch_initial: float
    gibbs_mismatch_final: float
    mutual_info_change: float
    system_entropy_change: float
    env_entropy_change: float
    gibbs_entropy_change: float
    residual_split: float
    residual_matched_split: float
    beta_0: float
    beta_tau: float
    beta_star_0: float
    beta_star_tau: float

    FIELDS = (
        "entropy_production", "clausius_entropy_production",
        "temperature_drift_correction", "matched_entropy_production",
        "gibbs_mismatch_initial", "gibbs_mismatch_final",
        "mutual_info_change", "system_entropy_change", "env_entropy_change",
        "gibbs_entropy_change", "residual_split", "residual_matched_split",
        "beta_0", "beta_tau", "beta_star_0", "beta_star_tau",
    )

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}


def _system_entropy_change(traj: Trajectory) -> float:
    return (von_neumann_entropy(traj.final.rho_sys)
            - von_neumann_entropy(traj.initial.rho_sys))


def build_report(traj: Trajectory, policy: BetaPolicy) -> EPReport:
    """Evaluate every decomposition quantity for one trajectory and policy."""
    solver = GibbsSolver(traj.schedule.h_env)
    beta0, beta_tau = policy_endpoints(policy, traj)
    bs0 = float(traj.beta_star[0])
    bs_tau = float(traj.beta_star[-1])

    initial, final = traj.initial, traj.final
    ep = entropy_production(initial, final, beta0, beta_tau, traj.schedule.h_env)
    cl = clausius_entropy_production(traj, policy)
    drift = temperature_drift_correction(traj, policy)
    matched = _matched_entropy_form(initial, final, solver, bs0, bs_tau)

    mism0 = solver.gibbs_relative_entropy(bs0, beta0)
    mism_tau = solver.gibbs_relative_entropy(bs_tau, beta_tau)

    s_sys = _system_entropy_change(traj)
    s_env = (von_neumann_entropy(final.rho_env)
             - von_neumann_entropy(initial.rho_env))
    s_gibbs = ((solver.entropy(bs_tau) - von_neumann_entropy(final.rho_env))
               - (solver.entropy(bs0) - von_neumann_entropy(initial.rho_env)))

    return EPReport(
        entropy_production=ep,
        clausius_entropy_production=cl,
        temperature_drift_correction=drift,
        matched_entropy_production=matched,
        gibbs_mismatch_initial=mism0,
        gibbs_mismatch_final=mism_tau,
        mutual_info_change=mutual_information(final) - mutual_information(initial),
        system_entropy_change=s_sys,
        env_entropy_change=s_env,
        gibbs_entropy_change=s_gibbs,
        residual_split=abs(ep - cl - drift),
        residual_matched_split=abs(ep - matched - mism_tau + mism0),
        beta_0=beta0,
        beta_tau=beta_tau,
        beta_star_0=bs0,
        beta_star_tau=bs_tau,
    )
