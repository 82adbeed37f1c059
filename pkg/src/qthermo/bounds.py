"""Lower bounds on entropy production and sufficient nonnegativity tests.

The central object is the reference product rho_S x gamma(beta_star built
from the environment marginal).  Three nested lower bounds on the matched
entropy production come out of it:

* entropy gap: S(rho_SE) minus the entropy of the reference product,
* trace-distance bound: a continuity estimate of the entropy gap in the
  full system-environment dimension,
* product trace-distance bound: the sharper variant available when the
  initial state factorizes, which only pays the environment dimension.

The sufficient conditions combine the trace-distance bound with a Pinsker
lower bound on the final divergence; when they report ``holds`` the
entropy production is certifiably nonnegative, while a failed check is
inconclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvalidInput, InvalidPerturbation
from .linalg import (
    BipartiteState,
    DensityMatrix,
    HermitianMatrix,
    _ptrace,
    trace_distance,
)
from .thermo import BetaSolveConfig, GibbsSolver, von_neumann_entropy

# Absolute slack (relative to the matrix scale) allowed on the structural
# constraints of a perturbation: vanishing system marginal and vanishing
# environment-marginal diagonal in the energy eigenbasis.
PERTURBATION_TOL = 1e-11

# A bipartite state counts as a product when rho_SE and rho_S x rho_E agree
# entrywise to this relative tolerance.
_PRODUCT_TOL = 1e-12


def binary_entropy(p: float) -> float:
    """Shannon entropy -p ln p - (1-p) ln(1-p) of a bit, in nats."""
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"binary_entropy needs p in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * math.log(p) - (1.0 - p) * math.log1p(-p))


def _beta_star(rho_env: DensityMatrix, solver: GibbsSolver,
               cfg: BetaSolveConfig) -> float:
    energy = float(np.einsum("ij,ji->", rho_env.mat, solver.h_env.mat).real)
    return solver.solve_beta(energy, cfg)


def _reference_product(initial: BipartiteState, solver: GibbsSolver,
                       cfg: BetaSolveConfig) -> tuple[float, BipartiteState]:
    """The reference rho_S x gamma(beta_star) matching the env energy."""
    beta_star = _beta_star(initial.rho_env, solver, cfg)
    mat = np.kron(initial.rho_sys.mat, solver.state(beta_star).mat)
    return beta_star, BipartiteState._trusted(initial.d_s, initial.d_e, mat)


def _check_bipartite_env(initial: BipartiteState, solver: GibbsSolver) -> None:
    if not isinstance(initial, BipartiteState):
        raise InvalidInput("expected a BipartiteState")
    if initial.d_e != solver.dim:
        raise InvalidInput(
            f"environment dimension {initial.d_e} does not match H ({solver.dim})"
        )


def entropy_gap_bound(initial: BipartiteState, h_env: HermitianMatrix,
                      beta_cfg: BetaSolveConfig = BetaSolveConfig()) -> float:
    """Entropy of the state minus entropy of its reference product.

    Always nonpositive; equals minus the divergence from the reference
    product whenever the state's support is compatible with it.  The matched
    entropy production of any unitary evolution started here is bounded
    below by this number.
    """
    solver = GibbsSolver(h_env)
    _check_bipartite_env(initial, solver)
    beta_star = _beta_star(initial.rho_env, solver, beta_cfg)
    return (von_neumann_entropy(initial.state)
            - von_neumann_entropy(initial.rho_sys)
            - solver.entropy(beta_star))


def distance_to_reference(initial: BipartiteState, h_env: HermitianMatrix,
                          beta_cfg: BetaSolveConfig = BetaSolveConfig()) -> float:
    """Trace distance between the state and its reference product."""
    solver = GibbsSolver(h_env)
    _check_bipartite_env(initial, solver)
    _, ref = _reference_product(initial, solver, beta_cfg)
    return trace_distance(initial.state, ref.state)


def _continuity_bound(delta: float, dim: int) -> float:
    # Entropy continuity in trace distance on a dim-level system; the log
    # factor degenerates to 0 at dim = 2.
    return -delta * math.log(dim - 1) - binary_entropy(delta) if dim > 2 \
        else -binary_entropy(delta)


def trace_distance_bound(initial: BipartiteState, h_env: HermitianMatrix,
                         beta_cfg: BetaSolveConfig = BetaSolveConfig()) -> float:
    """Continuity relaxation of the entropy gap in the joint dimension.

    Nonpositive, and never above ``entropy_gap_bound`` in magnitude terms:
    entropy_gap_bound >= trace_distance_bound always holds.
    """
    solver = GibbsSolver(h_env)
    _check_bipartite_env(initial, solver)
    delta = distance_to_reference(initial, h_env, beta_cfg)
    return _continuity_bound(delta, initial.d_s * initial.d_e)


def product_trace_distance_bound(rho_sys: DensityMatrix, rho_env: DensityMatrix,
                                 h_env: HermitianMatrix,
                                 beta_cfg: BetaSolveConfig = BetaSolveConfig()) -> float:
    """Trace-distance bound for a product initial state rho_S x rho_E.

    Sharper than the general bound because the reference differs only on
    the environment factor, so the continuity estimate pays the environment
    dimension alone.  The system factor enters dimension checks only.
    """
    if not isinstance(rho_sys, DensityMatrix):
        rho_sys = DensityMatrix(rho_sys)
    if not isinstance(rho_env, DensityMatrix):
        rho_env = DensityMatrix(rho_env)
    solver = GibbsSolver(h_env)
    if rho_env.dim != solver.dim:
        raise InvalidInput(
            f"environment dimension {rho_env.dim} does not match H ({solver.dim})"
        )
    beta_star = _beta_star(rho_env, solver, beta_cfg)
    delta = trace_distance(rho_env, solver.state(beta_star))
    return _continuity_bound(delta, rho_env.dim)


class SufficiencyCheck(NamedTuple):
    """Outcome of a sufficient condition: holds iff lhs >= rhs."""

    holds: bool
    lhs: float
    rhs: float


def sufficient_nonneg_general(final: BipartiteState, beta_tau: float,
                              initial: BipartiteState, beta0: float,
                              h_env: HermitianMatrix,
                              beta_cfg: BetaSolveConfig = BetaSolveConfig()) -> SufficiencyCheck:
    """Pinsker test certifying nonnegative entropy production.

    lhs is the squared trace distance between the final state and its
    endpoint reference; rhs collects the initial-state terms, halved: the
    thermal mismatch divergence minus the trace-distance bound.  ``holds``
    guarantees nonnegativity; failure decides nothing.
    """
    solver = GibbsSolver(h_env)
    _check_bipartite_env(initial, solver)
    _check_bipartite_env(final, solver)
    if (initial.d_s, initial.d_e) != (final.d_s, final.d_e):
        raise InvalidInput("endpoint states must share dimensions")
    if not (math.isfinite(beta0) and math.isfinite(beta_tau)):
        raise InvalidInput("endpoint inverse temperatures must be finite")
    ref_final = DensityMatrix._trusted(
        np.kron(final.rho_sys.mat, solver.state(beta_tau).mat)
    )
    lhs = trace_distance(final.state, ref_final) ** 2
    beta_star0 = _beta_star(initial.rho_env, solver, beta_cfg)
    mismatch = solver.gibbs_relative_entropy(beta_star0, beta0)
    rhs = 0.5 * (mismatch - trace_distance_bound(initial, h_env, beta_cfg))
    return SufficiencyCheck(holds=bool(lhs >= rhs), lhs=float(lhs), rhs=float(rhs))


def sufficient_nonneg_product(final_env: DensityMatrix, beta_tau: float,
                              rho_sys: DensityMatrix, rho_env: DensityMatrix,
                              beta0: float, h_env: HermitianMatrix,
                              beta_cfg: BetaSolveConfig = BetaSolveConfig()) -> SufficiencyCheck:
    """Pinsker test for a product initial state, using marginals only.

    lhs is the squared trace distance of the final environment marginal to
    gamma(beta_tau); rhs uses the product trace-distance bound, so the whole
    check runs in the environment dimension.
    """
    if not isinstance(final_env, DensityMatrix):
        final_env = DensityMatrix(final_env)
    if not isinstance(rho_env, DensityMatrix):
        rho_env = DensityMatrix(rho_env)
    solver = GibbsSolver(h_env)
    if final_env.dim != solver.dim or rho_env.dim != solver.dim:
        raise InvalidInput("environment marginals must match the Hamiltonian dimension")
    if not (math.isfinite(beta0) and math.isfinite(beta_tau)):
        raise InvalidInput("endpoint inverse temperatures must be finite")
    lhs = trace_distance(final_env, solver.state(beta_tau)) ** 2
    beta_star0 = _beta_star(rho_env, solver, beta_cfg)
    mismatch = solver.gibbs_relative_entropy(beta_star0, beta0)
    bound = product_trace_distance_bound(rho_sys, rho_env, h_env, beta_cfg)
    rhs = 0.5 * (mismatch - bound)
    return SufficiencyCheck(holds=bool(lhs >= rhs), lhs=float(lhs), rhs=float(rhs))


@dataclass(frozen=True)
class PerturbedInitial:
    """A thermal product plus a structured perturbation.

    The perturbation leaves the system marginal and the environment energy
    untouched, so the reference product of ``state`` is exactly
    ``reference`` and the effective inverse temperature stays at ``beta``.
    ``distance_to_reference`` is half the trace norm of the perturbation.
    """

    state: BipartiteState
    reference: BipartiteState
    beta: float
    distance_to_reference: float


def make_perturbed_initial(rho_sys: DensityMatrix, beta: float,
                           chi: HermitianMatrix, h_env: HermitianMatrix,
                           constraint_tol: float = PERTURBATION_TOL) -> PerturbedInitial:
    """Build rho_S x gamma(beta) + chi with the structural constraints checked.

    ``chi`` must be Hermitian with a vanishing system marginal and an
    environment marginal whose diagonal vanishes in the energy eigenbasis;
    violations beyond ``constraint_tol`` (relative to the perturbation
    scale) raise InvalidPerturbation, as does a sum that fails to be a
    state.  Under these constraints the effective inverse temperature of
    the result equals ``beta`` and its trace distance to the reference is
    half the trace norm of ``chi``.
    """
    if not isinstance(rho_sys, DensityMatrix):
        rho_sys = DensityMatrix(rho_sys)
    if not isinstance(chi, HermitianMatrix):
        chi = HermitianMatrix(chi)
    try:
        beta = float(beta)
    except (TypeError, ValueError):
        raise InvalidInput("beta must be a real number or +-inf") from None
    if math.isnan(beta):
        raise InvalidInput("beta must be a real number or +-inf")
    solver = GibbsSolver(h_env)
    d_s, d_e = rho_sys.dim, solver.dim
    if chi.dim != d_s * d_e:
        raise InvalidPerturbation(
            f"perturbation dimension {chi.dim} does not match {d_s}*{d_e}"
        )

    scale = max(float(np.abs(chi.mat).max()), 1.0)
    atol = constraint_tol * scale
    sys_marginal = _ptrace(chi.mat, d_s, d_e, "S")
    if float(np.abs(sys_marginal).max()) > atol:
        raise InvalidPerturbation("perturbation must have a vanishing system marginal")
    env_marginal = _ptrace(chi.mat, d_s, d_e, "E")
    diag = np.einsum("ji,jk,ki->i", solver.basis.conj(), env_marginal, solver.basis)
    if float(np.abs(diag).max()) > atol:
        raise InvalidPerturbation(
            "perturbation's environment marginal must have a vanishing "
            "diagonal in the energy eigenbasis"
        )

    gamma = solver.state(beta)
    reference = BipartiteState._trusted(d_s, d_e, np.kron(rho_sys.mat, gamma.mat))
    try:
        state = BipartiteState(d_s, d_e, reference.state.mat + chi.mat)
    except InvalidInput as exc:
        raise InvalidPerturbation(
            f"perturbed matrix is not a valid state: {exc}"
        ) from exc
    half_norm = 0.5 * float(np.abs(np.linalg.eigvalsh(chi.mat)).sum())
    return PerturbedInitial(state=state, reference=reference, beta=beta,
                            distance_to_reference=half_norm)


@dataclass(frozen=True)
class BoundReport:
    """All lower-bound quantities evaluated on one initial state."""

    beta_star: float
    distance_to_reference: float
    entropy_gap_bound: float
    trace_distance_bound: float
    product_trace_distance_bound: float | None
    is_product: bool

    FIELDS = (
        "beta_star", "distance_to_reference", "entropy_gap_bound",
        "trace_distance_bound", "product_trace_distance_bound", "is_product",
    )

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}


def is_product_state(state: BipartiteState, rel_tol: float = _PRODUCT_TOL) -> bool:
    """True when the joint state equals the product of its marginals."""
    if not isinstance(state, BipartiteState):
        raise InvalidInput("expected a BipartiteState")
    prod = np.kron(state.rho_sys.mat, state.rho_env.mat)
    scale = max(float(np.abs(state.state.mat).max()), 1.0)
    return float(np.abs(state.state.mat - prod).max()) <= rel_tol * scale


def build_bound_report(initial: BipartiteState, h_env: HermitianMatrix,
                       beta_cfg: BetaSolveConfig = BetaSolveConfig()) -> BoundReport:
    """Evaluate every bound on one initial state.

    The product-only bound is included when the state factorizes to
    rounding accuracy and is None otherwise.
    """
    solver = GibbsSolver(h_env)
    _check_bipartite_env(initial, solver)
    beta_star = _beta_star(initial.rho_env, solver, beta_cfg)
    delta = distance_to_reference(initial, h_env, beta_cfg)
    gap = entropy_gap_bound(initial, h_env, beta_cfg)
    general = _continuity_bound(delta, initial.d_s * initial.d_e)
    product = None
    if is_product_state(initial):
        product = product_trace_distance_bound(
            initial.rho_sys, initial.rho_env, h_env, beta_cfg
        )
    return BoundReport(
        beta_star=beta_star,
        distance_to_reference=delta,
        entropy_gap_bound=gap,
        trace_distance_bound=general,
        product_trace_distance_bound=product,
        is_product=product is not None,
    )
