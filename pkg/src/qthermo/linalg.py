"""Validated matrix types and dense Hermitian linear algebra.

Everything here assumes small dimensions (products of subsystem sizes up to
a few dozen), so matrix functions go through a full eigendecomposition and
no sparse or iterative machinery is used.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DomainError, InvalidInput, InvalidState

# Construction-time tolerances.  Hermiticity is relative to the largest
# entry magnitude (with a floor of 1), the others are absolute.
TOL_HERM = 1e-12
TOL_TRACE = 1e-10
TOL_PSD = 1e-10
TOL_UNITARY = 1e-10


def _as_square_complex(mat, what: str = "matrix") -> np.ndarray:
    a = np.asarray(mat, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInput(f"{what} must be a nonempty square 2-d array, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InvalidInput(f"{what} contains non-finite entries")
    return a


class HermitianMatrix:
    """A validated self-adjoint complex matrix.

    Construction symmetrizes ``(A + A^dag)/2`` when the deviation from
    self-adjointness is within ``TOL_HERM`` relative to the largest entry
    magnitude; larger deviations raise rather than being silently repaired.
    The stored array is read-only so instances can be shared freely.
    """

    __slots__ = ("mat",)

    def __init__(self, mat):
        a = _as_square_complex(mat, what=type(self).__name__)
        scale = max(float(np.abs(a).max()), 1.0)
        dev = float(np.abs(a - a.conj().T).max())
        if dev > TOL_HERM * scale:
            raise InvalidInput(
                f"matrix is not Hermitian: max|A - A^dag| = {dev:.3e} exceeds "
                f"{TOL_HERM:g} relative to the largest entry"
            )
        h = (a + a.conj().T) / 2.0
        h.setflags(write=False)
        self.mat = h
        self._check()

    def _check(self) -> None:
        pass

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim})"


class DensityMatrix(HermitianMatrix):
    """HermitianMatrix with unit trace and nonnegative spectrum.

    Trace must be 1 within ``TOL_TRACE`` and the smallest eigenvalue no
    lower than ``-TOL_PSD``.  The stored matrix is kept exactly as given
    (after Hermitian symmetrization); eigenvalues are never clipped here.
    """

    __slots__ = ()

    def _check(self) -> None:
        tr = complex(self.mat.trace())
        if abs(tr - 1.0) > TOL_TRACE:
            raise InvalidState(f"density matrix trace {tr:.12g} is not 1 within {TOL_TRACE:g}")
        lam_min = float(np.linalg.eigvalsh(self.mat)[0])
        if lam_min < -TOL_PSD:
            raise InvalidState(f"density matrix has eigenvalue {lam_min:.3e} below -{TOL_PSD:g}")

    @classmethod
    def _trusted(cls, mat: np.ndarray) -> "DensityMatrix":
        # Internal fast path for states produced by unitary conjugation of an
        # already-validated state; skips the eigenvalue test.
        obj = object.__new__(cls)
        h = np.asarray(mat, dtype=complex)
        h = (h + h.conj().T) / 2.0
        h.setflags(write=False)
        obj.mat = h
        return obj


class UnitaryMatrix:
    """A validated unitary: ``max|U^dag U - I|`` at most ``TOL_UNITARY``."""

    __slots__ = ("mat",)

    def __init__(self, mat):
        a = _as_square_complex(mat, what="UnitaryMatrix")
        dev = float(np.abs(a.conj().T @ a - np.eye(a.shape[0])).max())
        if dev > TOL_UNITARY:
            raise InvalidInput(f"matrix is not unitary: max|U^dag U - I| = {dev:.3e}")
        u = a.copy()
        u.setflags(write=False)
        self.mat = u

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __repr__(self) -> str:
        return f"UnitaryMatrix(dim={self.dim})"


class BipartiteState:
    """Joint density operator on a system (dim d_s) and environment (dim d_e).

    Index convention is system-major: basis state ``i*d_e + k`` pairs system
    level ``i`` with environment level ``k``, matching ``np.kron(sys, env)``.
    Both marginals are computed at construction and validated as density
    matrices.
    """

    __slots__ = ("d_s", "d_e", "state", "rho_sys", "rho_env")

    def __init__(self, d_s: int, d_e: int, state):
        if not (isinstance(d_s, (int, np.integer)) and isinstance(d_e, (int, np.integer))):
            raise InvalidInput("subsystem dimensions must be integers")
        if d_s < 1 or d_e < 2:
            raise InvalidInput(f"need d_s >= 1 and d_e >= 2, got d_s={d_s}, d_e={d_e}")
        if not isinstance(state, DensityMatrix):
            state = DensityMatrix(state)
        if state.dim != d_s * d_e:
            raise InvalidInput(
                f"state dimension {state.dim} does not match d_s*d_e = {d_s * d_e}"
            )
        self.d_s = int(d_s)
        self.d_e = int(d_e)
        self.state = state
        self.rho_sys = DensityMatrix(_ptrace(state.mat, self.d_s, self.d_e, "S"))
        self.rho_env = DensityMatrix(_ptrace(state.mat, self.d_s, self.d_e, "E"))

    @classmethod
    def _trusted(cls, d_s: int, d_e: int, mat: np.ndarray) -> "BipartiteState":
        # Internal fast path for evolution output; marginals skip eigen tests.
        obj = object.__new__(cls)
        obj.d_s = int(d_s)
        obj.d_e = int(d_e)
        obj.state = DensityMatrix._trusted(mat)
        obj.rho_sys = DensityMatrix._trusted(_ptrace(obj.state.mat, d_s, d_e, "S"))
        obj.rho_env = DensityMatrix._trusted(_ptrace(obj.state.mat, d_s, d_e, "E"))
        return obj

    @property
    def dim(self) -> int:
        return self.d_s * self.d_e

    @property
    def mat(self) -> np.ndarray:
        return self.state.mat

    def __repr__(self) -> str:
        return f"BipartiteState(d_s={self.d_s}, d_e={self.d_e})"


def _ptrace(mat: np.ndarray, d_s: int, d_e: int, keep: str) -> np.ndarray:
    r = mat.reshape(d_s, d_e, d_s, d_e)
    if keep == "S":
        return np.einsum("ikjk->ij", r)
    return np.einsum("ikil->kl", r)


def _ptrace_stack(stack: np.ndarray, d_s: int, d_e: int, keep: str) -> np.ndarray:
    # Batched partial trace over a (n, d, d) stack.
    r = stack.reshape(stack.shape[0], d_s, d_e, d_s, d_e)
    if keep == "S":
        return np.einsum("tikjk->tij", r)
    return np.einsum("tikil->tkl", r)


def eig_hermitian(a: HermitianMatrix) -> tuple[np.ndarray, UnitaryMatrix]:
    """Eigenvalues (ascending) and a unitary of eigenvectors in columns."""
    if not isinstance(a, HermitianMatrix):
        a = HermitianMatrix(a)
    w, v = np.linalg.eigh(a.mat)
    return w, UnitaryMatrix(v)


def matrix_function(a: HermitianMatrix, f: Callable[[float], float]) -> HermitianMatrix:
    """Apply a real scalar function to a Hermitian matrix via its spectrum.

    Raises DomainError if ``f`` raises or returns a non-finite value on any
    eigenvalue.
    """
    if not isinstance(a, HermitianMatrix):
        a = HermitianMatrix(a)
    w, v = np.linalg.eigh(a.mat)
    try:
        fw = np.array([float(f(x)) for x in w])
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise DomainError(f"scalar function failed on an eigenvalue: {exc}") from exc
    if not np.isfinite(fw).all():
        raise DomainError("scalar function returned a non-finite value on an eigenvalue")
    return HermitianMatrix((v * fw) @ v.conj().T)


def tensor_product(a: HermitianMatrix, b: HermitianMatrix) -> HermitianMatrix:
    """Kronecker product with the first factor on the major index."""
    if not isinstance(a, HermitianMatrix):
        a = HermitianMatrix(a)
    if not isinstance(b, HermitianMatrix):
        b = HermitianMatrix(b)
    return HermitianMatrix(np.kron(a.mat, b.mat))


def partial_trace(rho: BipartiteState, keep: str) -> DensityMatrix:
    """Trace out one factor; ``keep`` is "S" (system) or "E" (environment)."""
    if keep not in ("S", "E"):
        raise InvalidInput(f'keep must be "S" or "E", got {keep!r}')
    return rho.rho_sys if keep == "S" else rho.rho_env


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of the difference of two density matrices."""
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    if not isinstance(sigma, DensityMatrix):
        sigma = DensityMatrix(sigma)
    if rho.dim != sigma.dim:
        raise InvalidInput(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    w = np.linalg.eigvalsh(rho.mat - sigma.mat)
    return float(min(max(0.5 * np.abs(w).sum(), 0.0), 1.0))


def unitary_step(h: HermitianMatrix, dt: float) -> UnitaryMatrix:
    """The propagator exp(-i H dt), exactly unitary by construction."""
    if not isinstance(h, HermitianMatrix):
        h = HermitianMatrix(h)
    if not np.isfinite(dt):
        raise InvalidInput("dt must be finite")
    return UnitaryMatrix(_expi(h.mat, dt))


def _expi(h: np.ndarray, dt: float) -> np.ndarray:
    # exp(-i h dt) for raw Hermitian h via eigendecomposition.
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * dt)) @ v.conj().T
