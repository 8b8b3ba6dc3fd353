"""Stationary density matrix of an assembled generator, with certification.

The steady state solves ``L vec(rho) = 0``.  For the moderate dimensions of
this problem the kernel vector is obtained from an LU solve of the generator
with one row replaced by the trace constraint; the result is Hermitized as
``(rho + rho^dag)/2`` and trace-normalized.  A certificate is recomputed from
scratch for every accepted solution: residual norm, distance of the second
Liouvillian eigenvalue from zero (uniqueness margin), minimum eigenvalue of
``rho`` and the top-Fock population (truncation indicator).

Note on positivity: the pump dissipator is used in its literal non-secular
form, which is not guaranteed completely positive.  The minimum eigenvalue of
the steady state is therefore reported, not enforced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .liouvillian import unvec, vec

__all__ = [
    "SteadyStateError",
    "SteadyStateCertificate",
    "solve_steady",
    "certify",
    "spectral_gap",
    "trace_distance",
]

#: Residual acceptance threshold, relative to the generator norm.
RESIDUAL_RTOL = 1e-9
#: Hard-failure threshold: no candidate kernel vector below this residual.
NO_STEADY_RTOL = 1e-6
#: Warn when the top Fock level carries more population than this.
TOP_FOCK_WARN = 1e-6
#: Warn when the second Liouvillian eigenvalue is closer to zero than this
#: (relative to the generator norm): near-degenerate steady manifold.
GAP_WARN_RTOL = 1e-8
#: Largest superoperator side for which the spectral gap is taken from a full
#: dense eigendecomposition; above this an LU-based Arnoldi solve is used.
DENSE_GAP_MAX_SIDE = 800


class SteadyStateError(RuntimeError):
    """No stationary state at tolerance, or the solve broke down."""


@dataclass(frozen=True)
class SteadyStateCertificate:
    """Recomputed-from-scratch validity data for one steady-state solution."""

    residual_norm: float
    spectral_gap: float
    min_eig_rho: float
    top_fock_population: float
    l_norm: float
    warn_top_fock: bool
    warn_gap: bool

    @property
    def flagged(self) -> bool:
        return self.warn_top_fock or self.warn_gap


def _solve_rho_lu(l: np.ndarray) -> np.ndarray:
    """Kernel vector of a trace-preserving generator via trace-row replacement.

    Replacing one row of ``L`` with the trace functional and solving against
    the unit right-hand side picks out the trace-one kernel element.
    """
    n2 = l.shape[0]
    dim = int(round(np.sqrt(n2)))
    m = l.copy()
    m[0, :] = 0.0
    m[0, :: dim + 1] = 1.0
    b = np.zeros(n2, dtype=complex)
    b[0] = 1.0
    try:
        v = sla.solve(m, b)
    except np.linalg.LinAlgError as exc:
        raise SteadyStateError(f"steady-state linear solve failed: {exc}") from exc
    rho = unvec(v, dim)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-300 or not np.isfinite(tr):
        raise SteadyStateError("steady-state solve returned an unnormalizable state")
    return rho / tr


def _smallest_abs_eigs(l: np.ndarray, k: int = 2) -> np.ndarray:
    """Magnitudes of the ``k`` eigenvalues of ``l`` closest to zero, ascending."""
    side = l.shape[0]
    if side <= DENSE_GAP_MAX_SIDE:
        w = np.linalg.eigvals(l)
        return np.sort(np.abs(w))[:k]
    # Shift-invert Arnoldi: factor L once, iterate with the inverse.
    norm = np.linalg.norm(l)
    for shift in (0.0, 1e-12 * norm, 1e-9 * norm):
        try:
            lu, piv = sla.lu_factor(l - shift * np.eye(side))
            op = spla.LinearOperator(
                (side, side),
                matvec=lambda x: sla.lu_solve((lu, piv), x),
                dtype=complex,
            )
            ritz = spla.eigs(op, k=k + 1, which="LM", return_eigenvectors=False, tol=1e-10)
            lam = 1.0 / ritz + shift
            return np.sort(np.abs(lam))[:k]
        except (np.linalg.LinAlgError, spla.ArpackError, spla.ArpackNoConvergence):
            continue
    w = np.linalg.eigvals(l)  # last resort, slow but sure
    return np.sort(np.abs(w))[:k]


def spectral_gap(l: np.ndarray) -> float:
    """Magnitude of the second-smallest eigenvalue of the generator."""
    return float(_smallest_abs_eigs(l, k=2)[1])


def certify(rho: np.ndarray, l: np.ndarray, compute_gap: bool = True) -> SteadyStateCertificate:
    """Recompute all certificate fields for a candidate steady state."""
    dim = rho.shape[0]
    n_max = dim // 2 - 1
    residual = float(np.linalg.norm(l @ vec(rho)))
    l_norm = float(np.linalg.norm(l))
    gap = spectral_gap(l) if compute_gap else np.nan
    herm = 0.5 * (rho + rho.conj().T)
    min_eig = float(np.linalg.eigvalsh(herm).min())
    top = float(rho[n_max, n_max].real + rho[dim - 1, dim - 1].real)
    return SteadyStateCertificate(
        residual_norm=residual,
        spectral_gap=gap,
        min_eig_rho=min_eig,
        top_fock_population=top,
        l_norm=l_norm,
        warn_top_fock=top > TOP_FOCK_WARN,
        warn_gap=bool(compute_gap and gap < GAP_WARN_RTOL * l_norm),
    )


def solve_steady(
    l: np.ndarray,
    solver: str = "lu",
    compute_gap: bool = True,
) -> tuple[np.ndarray, SteadyStateCertificate]:
    """Solve ``L vec(rho) = 0`` and certify the result.

    ``solver="lu"`` (default) uses the trace-constrained linear solve;
    ``solver="eig"`` takes the eigenvector of the eigenvalue of smallest
    magnitude from a full dense eigendecomposition.  Both Hermitize and
    trace-normalize.  Raises :class:`SteadyStateError` when no kernel vector
    exists at tolerance ``NO_STEADY_RTOL`` relative to ``|L|``.
    """
    if solver == "lu":
        rho = _solve_rho_lu(l)
    elif solver == "eig":
        w, v = np.linalg.eig(l)
        idx = int(np.argmin(np.abs(w)))
        l_norm = np.linalg.norm(l)
        if np.abs(w[idx]) > NO_STEADY_RTOL * l_norm:
            raise SteadyStateError(
                f"no stationary state at tolerance: min |eigenvalue| = {np.abs(w[idx]):.3e} "
                f"vs {NO_STEADY_RTOL:.0e} * |L| = {NO_STEADY_RTOL * l_norm:.3e}"
            )
        rho = unvec(v[:, idx])
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr) < 1e-12:
            raise SteadyStateError("kernel vector of L is traceless; no physical steady state")
        rho = rho / tr
    else:
        raise ValueError(f"unknown solver {solver!r}")

    cert = certify(rho, l, compute_gap=compute_gap)
    if cert.residual_norm > NO_STEADY_RTOL * cert.l_norm:
        raise SteadyStateError(
            f"no stationary state at tolerance: residual {cert.residual_norm:.3e} "
            f"vs {NO_STEADY_RTOL:.0e} * |L| = {NO_STEADY_RTOL * cert.l_norm:.3e}"
        )
    return rho, cert


def trace_distance(rho_a: np.ndarray, rho_b: np.ndarray) -> float:
    """Trace distance ``0.5 * ||rho_a - rho_b||_1`` of two Hermitian matrices."""
    diff = rho_a - rho_b
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())
