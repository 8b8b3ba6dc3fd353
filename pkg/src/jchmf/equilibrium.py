"""Equilibrium-limit machinery: ground-state mean field and plateau-onset estimates.

With the photon loss switched off the pump bath drives the array to a thermal
state, and at the inverse temperatures of interest (beta*g ~ 1000) that state
is the ground state of ``K_S`` to double precision.  This module solves the
ground-state self-consistency ``psi = <E0(psi)|a|E0(psi)>`` (supporting large
photon cutoffs through a sparse lowest-eigenpair solve), locates the
equilibrium phase boundary, and evaluates the two loss-balance estimates of
the chemical potential at which the first plateau begins, including the
closed form ``(mu_B^1st - omega0)/g = -z tau/g - sqrt(kappa/gamma)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize as sopt
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hamiltonian import ModelParams

__all__ = [
    "GroundStateSolution",
    "gibbs_state",
    "solve_equilibrium_groundstate",
    "equilibrium_boundary",
    "gs_current_estimates",
    "mu_b_first_closed_form",
    "mu_b_first_gs_estimate",
    "NoSignChangeError",
]

#: Fixed-point convergence on |psi_{k+1} - psi_k|.
PSI_TOL = 1e-12
#: Damping of the plain fixed-point iteration.
GS_DAMPING = 0.5
#: Iteration budget before the bracketing fallback takes over.
GS_MAX_ITER = 400
#: Dense diagonalization below this dimension, sparse Lanczos above.
DENSE_MAX_DIM = 64


class NoSignChangeError(RuntimeError):
    """The bracketed current difference does not change sign."""


@dataclass(frozen=True)
class GroundStateSolution:
    """Converged ground-state mean field at one ``(params, mu)`` point."""

    psi: float
    energy: float
    vector: np.ndarray
    n_ph_gs: float
    sigma_minus_expect: complex
    converged: bool
    iterations: int
    n_max: int
    cutoff_shift: float  # |psi(n_max + 5) - psi(n_max)|, nan when not checked


def _k_s_sparse(params: ModelParams, psi: float, mu: float, n_max: int) -> sp.csr_matrix:
    """Sparse ``K_S`` at an arbitrary cutoff (TLS-outer, Fock-inner ordering)."""
    npho = n_max + 1
    dim = 2 * npho
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []

    def idx(s: int, n: int) -> int:
        return s * npho + n

    for s in (0, 1):
        for n in range(npho):
            rows.append(idx(s, n))
            cols.append(idx(s, n))
            vals.append(params.omega0 * (n + s) - mu * (n + s) + params.z_tau * psi**2)
    for n in range(n_max):  # g (sigma+ a + sigma- a^dag): |e,n> <-> |g,n+1>
        i, j = idx(1, n), idx(0, n + 1)
        coupling = params.g_coupling * np.sqrt(n + 1)
        rows += [i, j]
        cols += [j, i]
        vals += [coupling, coupling]
    for s in (0, 1):  # -z tau psi (a + a^dag)
        for n in range(n_max):
            i, j = idx(s, n), idx(s, n + 1)
            drive = -params.z_tau * psi * np.sqrt(n + 1)
            rows += [i, j]
            cols += [j, i]
            vals += [drive, drive]
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def _ground_pair(params: ModelParams, psi: float, mu: float, n_max: int) -> tuple[float, np.ndarray]:
    k = _k_s_sparse(params, psi, mu, n_max)
    if k.shape[0] <= DENSE_MAX_DIM:
        w, v = np.linalg.eigh(k.toarray())
        return float(w[0]), v[:, 0]
    w, v = spla.eigsh(k, k=1, which="SA")
    return float(w[0]), v[:, 0]


def _gs_expectations(vector: np.ndarray, n_max: int) -> tuple[float, float, float]:
    """``(<a>, <a^dag a>, <sigma->)`` of a real ground-state vector."""
    v = vector.reshape(2, n_max + 1)
    ns = np.arange(n_max + 1)
    sqrt_n = np.sqrt(ns[1:])
    a_exp = float(sum((v[s, :-1] * sqrt_n * v[s, 1:]).sum() for s in (0, 1)))
    n_ph = float((ns * (v**2).sum(axis=0)).sum())
    sm_exp = float((v[0] * v[1]).sum())  # <g,n| component times |e,n> component
    return a_exp, n_ph, sm_exp


def _fixed_point_map(params: ModelParams, mu: float, n_max: int):
    def f(psi: float) -> float:
        _, vec = _ground_pair(params, abs(psi), mu, n_max)
        a_exp, _, _ = _gs_expectations(vec, n_max)
        return abs(a_exp)

    return f


def solve_equilibrium_groundstate(
    params: ModelParams,
    mu: float,
    seed_psi: float,
    n_max: int | None = None,
    check_cutoff: bool = True,
) -> GroundStateSolution:
    """Fixed point of ``psi <- <E0(K_S(psi, mu))| a |E0>`` by damped iteration.

    Near the lobe boundary the damped map slows down critically; a bracketed
    root solve on ``f(psi) - psi`` then polishes the fixed point.  The result
    reports the cutoff sensitivity (fixed point at ``n_max + 5``) so callers
    can detect truncation error.
    """
    if seed_psi < 0:
        raise ValueError("seed_psi must be >= 0")
    if n_max is None:
        n_max = params.cfg.n_max
    f = _fixed_point_map(params, mu, n_max)

    psi = float(seed_psi)
    converged = False
    iterations = 0
    for iterations in range(1, GS_MAX_ITER + 1):
        new = (1.0 - GS_DAMPING) * psi + GS_DAMPING * f(psi)
        delta = abs(new - psi)
        psi = new
        if delta < PSI_TOL:
            converged = True
            break

    if not converged:
        # Critical slowing near the boundary: bracket the nontrivial root of
        # h(psi) = f(psi) - psi away from the trivial one and bisect.
        h = lambda p: f(p) - p
        lo = max(psi * 0.5, 1e-8)
        hi = max(psi * 2.0, 1e-6)
        grow = 0
        while h(hi) > 0 and grow < 60:
            hi *= 1.5
            grow += 1
        if h(lo) < 0:
            while h(lo) < 0 and lo > 1e-13:
                lo *= 0.5
        if h(lo) > 0 > h(hi):
            psi = float(sopt.brentq(h, lo, hi, xtol=1e-13))
            converged = True
        else:
            psi = 0.0  # no nontrivial root reachable: trivial fixed point
            converged = True

    energy, vector = _ground_pair(params, psi, mu, n_max)
    a_exp, n_ph, sm_exp = _gs_expectations(vector, n_max)

    shift = np.nan
    if check_cutoff:
        f5 = _fixed_point_map(params, mu, n_max + 5)
        psi5 = float(seed_psi) if psi == 0.0 else psi
        for _ in range(60):
            new = (1.0 - GS_DAMPING) * psi5 + GS_DAMPING * f5(psi5)
            if abs(new - psi5) < 10 * PSI_TOL:
                psi5 = new
                break
            psi5 = new
        shift = abs(psi5 - psi)

    return GroundStateSolution(
        psi=psi,
        energy=energy,
        vector=vector,
        n_ph_gs=n_ph,
        sigma_minus_expect=complex(sm_exp),
        converged=converged,
        iterations=iterations,
        n_max=n_max,
        cutoff_shift=shift,
    )


def equilibrium_boundary(
    params: ModelParams,
    tau_grid: list[float] | np.ndarray,
    mu_b_bracket: tuple[float, float] | None = None,
    psi_threshold: float = 1e-4,
    tol: float = 1e-4,
    n_max: int | None = None,
) -> list[tuple[float, float]]:
    """Onset chemical potential of the ground-state coherent phase per hopping.

    For each ``z tau`` the bracket is first coarse-scanned from below for the
    lowest incoherent-to-coherent transition, then bisected to ``tol``.  Points
    with no transition inside the bracket are skipped.
    """
    if len(tau_grid) == 0:
        raise ValueError("tau_grid must be nonempty")
    out: list[tuple[float, float]] = []
    for z_tau in tau_grid:
        p = replace(params, z_tau=float(z_tau))
        if mu_b_bracket is None:
            lo = p.omega0 - 2.5 * p.g_coupling
            hi = p.omega0 - float(z_tau) - 0.02 * p.g_coupling  # stay below instability
        else:
            lo, hi = mu_b_bracket

        def coherent(mu_b: float) -> bool:
            gs = solve_equilibrium_groundstate(p, mu_b, seed_psi=0.3, n_max=n_max,
                                               check_cutoff=False)
            return gs.psi > psi_threshold

        # coarse scan for the first transition
        grid = np.linspace(lo, hi, 32)
        flags = [coherent(m) for m in grid]
        edge = None
        for i in range(1, len(grid)):
            if flags[i] and not flags[i - 1]:
                edge = (grid[i - 1], grid[i])
                break
        if edge is None:
            continue
        a, b = edge
        while b - a > tol:
            mid = 0.5 * (a + b)
            if coherent(mid):
                b = mid
            else:
                a = mid
        out.append((float(z_tau), 0.5 * (a + b)))
    return out


def gs_current_estimates(gs: GroundStateSolution, params: ModelParams) -> tuple[float, float]:
    """Loss and pump currents evaluated on the equilibrium ground state.

    ``J_ph^out = kappa <a^dag a>`` and ``J_TLS^in = gamma |<sigma->|^2``, the
    latter with the bath level taken infinitesimally above the frame
    frequency.
    """
    j_ph = params.kappa * gs.n_ph_gs
    j_in = params.gamma * abs(gs.sigma_minus_expect) ** 2
    return j_ph, j_in


def mu_b_first_closed_form(params: ModelParams) -> float:
    """Closed-form onset of the first plateau.

    ``mu_B^1st = omega0 + g (-z tau / g - sqrt(kappa / gamma))``; requires a
    nonzero pump rate.  Strictly decreasing in ``kappa`` and increasing in
    ``gamma``; reduces to ``omega0 - z tau`` when the loss vanishes.
    """
    if params.gamma <= 0:
        raise ValueError("closed-form onset undefined for gamma <= 0")
    g = params.g_coupling
    return params.omega0 + g * (-params.z_tau / g - np.sqrt(params.kappa / params.gamma))


def mu_b_first_gs_estimate(
    params: ModelParams,
    n_max: int = 500,
    bracket: tuple[float, float] | None = None,
    tol: float = 1e-4,
) -> float:
    """Plateau onset from the balance of the two ground-state current estimates.

    Bisects ``J_ph^out(mu_b) - J_TLS^in(mu_b)`` over coherent equilibrium
    solutions with the frame locked to the bath (``mu = mu_b``).  Raises
    :class:`NoSignChangeError` when the bracket does not straddle the balance
    point rather than guessing.
    """
    if bracket is None:
        cf = mu_b_first_closed_form(params)
        lo = cf - 0.25 * params.g_coupling
        hi = min(cf + 0.25 * params.g_coupling,
                 params.omega0 - params.z_tau - 0.02 * params.g_coupling)
    else:
        lo, hi = bracket

    def diff(mu_b: float) -> float | None:
        gs = solve_equilibrium_groundstate(params, mu_b, seed_psi=0.5, n_max=n_max,
                                           check_cutoff=False)
        if gs.psi <= 1e-4:
            return None
        j_ph, j_in = gs_current_estimates(gs, params)
        return j_ph - j_in

    d_lo, d_hi = diff(lo), diff(hi)
    if d_lo is None or d_hi is None or d_lo * d_hi > 0:
        raise NoSignChangeError(
            f"current difference does not change sign on [{lo:.4f}, {hi:.4f}] "
            f"(values {d_lo}, {d_hi})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        d_mid = diff(mid)
        if d_mid is None:
            raise NoSignChangeError(f"lost the coherent solution at mu_b = {mid:.4f}")
        if (d_mid < 0) == (d_lo < 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gibbs_state(k_s: np.ndarray, n_s: np.ndarray, beta: float, delta_mu: float) -> np.ndarray:
    """Grand-canonical Gibbs state ``exp(-beta (K_S - delta_mu N_S)) / Z``.

    Populations are computed relative to the lowest level so extreme inverse
    temperatures underflow to the ground-state projector instead of
    overflowing.
    """
    h_eff = k_s - delta_mu * n_s
    w, v = np.linalg.eigh(h_eff)
    weights = np.exp(-beta * (w - w.min()))
    weights /= weights.sum()
    return (v * weights) @ v.conj().T
