"""Mean-field self-consistency loop and phase classification.

A parameter point is solved by finding ``(psi, mu)`` such that the stationary
state of the generator built at that mean field reproduces it:
``Tr[rho_ss(psi, mu) a] = psi``.  The complex residual is driven to zero by a
quasi-Newton iteration on the two real unknowns, with a damped fixed-point
fallback when the Jacobian degenerates.  ``psi = 0`` is always a fixed point
(U(1) symmetry of the undriven generator), so the coherent phase is detected
by whether any member of a seed ladder converges to a nontrivial root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import MeanField, ModelParams
from .hilbert import build_annihilation
from .liouvillian import Assembly, assemble, vec
from .steady import SteadyStateError, _solve_rho_lu, certify, trace_distance

__all__ = [
    "PSI_THRESHOLD",
    "TOL_SC",
    "MAX_ITER",
    "SEED_LADDER",
    "SelfConsistentSolution",
    "PhaseLabel",
    "residual",
    "solve_selfconsistent",
    "classify_point",
    "classify_phase",
]

#: Amplitudes below this are numerical zero; above, a coherent order parameter.
PSI_THRESHOLD = 1e-4
#: Convergence tolerance on the complex self-consistency residual.
TOL_SC = 1e-10
#: Iteration cap for one (psi, mu) solve.
MAX_ITER = 200
#: Finite-difference steps for the residual Jacobian (units of g).
FD_STEP_PSI = 1e-6
FD_STEP_MU = 1e-6
#: Step damping factor applied on rejection, and fallback mixing weight.
DAMPING = 0.5
#: Cold-start amplitudes tried by the phase classifier.
SEED_LADDER = (0.05, 0.2, 0.5, 1.0)

#: Distinct-root resolution when collecting multiple nontrivial fixed points.
ROOT_RESOLUTION = 1e-6


@dataclass
class SelfConsistentSolution:
    """Outcome of one mean-field solve (converged or not)."""

    mf: MeanField
    rho: np.ndarray | None
    residual: complex
    iterations: int
    branch_id: int
    converged: bool
    assembly: Assembly | None = None
    failure: str | None = None


@dataclass(frozen=True)
class PhaseLabel:
    """Phase of one parameter point.

    ``kind`` is ``"coherent"``, ``"incoherent"`` or ``"undetermined"`` (the
    last when no seed produced a usable steady state, e.g. a degenerate
    stationary manifold).  ``mu`` is defined only for the coherent phase; the
    frame frequency of a symmetric state is not an observable.  When several
    distinct nontrivial roots coexist, ``n_roots`` counts them and the
    largest-amplitude one is the representative.
    """

    kind: str
    psi: float
    mu: float | None
    n_roots: int = 0
    note: str | None = None


def _residual_parts(params: ModelParams, mf: MeanField) -> tuple[complex, np.ndarray, Assembly]:
    asm = assemble(params, mf)
    rho = _solve_rho_lu(asm.total)
    a = build_annihilation(params.cfg)
    z = complex(np.trace(rho @ a))
    return z - mf.psi, rho, asm


def residual(params: ModelParams, mf: MeanField) -> complex:
    """Self-consistency residual ``Tr[rho_ss(psi, mu) a] - psi``.

    At ``psi = 0`` the returned value is the bifurcation indicator
    ``Tr[rho_ss a]`` itself, which vanishes by symmetry.
    """
    r, _, _ = _residual_parts(params, mf)
    return r


def solve_selfconsistent(
    params: ModelParams,
    seed: MeanField,
    tol: float = TOL_SC,
    max_iter: int = MAX_ITER,
    branch_id: int = 0,
) -> SelfConsistentSolution:
    """Drive the two-unknown root find on ``(psi, mu)`` from a seed.

    Quasi-Newton on the (Re, Im) residual with a finite-difference Jacobian
    and rank-one updates; steps that do not reduce the residual are halved,
    and a damped fixed-point update (``psi <- |Tr rho a|``, ``mu`` corrected by
    the residual phase) takes over when the Jacobian is unusable.  Collapse to
    the trivial root ``psi = 0`` counts as convergence (the point is then
    incoherent); running out of iterations is reported, never silently
    accepted.
    """
    x = np.array([max(seed.psi, 0.0), seed.mu], dtype=float)

    def eval_at(xv: np.ndarray):
        mf = MeanField(psi=max(xv[0], 0.0), mu=xv[1])
        r, rho, asm = _residual_parts(params, mf)
        return np.array([r.real, r.imag]), r, rho, asm

    try:
        rv, r_c, rho, asm = eval_at(x)
    except SteadyStateError as exc:
        return SelfConsistentSolution(
            mf=seed, rho=None, residual=np.nan, iterations=0,
            branch_id=branch_id, converged=False, failure=str(exc),
        )

    jac: np.ndarray | None = None
    iterations = 0
    stall = 0
    for iterations in range(1, max_iter + 1):
        if np.hypot(*rv) < tol:
            break
        if jac is None:
            jac = np.empty((2, 2))
            try:
                for col, step in ((0, FD_STEP_PSI), (1, FD_STEP_MU)):
                    xp = x.copy()
                    xp[col] += step
                    rp, *_ = eval_at(xp)
                    jac[:, col] = (rp - rv) / step
            except SteadyStateError:
                jac = None
        step_ok = False
        if jac is not None and np.isfinite(jac).all():
            try:
                dx = np.linalg.solve(jac, -rv)
                cond_bad = not np.isfinite(dx).all()
            except np.linalg.LinAlgError:
                cond_bad = True
            if not cond_bad:
                scale = 1.0
                for _ in range(8):
                    xn = x + scale * dx
                    if xn[0] < 0.0:
                        xn = x.copy()
                        xn[0] = x[0] * 0.25  # damped approach to the trivial root
                    try:
                        rn, rn_c, rho_n, asm_n = eval_at(xn)
                    except SteadyStateError:
                        scale *= DAMPING
                        continue
                    if np.hypot(*rn) <= np.hypot(*rv):
                        step_ok = True
                        break
                    scale *= DAMPING
        if not step_ok:
            # Damped fixed-point fallback: psi from the magnitude of <a>,
            # mu corrected by the phase of <a> (nonzero phase means the frame
            # frequency is off).
            z = r_c + x[0]
            xn = x.copy()
            xn[0] = (1 - DAMPING) * x[0] + DAMPING * abs(z)
            if abs(z) > 0:
                xn[1] = x[1] + DAMPING * float(np.angle(z)) * params.g_coupling
            try:
                rn, rn_c, rho_n, asm_n = eval_at(xn)
            except SteadyStateError as exc:
                return SelfConsistentSolution(
                    mf=MeanField(psi=max(x[0], 0.0), mu=x[1]), rho=rho,
                    residual=r_c, iterations=iterations, branch_id=branch_id,
                    converged=False, assembly=asm, failure=str(exc),
                )
            jac = None  # stale after a non-Newton move
        else:
            dxa = xn - x
            drv = rn - rv
            denom = float(dxa @ dxa)
            if denom > 0 and jac is not None:
                jac = jac + np.outer(drv - jac @ dxa, dxa) / denom
            if np.hypot(*rn) > 0.5 * np.hypot(*rv):
                stall += 1
                if stall >= 3:
                    jac, stall = None, 0  # refresh the finite-difference Jacobian
            else:
                stall = 0
        x, rv, r_c, rho, asm = xn, rn, rn_c, rho_n, asm_n

    converged = bool(np.hypot(*rv) < tol)
    return SelfConsistentSolution(
        mf=MeanField(psi=max(x[0], 0.0), mu=x[1]),
        rho=rho,
        residual=r_c,
        iterations=iterations,
        branch_id=branch_id,
        converged=converged,
        assembly=asm,
        failure=None if converged else "max_iter reached",
    )


def classify_point(
    params: ModelParams,
    seeds: list[MeanField] | tuple[MeanField, ...] | None = None,
    psi_threshold: float = PSI_THRESHOLD,
    tol: float = TOL_SC,
    max_iter: int = MAX_ITER,
) -> tuple[PhaseLabel, SelfConsistentSolution | None]:
    """Classify one parameter point and return the representative solution.

    Seeds are tried in order; every converged nontrivial root is recorded and
    the largest-amplitude one represents the coherent phase.  If all seeds
    collapse to the trivial root the point is incoherent; if no seed yields a
    usable steady state it is undetermined (flagged, not guessed).
    """
    if seeds is None:
        seeds = [MeanField(psi=p, mu=params.mu_b) for p in SEED_LADDER]
    if not seeds:
        raise ValueError("seed list must be nonempty")

    roots: list[SelfConsistentSolution] = []
    collapsed = False
    failures: list[str] = []
    for branch, seed in enumerate(seeds):
        sol = solve_selfconsistent(params, seed, tol=tol, max_iter=max_iter, branch_id=branch)
        if sol.converged and sol.mf.psi > psi_threshold:
            if sol.assembly is not None and sol.assembly.total is not None:
                cert = certify(sol.rho, sol.assembly.total, compute_gap=True)
                if cert.warn_gap:
                    failures.append("degenerate steady manifold")
                    continue
            if not any(abs(sol.mf.psi - r.mf.psi) < ROOT_RESOLUTION for r in roots):
                roots.append(sol)
        elif sol.converged:
            collapsed = True
        elif sol.failure is not None:
            failures.append(sol.failure)

    if roots:
        best = max(roots, key=lambda s: s.mf.psi)
        note = "multiple nontrivial roots" if len(roots) > 1 else None
        label = PhaseLabel(
            kind="coherent", psi=best.mf.psi, mu=best.mf.mu, n_roots=len(roots), note=note,
        )
        return label, best
    if collapsed:
        return PhaseLabel(kind="incoherent", psi=0.0, mu=None, n_roots=0), None
    note = "; ".join(sorted(set(failures))) or "no seed converged"
    return PhaseLabel(kind="undetermined", psi=np.nan, mu=None, n_roots=0, note=note), None


def classify_phase(
    params: ModelParams,
    seeds: list[MeanField] | tuple[MeanField, ...] | None = None,
    psi_threshold: float = PSI_THRESHOLD,
) -> PhaseLabel:
    """Phase label of one parameter point (see :func:`classify_point`)."""
    label, _ = classify_point(params, seeds, psi_threshold=psi_threshold)
    return label


def solutions_agree(a: SelfConsistentSolution, b: SelfConsistentSolution, tol: float = 1e-8) -> bool:
    """Whether two converged solutions describe the same root (by state distance)."""
    if a.rho is None or b.rho is None:
        return False
    return trace_distance(a.rho, b.rho) < tol
