"""Reported quantities: photon number, bath currents, level gaps, plateaus.

Currents follow the partial-trace definitions

    J_TLS^in  =  Tr[sigma+ sigma- L_TLS^+ rho_ss]   (pump bath -> system)
    J_TLS^out = -Tr[sigma+ sigma- L_TLS^- rho_ss]   (system -> pump bath)
    J_ph^out  = -Tr[a^dag a     L_ph    rho_ss]     (system -> photon bath)

with ``J_ph^out = kappa <a^dag a>`` holding as an algebraic identity of the
loss dissipator, truncation included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import EigenSystem, MeanField
from .hilbert import HilbertConfig, build_annihilation, build_sigma_minus
from .liouvillian import Assembly, unvec, vec

__all__ = [
    "ObservableRecord",
    "PlateauRegion",
    "TOL_MU",
    "TOL_NPH",
    "photon_number",
    "currents",
    "energy_gaps",
    "detect_plateaus",
    "observable_record",
]

#: Plateau criteria: neighbouring points must agree this closely in mu ...
TOL_MU = 1e-4
#: ... and in the photon number, over at least MIN_WIDTH_STEPS grid steps.
TOL_NPH = 1e-3
MIN_WIDTH_STEPS = 3


@dataclass(frozen=True)
class ObservableRecord:
    """Everything reported for one converged solution."""

    n_ph: float
    j_tls_in: float
    j_tls_out: float
    j_ph_out: float
    gaps: tuple[float, float, float]
    delta_mu: float


@dataclass(frozen=True)
class PlateauRegion:
    """A maximal flat run of a chemical-potential scan."""

    mu_b_start: float
    mu_b_end: float
    plateau_mu: float
    plateau_n_ph: float

    def __post_init__(self) -> None:
        if self.mu_b_end <= self.mu_b_start:
            raise ValueError("plateau must have positive width")


def photon_number(rho: np.ndarray) -> float:
    """``<a^dag a>``, clipped at zero for reporting."""
    dim = rho.shape[0]
    cfg = HilbertConfig(n_max=dim // 2 - 1)
    a = build_annihilation(cfg)
    val = float(np.real(np.trace(rho @ (a.conj().T @ a))))
    return max(val, 0.0)


def _trace_against(op: np.ndarray, superop: np.ndarray, rho: np.ndarray) -> float:
    return float(np.real(np.trace(op @ unvec(superop @ vec(rho), rho.shape[0]))))


def currents(
    rho: np.ndarray,
    l_tls_plus: np.ndarray,
    l_tls_minus: np.ndarray,
    l_ph: np.ndarray,
) -> tuple[float, float, float]:
    """Return ``(J_TLS^in, J_TLS^out, J_ph^out)`` for a steady state.

    The superoperators must come from the same assembly that produced ``rho``.
    """
    dim = rho.shape[0]
    cfg = HilbertConfig(n_max=dim // 2 - 1)
    sm = build_sigma_minus(cfg)
    n_tls = sm.conj().T @ sm
    a = build_annihilation(cfg)
    n_ph = a.conj().T @ a
    j_in = _trace_against(n_tls, l_tls_plus, rho)
    j_out = -_trace_against(n_tls, l_tls_minus, rho)
    j_ph = -_trace_against(n_ph, l_ph, rho)
    return j_in, j_out, j_ph


def energy_gaps(eig: EigenSystem, count: int = 3) -> list[float]:
    """First ``count`` consecutive gaps of the sorted spectrum."""
    if eig.energies.size < count + 1:
        raise ValueError(f"need at least {count + 1} eigenvalues, got {eig.energies.size}")
    e = eig.energies
    return [float(e[i + 1] - e[i]) for i in range(count)]


def observable_record(asm: Assembly, rho: np.ndarray, mf: MeanField) -> ObservableRecord:
    """Assemble the full record for one converged point."""
    j_in, j_out, j_ph = currents(rho, asm.l_pump_plus, asm.l_pump_minus, asm.l_loss)
    gaps = energy_gaps(asm.eig)
    return ObservableRecord(
        n_ph=photon_number(rho),
        j_tls_in=j_in,
        j_tls_out=j_out,
        j_ph_out=j_ph,
        gaps=(gaps[0], gaps[1], gaps[2]),
        delta_mu=asm.params.mu_b - mf.mu,
    )


def detect_plateaus(
    scan: list[tuple[float, ObservableRecord, MeanField]],
    tol_mu: float = TOL_MU,
    tol_nph: float = TOL_NPH,
    min_width: float | None = None,
) -> list[PlateauRegion]:
    """Find maximal flat runs of ``(mu, n_ph)`` along a sorted scan.

    ``scan`` holds converged points only, sorted by ``mu_b``.  Two neighbours
    chain when both ``|d mu| < tol_mu`` and ``|d n_ph| < tol_nph`` and they are
    adjacent on the grid (a detection gap breaks the run).  Runs narrower than
    ``min_width`` (default: three median grid steps) are discarded; plateau
    values are run medians.
    """
    if len(scan) < 2:
        return []
    mu_bs = np.array([p[0] for p in scan])
    if np.any(np.diff(mu_bs) <= 0):
        raise ValueError("scan must be strictly sorted by mu_b")
    step = float(np.median(np.diff(mu_bs)))
    if min_width is None:
        min_width = MIN_WIDTH_STEPS * step

    runs: list[list[int]] = [[0]]
    for i in range(1, len(scan)):
        mu_prev, rec_prev = scan[i - 1][2].mu, scan[i - 1][1]
        mu_here, rec_here = scan[i][2].mu, scan[i][1]
        contiguous = mu_bs[i] - mu_bs[i - 1] <= 1.5 * step
        flat = (
            contiguous
            and abs(mu_here - mu_prev) < tol_mu
            and abs(rec_here.n_ph - rec_prev.n_ph) < tol_nph
        )
        if flat:
            runs[-1].append(i)
        else:
            runs.append([i])

    regions = []
    for run in runs:
        if len(run) < 2:
            continue
        start, end = mu_bs[run[0]], mu_bs[run[-1]]
        if end - start < min_width:
            continue
        regions.append(
            PlateauRegion(
                mu_b_start=float(start),
                mu_b_end=float(end),
                plateau_mu=float(np.median([scan[i][2].mu for i in run])),
                plateau_n_ph=float(np.median([scan[i][1].n_ph for i in run])),
            )
        )
    return regions
