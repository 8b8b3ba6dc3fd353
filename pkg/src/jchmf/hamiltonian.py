"""Single-site Jaynes-Cummings and mean-field Hamiltonians and their eigenstructure.

The lattice problem is reduced to one driven site: the neighbour photon field
is replaced by a real classical amplitude ``psi`` rotating at frequency ``mu``,
and everything below lives in that rotating frame.  The central object is

    K_S = H_JC - z*tau*(psi*a + psi*a^dag - psi^2) - mu*N_S,

whose spectral decomposition also defines the transition ("eigen") operators
``sigma+_w = sum_q P(E_q + w) sigma+ P(E_q)`` consumed by the pump dissipator.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .hilbert import (
    HilbertConfig,
    build_annihilation,
    build_number_operators,
    build_sigma_minus,
)

__all__ = [
    "ModelParams",
    "MeanField",
    "EigenSystem",
    "EigenOperatorEntry",
    "EigenOperatorSet",
    "EPS_DEG",
    "build_h_jc",
    "build_k_s",
    "diagonalize",
    "build_eigenoperators",
]

#: Degeneracy / transition-frequency binning tolerance (units of the coupling g).
#: Far below any physical gap at the parameters of interest, far above
#: double-precision noise on the eigenvalues.
EPS_DEG = 1e-9

#: Transition-operator blocks with Frobenius norm below this are dropped.
DROP_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """All physical constants of one simulation point.

    Energies and rates are quoted in units of the TLS-photon coupling, which
    is kept as an explicit field ``g_coupling`` (normally 1).  ``z_tau`` is
    the combined hopping ``z * tau`` (coordination number times hopping).
    """

    omega0: float
    z_tau: float
    kappa: float
    gamma: float
    beta: float
    mu_b: float
    cfg: HilbertConfig = field(default_factory=lambda: HilbertConfig(n_max=10))
    g_coupling: float = 1.0

    def __post_init__(self) -> None:
        if self.g_coupling <= 0:
            raise ValueError("g_coupling must be positive (it is the unit of energy)")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.z_tau < 0:
            raise ValueError(f"z_tau must be >= 0, got {self.z_tau}")

    def with_mu_b(self, mu_b: float) -> "ModelParams":
        return replace(self, mu_b=mu_b)

    def with_cutoff(self, n_max: int) -> "ModelParams":
        return replace(self, cfg=HilbertConfig(n_max=n_max))


@dataclass(frozen=True)
class MeanField:
    """Order-parameter pair: real amplitude ``psi >= 0`` and frame frequency ``mu``.

    The gauge is fixed by taking ``psi`` real and non-negative; the phase
    freedom of the photon field is absorbed into the definition of ``a``.
    """

    psi: float
    mu: float

    def __post_init__(self) -> None:
        if self.psi < 0:
            raise ValueError(f"psi must be >= 0 (gauge fixing), got {self.psi}")


@dataclass(frozen=True)
class EigenSystem:
    """Spectral decomposition of ``K_S`` with degeneracy grouping.

    ``energies`` are sorted ascending, ``vectors`` holds the orthonormal
    eigenvectors as columns.  ``groups`` partitions the level indices into
    clusters whose internal gaps are below ``eps_deg``; ``group_energies``
    carries one representative (mean) energy per cluster.
    """

    energies: np.ndarray
    vectors: np.ndarray
    groups: tuple[tuple[int, ...], ...]
    group_energies: np.ndarray
    eps_deg: float

    @property
    def dim(self) -> int:
        return self.energies.size


@dataclass(frozen=True)
class EigenOperatorEntry:
    """One transition channel: frequency ``omega`` and the operator pair for it."""

    omega: float
    sigma_plus: np.ndarray
    sigma_minus: np.ndarray


@dataclass(frozen=True)
class EigenOperatorSet:
    """Decomposition of ``sigma+`` by transition frequency of ``K_S``.

    Channels with identical frequency (within the binning tolerance) are
    aggregated; zero blocks are dropped.  The surviving entries still sum to
    the bare ``sigma+`` (completeness of the projector decomposition).
    """

    entries: tuple[EigenOperatorEntry, ...]

    @property
    def omegas(self) -> np.ndarray:
        return np.array([e.omega for e in self.entries])

    def sigma_plus_total(self) -> np.ndarray:
        return sum(e.sigma_plus for e in self.entries)


def build_h_jc(params: ModelParams) -> np.ndarray:
    """Resonant single-site Jaynes-Cummings Hamiltonian.

    ``H_JC = omega0 sigma+ sigma- + omega0 a^dag a + g (sigma+ a + sigma- a^dag)``;
    Hermitian, block diagonal in the total excitation number.
    """
    cfg = params.cfg
    a = build_annihilation(cfg)
    sm = build_sigma_minus(cfg)
    sp = sm.conj().T
    n_ph, n_tls, _ = build_number_operators(cfg)
    return params.omega0 * (n_tls + n_ph) + params.g_coupling * (sp @ a + sm @ a.conj().T)


def build_k_s(params: ModelParams, mf: MeanField) -> np.ndarray:
    """Effective rotating-frame Hamiltonian ``K_S`` for a given mean field.

    Includes the constant ``z_tau * psi^2`` shift on the identity; it cancels
    in all gaps and dissipators but is kept for fidelity to the defining
    expression.  At ``psi = 0`` this reduces to ``H_JC - mu * N_S``.
    """
    cfg = params.cfg
    a = build_annihilation(cfg)
    _, _, n_s = build_number_operators(cfg)
    h_mf = build_h_jc(params) - params.z_tau * (
        mf.psi * a + mf.psi * a.conj().T - mf.psi**2 * np.eye(cfg.dim)
    )
    return h_mf - mf.mu * n_s


def _require_hermitian(m: np.ndarray, rtol: float = 1e-12) -> None:
    scale = max(np.linalg.norm(m), 1.0)
    dev = np.linalg.norm(m - m.conj().T)
    if dev > rtol * scale:
        raise ValueError(f"matrix is not Hermitian: |M - M^dag| = {dev:.3e} (scale {scale:.3e})")


def diagonalize(k_s: np.ndarray, eps_deg: float = EPS_DEG) -> EigenSystem:
    """Diagonalize a Hermitian ``K_S`` and group (near-)degenerate levels.

    Levels whose consecutive gap is below ``eps_deg`` fall into one group and
    share a single projector downstream.  Non-Hermitian input is rejected.
    """
    _require_hermitian(k_s)
    energies, vectors = np.linalg.eigh(k_s)
    groups: list[list[int]] = [[0]]
    for i in range(1, energies.size):
        if energies[i] - energies[groups[-1][-1]] < eps_deg:
            groups[-1].append(i)
        else:
            groups.append([i])
    group_energies = np.array([float(np.mean(energies[list(grp)])) for grp in groups])
    return EigenSystem(
        energies=energies,
        vectors=vectors,
        groups=tuple(tuple(grp) for grp in groups),
        group_energies=group_energies,
        eps_deg=eps_deg,
    )


def build_eigenoperators(eig: EigenSystem, sigma_plus: np.ndarray) -> EigenOperatorSet:
    """Decompose ``sigma+`` into transition channels of the eigensystem.

    Each group pair (p, q) contributes ``P_p sigma+ P_q`` at frequency
    ``E_p - E_q``; blocks with Frobenius norm below ``DROP_TOL`` are dropped
    and channels whose frequencies agree within ``eps_deg`` are merged.  The
    companion ``sigma-`` channel is the conjugate transpose, which carries the
    same frequency label.
    """
    if sigma_plus.shape != (eig.dim, eig.dim):
        raise ValueError("sigma_plus dimension does not match the eigensystem")
    u = eig.vectors
    sp_eig = u.conj().T @ sigma_plus @ u

    raw: list[tuple[float, np.ndarray]] = []
    for gi, grp_i in enumerate(eig.groups):
        rows = np.asarray(grp_i)
        for gj, grp_j in enumerate(eig.groups):
            cols = np.asarray(grp_j)
            block = sp_eig[np.ix_(rows, cols)]
            if np.linalg.norm(block) < DROP_TOL:
                continue
            # back to the product basis: U_p (P sigma+ P) U_q^dag
            op = u[:, rows] @ block @ u[:, cols].conj().T
            raw.append((eig.group_energies[gi] - eig.group_energies[gj], op))

    raw.sort(key=lambda item: item[0])
    entries: list[EigenOperatorEntry] = []
    i = 0
    while i < len(raw):
        j = i + 1
        while j < len(raw) and raw[j][0] - raw[j - 1][0] < eig.eps_deg:
            j += 1
        omegas = [raw[k][0] for k in range(i, j)]
        op = sum(raw[k][1] for k in range(i, j))
        omega = float(np.mean(omegas))
        entries.append(
            EigenOperatorEntry(omega=omega, sigma_plus=op, sigma_minus=op.conj().T)
        )
        i = j
    return EigenOperatorSet(entries=tuple(entries))
