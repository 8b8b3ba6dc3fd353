"""Slow, formula-literal reference implementations.

Everything here is written directly from the defining expressions with
explicit loops and per-channel superoperator terms, deliberately sharing no
code with the production path.  The self-test suite and the test oracles
compare the fast implementations against these.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "annihilation_matrix",
    "sigma_minus_matrix",
    "k_s_matrix",
    "eigen_channels",
    "pump_superops",
    "liouvillian_matrix",
    "steady_state_eig",
    "currents_by_trace",
    "gibbs_density",
]


def annihilation_matrix(n_max: int) -> np.ndarray:
    dim = 2 * (n_max + 1)
    a = np.zeros((dim, dim), dtype=complex)
    for s in (0, 1):
        for n in range(1, n_max + 1):
            a[s * (n_max + 1) + n - 1, s * (n_max + 1) + n] = np.sqrt(n)
    return a


def sigma_minus_matrix(n_max: int) -> np.ndarray:
    dim = 2 * (n_max + 1)
    sm = np.zeros((dim, dim), dtype=complex)
    for n in range(n_max + 1):
        sm[n, (n_max + 1) + n] = 1.0  # |g,n><e,n|
    return sm


def k_s_matrix(
    n_max: int,
    omega0: float,
    g: float,
    z_tau: float,
    psi: float,
    mu: float,
) -> np.ndarray:
    """Effective Hamiltonian assembled element by element from the basis rules."""
    npho = n_max + 1
    dim = 2 * npho
    k = np.zeros((dim, dim), dtype=complex)

    def idx(s: int, n: int) -> int:
        return s * npho + n

    for s in (0, 1):
        for n in range(npho):
            k[idx(s, n), idx(s, n)] = omega0 * (n + s) - mu * (n + s) + z_tau * psi**2
    for n in range(n_max):  # g sigma+ a : |e,n><g,n+1| plus conjugate
        k[idx(1, n), idx(0, n + 1)] += g * np.sqrt(n + 1)
        k[idx(0, n + 1), idx(1, n)] += g * np.sqrt(n + 1)
    for s in (0, 1):  # -z tau psi (a + a^dag)
        for n in range(n_max):
            k[idx(s, n), idx(s, n + 1)] += -z_tau * psi * np.sqrt(n + 1)
            k[idx(s, n + 1), idx(s, n)] += -z_tau * psi * np.sqrt(n + 1)
    return k


def eigen_channels(
    k_s: np.ndarray, sigma_plus: np.ndarray, eps: float = 1e-9
) -> list[tuple[float, np.ndarray]]:
    """Transition decomposition ``P(E + w) sigma+ P(E)`` by explicit projectors."""
    energies, vectors = np.linalg.eigh(k_s)
    groups: list[list[int]] = [[0]]
    for i in range(1, energies.size):
        if energies[i] - energies[groups[-1][-1]] < eps:
            groups[-1].append(i)
        else:
            groups.append([i])
    projectors = []
    for grp in groups:
        v = vectors[:, grp]
        projectors.append((float(np.mean(energies[grp])), v @ v.conj().T))

    channels: list[tuple[float, np.ndarray]] = []
    for e_p, p_p in projectors:
        for e_q, p_q in projectors:
            block = p_p @ sigma_plus @ p_q
            if np.linalg.norm(block) < 1e-12:
                continue
            channels.append((e_p - e_q, block))
    channels.sort(key=lambda c: c[0])
    # aggregate channels whose frequencies chain within eps; each bin carries
    # the mean frequency of its members
    rebinned: list[tuple[float, np.ndarray]] = []
    i = 0
    while i < len(channels):
        j = i + 1
        while j < len(channels) and channels[j][0] - channels[j - 1][0] < eps:
            j += 1
        omega = float(np.mean([channels[k][0] for k in range(i, j)]))
        op = sum(channels[k][1] for k in range(i, j))
        rebinned.append((omega, op))
        i = j
    return rebinned


def _fermi_plus(omega: float, beta: float, delta_mu: float) -> float:
    x = beta * (omega - delta_mu)
    x = max(min(x, 50.0), -50.0)
    return 1.0 / (1.0 + np.exp(x))


def pump_superops(
    channels: list[tuple[float, np.ndarray]],
    sigma_plus: np.ndarray,
    gamma: float,
    beta: float,
    delta_mu: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel, four-term pump dissipators with explicit Kronecker products."""
    dim = sigma_plus.shape[0]
    sp_op = sigma_plus
    sm_op = sigma_plus.conj().T
    eye = np.eye(dim)
    l_plus = np.zeros((dim * dim, dim * dim), dtype=complex)
    l_minus = np.zeros((dim * dim, dim * dim), dtype=complex)
    for omega, sp_w in channels:
        sm_w = sp_w.conj().T
        f_p = _fermi_plus(omega, beta, delta_mu)
        f_m = 1.0 - f_p
        l_plus += (-gamma / 2.0) * f_p * (
            np.kron(eye, sm_op @ sp_w)
            + np.kron((sm_w @ sp_op).T, eye)
            - np.kron(sm_w.T, sp_op)
            - np.kron(sm_op.T, sp_w)
        )
        l_minus += (-gamma / 2.0) * f_m * (
            np.kron(eye, sp_op @ sm_w)
            + np.kron((sp_w @ sm_op).T, eye)
            - np.kron(sp_w.T, sm_op)
            - np.kron(sp_op.T, sm_w)
        )
    return l_plus, l_minus


def liouvillian_matrix(
    n_max: int,
    omega0: float,
    g: float,
    z_tau: float,
    kappa: float,
    gamma: float,
    beta: float,
    mu_b: float,
    psi: float,
    mu: float,
) -> np.ndarray:
    """Full generator with every piece assembled the slow way."""
    k = k_s_matrix(n_max, omega0, g, z_tau, psi, mu)
    dim = k.shape[0]
    eye = np.eye(dim)
    a = annihilation_matrix(n_max)
    sm = sigma_minus_matrix(n_max)
    sp_op = sm.conj().T

    l_h = -1j * (np.kron(eye, k) - np.kron(k.T, eye))
    n_ph = a.conj().T @ a
    l_ph = (-kappa / 2.0) * (
        np.kron(eye, n_ph) + np.kron(n_ph.T, eye) - 2.0 * np.kron(a.conj(), a)
    )
    channels = eigen_channels(k, sp_op)
    l_plus, l_minus = pump_superops(channels, sp_op, gamma, beta, mu_b - mu)
    return l_h + l_ph + l_plus + l_minus


def steady_state_eig(l: np.ndarray) -> np.ndarray:
    """Kernel vector from a full eigendecomposition (independent of the LU path)."""
    w, v = np.linalg.eig(l)
    idx = int(np.argmin(np.abs(w)))
    dim = int(round(np.sqrt(l.shape[0])))
    rho = v[:, idx].reshape((dim, dim), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def currents_by_trace(
    rho: np.ndarray,
    l_plus: np.ndarray,
    l_minus: np.ndarray,
    l_ph: np.ndarray,
    n_max: int,
) -> tuple[float, float, float]:
    """Current traces evaluated with explicit reshapes and operator products."""
    dim = 2 * (n_max + 1)
    sm = sigma_minus_matrix(n_max)
    n_tls = sm.conj().T @ sm
    a = annihilation_matrix(n_max)
    n_ph = a.conj().T @ a

    def apply(superop: np.ndarray) -> np.ndarray:
        return (superop @ rho.flatten(order="F")).reshape((dim, dim), order="F")

    j_in = np.trace(n_tls @ apply(l_plus)).real
    j_out = -np.trace(n_tls @ apply(l_minus)).real
    j_ph = -np.trace(n_ph @ apply(l_ph)).real
    return float(j_in), float(j_out), float(j_ph)


def gibbs_density(k_s: np.ndarray, n_s: np.ndarray, beta: float, delta_mu: float) -> np.ndarray:
    w, v = np.linalg.eigh(k_s - delta_mu * n_s)
    p = np.exp(-beta * (w - w.min()))
    p /= p.sum()
    rho = np.zeros_like(k_s, dtype=complex)
    for i in range(w.size):
        rho += p[i] * np.outer(v[:, i], v[:, i].conj())
    return rho
