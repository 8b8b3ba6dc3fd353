"""Quantum-master-equation generator as a matrix on vectorized density matrices.

The generator is ``L = -i[K_S, .] + L_TLS + L_ph`` with a photon-loss
dissipator (vacuum bath, rate ``kappa``) and a thermal TLS pump written in
terms of the transition operators of ``K_S`` with Fermi occupation weights
``f+-(w)`` at inverse temperature ``beta`` and effective chemical potential
``mu_b - mu``.

Vectorization convention (fixed package-wide): column stacking, so
``vec(A rho B) = kron(B.T, A) vec(rho)`` and ``vec`` is Fortran-order
flattening.  The pump dissipator keeps the printed non-secular form: the bare
``sigma-+`` appears on one side of every term, the frequency-resolved
``sigma+-_w`` on the other, with no secular truncation of the cross terms.
No principal-value (Lamb-shift) terms are included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import (
    EigenOperatorSet,
    EigenSystem,
    MeanField,
    ModelParams,
    build_eigenoperators,
    build_k_s,
    diagonalize,
)
from .hilbert import build_annihilation, build_sigma_minus

__all__ = [
    "FermiWeight",
    "EXP_CLAMP",
    "fermi",
    "fermi_weights",
    "vec",
    "unvec",
    "superop_hamiltonian",
    "superop_loss",
    "superop_pump",
    "Assembly",
    "assemble",
]

#: Clamp on the Fermi exponent beta*(w - delta_mu).  Beyond +-50 the weight is
#: 0 or 1 to double precision and the raw exponential would overflow at the
#: inverse temperatures of interest (beta ~ 1000/g).
EXP_CLAMP = 50.0


@dataclass(frozen=True)
class FermiWeight:
    """Occupation pair of the pump bath at transition frequency ``omega``."""

    omega: float
    f_plus: float
    f_minus: float


def fermi(omega: float, beta: float, delta_mu: float) -> FermiWeight:
    """Fermi weights ``f+ = 1/(1 + exp(beta (omega - delta_mu)))`` and ``f- = 1 - f+``.

    The exponent is clamped to ``+-EXP_CLAMP`` so the weights saturate exactly
    to 0/1 instead of overflowing.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    x = float(np.clip(beta * (omega - delta_mu), -EXP_CLAMP, EXP_CLAMP))
    f_plus = 1.0 / (1.0 + np.exp(x))
    return FermiWeight(omega=omega, f_plus=f_plus, f_minus=1.0 - f_plus)


def fermi_weights(eig_ops: EigenOperatorSet, beta: float, delta_mu: float) -> tuple[FermiWeight, ...]:
    """One Fermi weight per transition channel, in channel order."""
    return tuple(fermi(e.omega, beta, delta_mu) for e in eig_ops.entries)


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return rho.flatten(order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`vec`; exact round trip."""
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return v.reshape((dim, dim), order="F")


def _left(op: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> op @ rho``."""
    return np.kron(np.eye(op.shape[0]), op)


def _right(op: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> rho @ op``."""
    return np.kron(op.T, np.eye(op.shape[0]))


def _sandwich(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> left @ rho @ right``."""
    return np.kron(right.T, left)


def superop_hamiltonian(k_s: np.ndarray) -> np.ndarray:
    """Commutator generator ``rho -> -i (K rho - rho K)`` for Hermitian ``K``."""
    scale = max(np.linalg.norm(k_s), 1.0)
    if np.linalg.norm(k_s - k_s.conj().T) > 1e-12 * scale:
        raise ValueError("superop_hamiltonian requires a Hermitian matrix")
    return -1j * (_left(k_s) - _right(k_s))


def superop_loss(kappa: float, a: np.ndarray) -> np.ndarray:
    """Photon-loss dissipator ``rho -> -(kappa/2)(n rho + rho n - 2 a rho a^dag)``."""
    if kappa < 0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    n = a.conj().T @ a
    return -0.5 * kappa * (_left(n) + _right(n) - 2.0 * _sandwich(a, a.conj().T))


def superop_pump(
    gamma: float,
    weights: tuple[FermiWeight, ...] | list[FermiWeight],
    eig_ops: EigenOperatorSet,
    sigma_plus: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Thermal TLS pump ``(L_TLS^+, L_TLS^-)`` in the literal four-term form.

    For each channel frequency the generator contains, with weight ``f+(w)``
    (raising part) or ``f-(w)`` (lowering part),

        sigma-+ sigma+-_w rho + rho sigma-+_w sigma+-
        - sigma+- rho sigma-+_w - sigma+-_w rho sigma-+ ,

    where the unsubscripted operators are the bare ones.  The frequency sums
    are carried out on the operators first (they enter every term linearly),
    which is an exact reordering of the printed expression.
    """
    if len(weights) != len(eig_ops.entries):
        raise ValueError(
            f"weight list length {len(weights)} does not match "
            f"{len(eig_ops.entries)} transition channels"
        )
    for w, e in zip(weights, eig_ops.entries):
        if abs(w.omega - e.omega) > 1e-12 * max(1.0, abs(e.omega)):
            raise ValueError(
                f"weight frequency {w.omega} does not match channel frequency {e.omega}"
            )

    dim = sigma_plus.shape[0]
    sp = sigma_plus
    sm = sigma_plus.conj().T
    sp_f = np.zeros((dim, dim), dtype=complex)  # sum_w f+(w) sigma+_w
    sp_g = np.zeros((dim, dim), dtype=complex)  # sum_w f-(w) sigma+_w
    for w, e in zip(weights, eig_ops.entries):
        sp_f += w.f_plus * e.sigma_plus
        sp_g += w.f_minus * e.sigma_plus
    sm_f = sp_f.conj().T  # sum_w f+(w) sigma-_w
    sm_g = sp_g.conj().T  # sum_w f-(w) sigma-_w

    l_plus = -0.5 * gamma * (
        _left(sm @ sp_f) + _right(sm_f @ sp) - _sandwich(sp, sm_f) - _sandwich(sp_f, sm)
    )
    l_minus = -0.5 * gamma * (
        _left(sp @ sm_g) + _right(sp_g @ sm) - _sandwich(sm, sp_g) - _sandwich(sm_g, sp)
    )
    return l_plus, l_minus


@dataclass(frozen=True)
class Assembly:
    """A fully assembled generator plus the spectral data it was built from."""

    params: ModelParams
    mf: MeanField
    k_s: np.ndarray
    eig: EigenSystem
    eig_ops: EigenOperatorSet
    weights: tuple[FermiWeight, ...]
    l_hamiltonian: np.ndarray
    l_loss: np.ndarray
    l_pump_plus: np.ndarray
    l_pump_minus: np.ndarray
    total: np.ndarray

    @property
    def dim(self) -> int:
        return self.k_s.shape[0]


def assemble(params: ModelParams, mf: MeanField) -> Assembly:
    """Build ``L = -i[K_S, .] + L_TLS + L_ph`` from a freshly diagonalized ``K_S``.

    The eigensystem, transition channels and Fermi weights are returned
    alongside the superoperators so observables can reuse them.
    """
    k_s = build_k_s(params, mf)
    eig = diagonalize(k_s)
    sp = build_sigma_minus(params.cfg).conj().T
    eig_ops = build_eigenoperators(eig, sp)
    weights = fermi_weights(eig_ops, params.beta, params.mu_b - mf.mu)

    l_h = superop_hamiltonian(k_s)
    l_loss = superop_loss(params.kappa, build_annihilation(params.cfg))
    l_plus, l_minus = superop_pump(params.gamma, weights, eig_ops, sp)
    return Assembly(
        params=params,
        mf=mf,
        k_s=k_s,
        eig=eig,
        eig_ops=eig_ops,
        weights=weights,
        l_hamiltonian=l_h,
        l_loss=l_loss,
        l_pump_plus=l_plus,
        l_pump_minus=l_minus,
        total=l_h + l_loss + l_plus + l_minus,
    )
