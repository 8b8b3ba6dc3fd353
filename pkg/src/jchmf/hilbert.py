"""Truncated composite Hilbert space (TLS x photon) and its elementary operators.

The basis ordering is fixed once for the whole package: the two-level-system
(TLS) index is outermost (ground ``g`` first, excited ``e`` second) and the
photon Fock index is innermost, ascending.  The product state ``|s, n>`` sits
at row ``s * (n_max + 1) + n``.  All operators are dense complex matrices in
this basis; the photon ladder is truncated hard at ``n_max`` (no damping of
the top Fock state), so callers should monitor the top-level population to
detect truncation error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HilbertConfig",
    "basis_index",
    "build_annihilation",
    "build_sigma_minus",
    "build_number_operators",
]


@dataclass(frozen=True)
class HilbertConfig:
    """Truncation of the composite TLS x photon space.

    ``n_max`` is the largest retained photon Fock index; the composite
    dimension is ``2 * (n_max + 1)``.
    """

    n_max: int

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")

    @property
    def n_photon(self) -> int:
        """Number of retained Fock states, ``n_max + 1``."""
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)


def basis_index(cfg: HilbertConfig, s: int, n: int) -> int:
    """Row index of the product basis state ``|s, n>`` (s=0 ground, s=1 excited)."""
    if s not in (0, 1):
        raise ValueError(f"TLS index must be 0 or 1, got {s}")
    if not 0 <= n <= cfg.n_max:
        raise ValueError(f"photon index {n} outside [0, {cfg.n_max}]")
    return s * cfg.n_photon + n


def build_annihilation(cfg: HilbertConfig) -> np.ndarray:
    """Photon annihilation operator ``a`` on the composite space.

    Acts as ``a |s, n> = sqrt(n) |s, n-1>`` and as the identity on the TLS
    factor.  Hard truncation: matrix elements involving ``n > n_max`` are
    simply absent.
    """
    a_ph = np.zeros((cfg.n_photon, cfg.n_photon), dtype=complex)
    for n in range(1, cfg.n_photon):
        a_ph[n - 1, n] = np.sqrt(n)
    return np.kron(np.eye(2), a_ph)


def build_sigma_minus(cfg: HilbertConfig) -> np.ndarray:
    """TLS lowering operator ``sigma- = |g><e|`` tensored with the photon identity."""
    sm = np.zeros((2, 2), dtype=complex)
    sm[0, 1] = 1.0
    return np.kron(sm, np.eye(cfg.n_photon))


def build_number_operators(cfg: HilbertConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(a^dag a, sigma+ sigma-, N_S)`` with ``N_S`` their sum.

    All three are diagonal in the product basis; ``N_S`` counts the total
    number of photon plus TLS excitations.
    """
    a = build_annihilation(cfg)
    sm = build_sigma_minus(cfg)
    n_ph = a.conj().T @ a
    n_tls = sm.conj().T @ sm
    return n_ph, n_tls, n_ph + n_tls
