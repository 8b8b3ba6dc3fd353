"""Built-in verification suite: fast implementations against the literal references.

Runs in under a minute and prints one line per check; used by the ``selftest``
command and importable from tests.
"""

from __future__ import annotations

import numpy as np

from . import reference
from .hamiltonian import HilbertConfig, MeanField, ModelParams
from .hilbert import build_annihilation, build_sigma_minus
from .liouvillian import assemble, unvec, vec
from .observables import currents
from .equilibrium import mu_b_first_closed_form
from .steady import _solve_rho_lu

__all__ = ["run_selftest"]


def _random_params(rng: np.random.Generator, n_max: int) -> tuple[ModelParams, MeanField]:
    omega0 = rng.uniform(0.5, 2.0)
    params = ModelParams(
        omega0=omega0,
        z_tau=rng.uniform(0.0, 1.0),
        kappa=rng.uniform(0.0, 0.1),
        gamma=rng.uniform(0.005, 0.1),
        beta=rng.uniform(2.0, 300.0),
        mu_b=omega0 + rng.uniform(-1.5, 0.2),
        cfg=HilbertConfig(n_max=n_max),
    )
    mf = MeanField(psi=rng.uniform(0.0, 1.0), mu=params.mu_b + rng.uniform(-0.3, 0.3))
    return params, mf


def _check_generator_soundness(rng: np.random.Generator, n_points: int = 100) -> tuple[bool, str]:
    worst_trace = 0.0
    worst_herm = 0.0
    for _ in range(n_points):
        params, mf = _random_params(rng, n_max=int(rng.integers(1, 5)))
        asm = assemble(params, mf)
        dim = asm.dim
        trace_vec = np.zeros(dim * dim, dtype=complex)
        trace_vec[:: dim + 1] = 1.0
        worst_trace = max(
            worst_trace,
            float(np.linalg.norm(trace_vec @ asm.total) / np.linalg.norm(asm.total)),
        )
        r = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho = r + r.conj().T
        img = unvec(asm.total @ vec(rho), dim)
        worst_herm = max(worst_herm, float(np.linalg.norm(img - img.conj().T)))
    ok = worst_trace < 1e-10 and worst_herm < 1e-12 * 100
    return ok, f"trace-preservation {worst_trace:.2e}, hermiticity {worst_herm:.2e}"


def _check_literal_equivalence(rng: np.random.Generator, n_points: int = 20) -> tuple[bool, str]:
    worst_l = 0.0
    worst_rho = 0.0
    worst_j = 0.0
    for _ in range(n_points):
        params, mf = _random_params(rng, n_max=1)
        asm = assemble(params, mf)
        l_ref = reference.liouvillian_matrix(
            1, params.omega0, params.g_coupling, params.z_tau, params.kappa,
            params.gamma, params.beta, params.mu_b, mf.psi, mf.mu,
        )
        worst_l = max(worst_l, float(np.abs(asm.total - l_ref).max()))
        rho = _solve_rho_lu(asm.total)
        rho_ref = reference.steady_state_eig(l_ref)
        worst_rho = max(worst_rho, float(np.abs(rho - rho_ref).max()))
        j_fast = currents(rho, asm.l_pump_plus, asm.l_pump_minus, asm.l_loss)
        chan = reference.eigen_channels(asm.k_s, build_sigma_minus(params.cfg).conj().T)
        lp_ref, lm_ref = reference.pump_superops(
            chan, build_sigma_minus(params.cfg).conj().T,
            params.gamma, params.beta, params.mu_b - mf.mu,
        )
        a = build_annihilation(params.cfg)
        n_ph = a.conj().T @ a
        eye = np.eye(asm.dim)
        lph_ref = (-params.kappa / 2.0) * (
            np.kron(eye, n_ph) + np.kron(n_ph.T, eye) - 2.0 * np.kron(a.conj(), a)
        )
        j_ref = reference.currents_by_trace(rho_ref, lp_ref, lm_ref, lph_ref, 1)
        worst_j = max(worst_j, float(max(abs(x - y) for x, y in zip(j_fast, j_ref))))
    ok = worst_l < 1e-11 and worst_rho < 1e-10 and worst_j < 1e-10
    return ok, f"generator {worst_l:.2e}, steady state {worst_rho:.2e}, currents {worst_j:.2e}"


def _check_closed_form() -> tuple[bool, str]:
    params = ModelParams(omega0=1.0, z_tau=0.6, kappa=0.007, gamma=0.02,
                         beta=1000.0, mu_b=0.0, cfg=HilbertConfig(n_max=2))
    value = mu_b_first_closed_form(params) - params.omega0
    expected = -0.6 - np.sqrt(0.35)
    ok = abs(value - expected) < 1e-12
    return ok, f"onset {value:.6f} vs {expected:.6f}"


def run_selftest(verbose: bool = True) -> bool:
    """Run all oracle suites; returns True when every check passes."""
    rng = np.random.default_rng(20240801)
    checks = [
        ("generator soundness (100 random points)", lambda: _check_generator_soundness(rng)),
        ("literal-reference equivalence (20 points, n_max=1)",
         lambda: _check_literal_equivalence(rng)),
        ("closed-form plateau onset", _check_closed_form),
    ]
    all_ok = True
    for name, check in checks:
        ok, detail = check()
        all_ok = all_ok and ok
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return all_ok
