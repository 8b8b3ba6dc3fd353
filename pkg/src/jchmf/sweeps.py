"""Batch orchestration: scans, phase boundaries, the loss scan, and data emission.

The user-facing surface is a plain-text key-value configuration (one key per
line, ``#`` comments, unknown keys rejected) resolved into a
:class:`SweepSpec`, and tab-separated result tables with one header row naming
every field.  A JSON manifest with every resolved parameter and tolerance is
written beside each output so runs are reproducible; identical configurations
produce byte-identical tables.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import __version__ as _code_version
from .hamiltonian import HilbertConfig, MeanField, ModelParams
from .liouvillian import assemble
from .observables import (
    MIN_WIDTH_STEPS,
    TOL_MU,
    TOL_NPH,
    ObservableRecord,
    PlateauRegion,
    detect_plateaus,
    observable_record,
)
from .selfconsistent import (
    MAX_ITER,
    PSI_THRESHOLD,
    SEED_LADDER,
    TOL_SC,
    classify_point,
)
from .equilibrium import (
    NoSignChangeError,
    equilibrium_boundary,
    mu_b_first_closed_form,
    mu_b_first_gs_estimate,
)
from .steady import SteadyStateError, _solve_rho_lu, certify, trace_distance

__all__ = [
    "SweepSpec",
    "SweepRow",
    "ScanResult",
    "BoundaryRow",
    "KappaRow",
    "ConfigError",
    "load_config",
    "emit_config",
    "run_single_point",
    "run_mu_b_scan",
    "run_phase_diagram",
    "run_kappa_scan",
    "emit_results",
    "write_manifest",
    "kappa_cutoff_schedule",
]


class ConfigError(ValueError):
    """Malformed or unknown configuration input."""


@dataclass(frozen=True)
class SweepSpec:
    """Fully resolved description of one batch run."""

    kind: str = "point"                 # point | mub-scan | phase-diagram | kappa-scan
    omega0: float = 1.0
    g: float = 1.0
    z_tau: float = 0.6
    kappa: float = 0.007
    gamma: float = 0.02
    beta: float = 1000.0
    n_max: int = 10
    mu_b: float = 0.0                   # point runs
    mu_b_start: float = -0.5            # mu_b scans (absolute values)
    mu_b_stop: float = 0.8
    mu_b_step: float = 0.005
    direction: str = "both"             # ascending | descending | both
    z_tau_start: float = 0.3            # phase-diagram grid
    z_tau_stop: float = 0.9
    z_tau_step: float = 0.02
    kappa_values: tuple[float, ...] = (0.007, 0.004, 0.002)
    gs_cutoff: int = 500
    psi_threshold: float = PSI_THRESHOLD
    tol_sc: float = TOL_SC
    max_iter: int = MAX_ITER
    tol_mu: float = TOL_MU
    tol_nph: float = TOL_NPH
    min_width_steps: int = MIN_WIDTH_STEPS
    output: str = ""
    plot_data: bool = False
    workers: int = 1

    def model_params(self, mu_b: float | None = None, z_tau: float | None = None,
                     kappa: float | None = None, n_max: int | None = None) -> ModelParams:
        return ModelParams(
            omega0=self.omega0,
            z_tau=self.z_tau if z_tau is None else z_tau,
            kappa=self.kappa if kappa is None else kappa,
            gamma=self.gamma,
            beta=self.beta,
            mu_b=self.mu_b if mu_b is None else mu_b,
            cfg=HilbertConfig(n_max=self.n_max if n_max is None else n_max),
            g_coupling=self.g,
        )


_KINDS = ("point", "mub-scan", "phase-diagram", "kappa-scan")
_DIRECTIONS = ("ascending", "descending", "both")

_FIELD_TYPES = {f.name: f.type for f in fields(SweepSpec)}


def _parse_value(key: str, raw: str, line_no: int):
    typ = _FIELD_TYPES[key]
    try:
        if key == "kappa_values":
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        if typ in ("int", int) or key in ("n_max", "max_iter", "workers", "gs_cutoff",
                                          "min_width_steps"):
            return int(raw)
        if typ in ("bool", bool) or key == "plot_data":
            low = raw.strip().lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if key in ("kind", "direction", "output"):
            return raw.strip()
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"line {line_no}: key {key!r}: {exc}") from exc


def load_config(path: str) -> SweepSpec:
    """Parse a key-value configuration file into a spec.

    Unknown keys are rejected so typos never fall back to silent defaults;
    malformed values report the offending line and key.
    """
    overrides: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw_line in enumerate(fh, start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {line_no}: expected 'key = value', got {raw_line!r}")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise ConfigError(f"line {line_no}: unknown key {key!r}")
            if key in overrides:
                raise ConfigError(f"line {line_no}: duplicate key {key!r}")
            overrides[key] = _parse_value(key, raw.strip(), line_no)
    spec = SweepSpec(**overrides)
    if spec.kind not in _KINDS:
        raise ConfigError(f"kind must be one of {_KINDS}, got {spec.kind!r}")
    if spec.direction not in _DIRECTIONS:
        raise ConfigError(f"direction must be one of {_DIRECTIONS}, got {spec.direction!r}")
    return spec


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(format(v, ".17g") for v in value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def emit_config(spec: SweepSpec, path: str) -> None:
    """Write every resolved key so that ``load_config`` round-trips the spec."""
    lines = [f"{f.name} = {_format_value(getattr(spec, f.name))}" for f in fields(spec)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# rows and tables

@dataclass
class SweepRow:
    """One (grid point x pass) result, including its validity certificate."""

    mu_b: float
    z_tau: float
    kappa: float
    gamma: float
    beta: float
    omega0: float
    n_max: int
    branch_id: int
    direction: str
    converged: bool
    phase: str
    psi: float
    mu: float
    delta_mu: float
    n_ph: float
    j_tls_in: float
    j_tls_out: float
    j_ph_out: float
    gap_10: float
    gap_21: float
    gap_32: float
    sc_residual: float
    iterations: int
    n_roots: int
    residual_norm: float
    spectral_gap: float
    min_eig_rho: float
    top_fock_population: float
    warn_top_fock: bool
    warn_gap: bool
    rho: np.ndarray | None = field(default=None, repr=False, compare=False)

    TABLE_FIELDS = (
        "mu_b", "z_tau", "kappa", "gamma", "beta", "omega0", "n_max",
        "branch_id", "direction", "converged", "phase", "psi", "mu",
        "delta_mu", "n_ph", "j_tls_in", "j_tls_out", "j_ph_out",
        "gap_10", "gap_21", "gap_32", "sc_residual", "iterations", "n_roots",
        "residual_norm", "spectral_gap", "min_eig_rho", "top_fock_population",
        "warn_top_fock", "warn_gap",
    )


@dataclass
class ScanResult:
    """A chemical-potential scan: rows plus per-pass plateau tables."""

    rows: list[SweepRow]
    plateaus: dict[int, list[PlateauRegion]]
    hysteresis: list[float]


@dataclass(frozen=True)
class BoundaryRow:
    z_tau: float
    mu_b_boundary_dissipative: float
    mu_b_boundary_equilibrium: float


@dataclass(frozen=True)
class KappaRow:
    kappa: float
    n_max: int
    mu_b_first_detected: float
    mu_b_first_gs_estimate: float
    mu_b_first_closed_form: float


def _solve_point(
    spec: SweepSpec,
    params: ModelParams,
    warm: MeanField | None,
    branch_id: int,
    direction: str,
) -> SweepRow:
    """Classify one grid point and build its full row."""
    seeds: list[MeanField] = []
    if warm is not None:
        seeds.append(warm)
    seeds.extend(MeanField(psi=p, mu=params.mu_b) for p in SEED_LADDER)
    label, best = classify_point(
        params, seeds, psi_threshold=spec.psi_threshold,
        tol=spec.tol_sc, max_iter=spec.max_iter,
    )

    if label.kind == "coherent" and best is not None:
        mf = best.mf
        converged = True
        iterations = best.iterations
        sc_residual = abs(best.residual)
        n_roots = label.n_roots
    elif label.kind == "incoherent":
        # The symmetric state is independent of the frame frequency; assemble
        # at mu = mu_b and report mu itself as undefined.
        mf = MeanField(psi=0.0, mu=params.mu_b)
        converged = True
        iterations = 0
        sc_residual = 0.0
        n_roots = 0
    else:
        mf = MeanField(psi=0.0, mu=params.mu_b)
        converged = False
        iterations = spec.max_iter
        sc_residual = np.nan
        n_roots = 0

    try:
        asm = assemble(params, mf)
        rho = _solve_rho_lu(asm.total)
        cert = certify(rho, asm.total)
        rec = observable_record(asm, rho, mf)
    except SteadyStateError:
        nan_rec = ObservableRecord(np.nan, np.nan, np.nan, np.nan,
                                   (np.nan, np.nan, np.nan), np.nan)
        return SweepRow(
            mu_b=params.mu_b, z_tau=params.z_tau, kappa=params.kappa,
            gamma=params.gamma, beta=params.beta, omega0=params.omega0,
            n_max=params.cfg.n_max, branch_id=branch_id, direction=direction,
            converged=False, phase="undetermined", psi=np.nan, mu=np.nan,
            delta_mu=np.nan, n_ph=nan_rec.n_ph, j_tls_in=np.nan, j_tls_out=np.nan,
            j_ph_out=np.nan, gap_10=np.nan, gap_21=np.nan, gap_32=np.nan,
            sc_residual=np.nan, iterations=iterations, n_roots=0,
            residual_norm=np.nan, spectral_gap=np.nan, min_eig_rho=np.nan,
            top_fock_population=np.nan, warn_top_fock=True, warn_gap=True, rho=None,
        )

    # A near-degenerate stationary manifold cannot be trusted as "the" steady
    # state; such points count as unconverged for every downstream consumer.
    if cert.warn_gap:
        converged = False

    coherent = label.kind == "coherent"
    return SweepRow(
        mu_b=params.mu_b, z_tau=params.z_tau, kappa=params.kappa,
        gamma=params.gamma, beta=params.beta, omega0=params.omega0,
        n_max=params.cfg.n_max, branch_id=branch_id, direction=direction,
        converged=converged, phase=label.kind,
        psi=mf.psi if converged else np.nan,
        mu=mf.mu if coherent else np.nan,
        delta_mu=rec.delta_mu if coherent else np.nan,
        n_ph=rec.n_ph, j_tls_in=rec.j_tls_in, j_tls_out=rec.j_tls_out,
        j_ph_out=rec.j_ph_out, gap_10=rec.gaps[0], gap_21=rec.gaps[1],
        gap_32=rec.gaps[2], sc_residual=sc_residual, iterations=iterations,
        n_roots=n_roots, residual_norm=cert.residual_norm,
        spectral_gap=cert.spectral_gap, min_eig_rho=cert.min_eig_rho,
        top_fock_population=cert.top_fock_population,
        warn_top_fock=cert.warn_top_fock, warn_gap=cert.warn_gap, rho=rho,
    )


def run_single_point(spec: SweepSpec) -> list[SweepRow]:
    """One parameter point, cold seed ladder."""
    params = spec.model_params()
    return [_solve_point(spec, params, warm=None, branch_id=0, direction="ascending")]


def _mu_b_grid(spec: SweepSpec) -> np.ndarray:
    n = int(round((spec.mu_b_stop - spec.mu_b_start) / spec.mu_b_step)) + 1
    return spec.mu_b_start + spec.mu_b_step * np.arange(n)


def _scan_pass(spec: SweepSpec, branch_id: int, direction: str) -> list[SweepRow]:
    grid = _mu_b_grid(spec)
    order = grid if direction == "ascending" else grid[::-1]
    rows: list[SweepRow] = []
    warm: MeanField | None = None
    for mu_b in order:
        params = spec.model_params(mu_b=float(mu_b))
        row = _solve_point(spec, params, warm=warm, branch_id=branch_id, direction=direction)
        rows.append(row)
        warm = MeanField(psi=row.psi, mu=row.mu) if (
            row.converged and row.phase == "coherent"
        ) else None
    return rows


def run_mu_b_scan(spec: SweepSpec) -> ScanResult:
    """Warm-started scan over the bath chemical potential.

    Each requested direction is one pass (ascending pass is branch 0,
    descending branch 1).  Plateau detection runs on the converged coherent
    rows of each pass separately; chemical potentials where the two passes
    disagree in state mark the hysteresis windows.
    """
    if spec.kind not in ("mub-scan", "kappa-scan"):
        raise ValueError(f"run_mu_b_scan needs a mub-scan spec, got kind={spec.kind!r}")
    passes: list[tuple[int, str]] = []
    if spec.direction in ("ascending", "both"):
        passes.append((0, "ascending"))
    if spec.direction in ("descending", "both"):
        passes.append((1, "descending"))

    all_rows: list[SweepRow] = []
    plateaus: dict[int, list[PlateauRegion]] = {}
    for branch_id, direction in passes:
        rows = _scan_pass(spec, branch_id, direction)
        scan = [
            (r.mu_b, ObservableRecord(r.n_ph, r.j_tls_in, r.j_tls_out, r.j_ph_out,
                                      (r.gap_10, r.gap_21, r.gap_32), r.delta_mu),
             MeanField(psi=r.psi, mu=r.mu))
            for r in sorted(rows, key=lambda r: r.mu_b)
            if r.converged and r.phase == "coherent"
        ]
        plateaus[branch_id] = detect_plateaus(
            scan, tol_mu=spec.tol_mu, tol_nph=spec.tol_nph,
            min_width=spec.min_width_steps * spec.mu_b_step,
        )
        all_rows.extend(rows)

    hysteresis: list[float] = []
    if len(passes) == 2:
        asc = {r.mu_b: r for r in all_rows if r.branch_id == 0}
        for r in all_rows:
            if r.branch_id != 1:
                continue
            partner = asc.get(r.mu_b)
            if partner is None or partner.rho is None or r.rho is None:
                continue
            if trace_distance(partner.rho, r.rho) > 1e-6:
                hysteresis.append(r.mu_b)
    return ScanResult(rows=all_rows, plateaus=plateaus, hysteresis=sorted(hysteresis))


# ---------------------------------------------------------------------------
# phase diagram

def _dissipative_onset(spec: SweepSpec, z_tau: float, lo: float, hi: float,
                       tol: float = 1e-4) -> float:
    """Lowest incoherent-to-coherent transition of the full model in [lo, hi]."""

    def coherent(mu_b: float) -> bool:
        params = spec.model_params(mu_b=mu_b, z_tau=z_tau)
        label, _ = classify_point(params, psi_threshold=spec.psi_threshold,
                                  tol=spec.tol_sc, max_iter=spec.max_iter)
        return label.kind == "coherent"

    grid = np.linspace(lo, hi, 16)
    flags = [coherent(m) for m in grid]
    edge = None
    for i in range(1, len(grid)):
        if flags[i] and not flags[i - 1]:
            edge = (grid[i - 1], grid[i])
            break
    if edge is None:
        return np.nan
    a, b = edge
    while b - a > tol:
        mid = 0.5 * (a + b)
        if coherent(mid):
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def _boundary_for_tau(args) -> BoundaryRow:
    spec, z_tau = args
    lo = spec.mu_b_start
    hi = min(spec.mu_b_stop, spec.omega0 - z_tau - 0.02 * spec.g)
    diss = _dissipative_onset(spec, z_tau, lo, hi)
    eq = equilibrium_boundary(
        spec.model_params(z_tau=z_tau), [z_tau], mu_b_bracket=(lo, hi),
        psi_threshold=spec.psi_threshold,
    )
    eq_val = eq[0][1] if eq else np.nan
    return BoundaryRow(z_tau=z_tau, mu_b_boundary_dissipative=diss,
                       mu_b_boundary_equilibrium=eq_val)


def run_phase_diagram(spec: SweepSpec) -> list[BoundaryRow]:
    """Dissipative and equilibrium onset boundaries over a hopping grid."""
    if spec.kind != "phase-diagram":
        raise ValueError(f"run_phase_diagram needs a phase-diagram spec, got {spec.kind!r}")
    n = int(round((spec.z_tau_stop - spec.z_tau_start) / spec.z_tau_step)) + 1
    taus = spec.z_tau_start + spec.z_tau_step * np.arange(n)
    tasks = [(spec, float(t)) for t in taus]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            return list(pool.map(_boundary_for_tau, tasks))
    return [_boundary_for_tau(t) for t in tasks]


# ---------------------------------------------------------------------------
# loss scan

def kappa_cutoff_schedule(kappa: float, g: float = 1.0) -> int:
    """Photon cutoff used for the loss scan at a given loss rate."""
    ratio = kappa / g
    if ratio >= 0.002:
        return 15
    if ratio >= 0.0008:
        return 25
    return 30


def _kappa_point(args) -> tuple[KappaRow, ScanResult]:
    spec, kappa = args
    n_max = kappa_cutoff_schedule(kappa, spec.g)
    params = spec.model_params(kappa=kappa, n_max=n_max)
    closed = mu_b_first_closed_form(params)
    window = replace(
        spec, kind="mub-scan", kappa=kappa, n_max=n_max,
        mu_b_start=closed - 0.15 * spec.g, mu_b_stop=closed + 0.10 * spec.g,
        direction="both",
    )
    scan = run_mu_b_scan(window)
    ascending = scan.plateaus.get(0) or []
    detected = ascending[0].mu_b_start if ascending else np.nan
    try:
        gs_est = mu_b_first_gs_estimate(params, n_max=spec.gs_cutoff)
    except NoSignChangeError:
        gs_est = np.nan
    row = KappaRow(
        kappa=kappa, n_max=n_max, mu_b_first_detected=detected,
        mu_b_first_gs_estimate=gs_est, mu_b_first_closed_form=closed,
    )
    return row, scan


def run_kappa_scan(spec: SweepSpec) -> list[KappaRow]:
    """First-plateau onset versus cavity loss, with both equilibrium estimates."""
    if spec.kind != "kappa-scan":
        raise ValueError(f"run_kappa_scan needs a kappa-scan spec, got {spec.kind!r}")
    tasks = [(spec, float(k)) for k in spec.kappa_values]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(_kappa_point, tasks))
    else:
        results = [_kappa_point(t) for t in tasks]
    return [row for row, _ in results]


# ---------------------------------------------------------------------------
# emission

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def emit_rows(rows: list[SweepRow], path: str) -> None:
    """Tab-separated table, one row per (grid point x pass), deterministic order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(SweepRow.TABLE_FIELDS) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(getattr(row, name)) for name in SweepRow.TABLE_FIELDS) + "\n")


def emit_plateaus(plateaus: dict[int, list[PlateauRegion]], path: str) -> None:
    cols = ("branch_id", "mu_b_start", "mu_b_end", "plateau_mu", "plateau_n_ph")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(cols) + "\n")
        for branch_id in sorted(plateaus):
            for region in plateaus[branch_id]:
                fh.write("\t".join(_fmt(v) for v in (
                    branch_id, region.mu_b_start, region.mu_b_end,
                    region.plateau_mu, region.plateau_n_ph)) + "\n")


def _emit_table(path: str, header: tuple[str, ...], rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")


def emit_results(result, spec: SweepSpec, base_path: str) -> list[str]:
    """Write every table for one run next to ``base_path``; returns the paths."""
    written: list[str] = []
    if isinstance(result, ScanResult):
        emit_rows(result.rows, base_path + ".rows.tsv")
        written.append(base_path + ".rows.tsv")
        emit_plateaus(result.plateaus, base_path + ".plateaus.tsv")
        written.append(base_path + ".plateaus.tsv")
        if spec.plot_data:
            written.extend(_emit_scan_plot_data(result, base_path))
    elif result and isinstance(result[0], SweepRow):
        emit_rows(result, base_path + ".rows.tsv")
        written.append(base_path + ".rows.tsv")
    elif result and isinstance(result[0], BoundaryRow):
        _emit_table(
            base_path + ".boundary.tsv",
            ("z_tau", "mu_b_boundary_dissipative", "mu_b_boundary_equilibrium"),
            [(r.z_tau, r.mu_b_boundary_dissipative, r.mu_b_boundary_equilibrium)
             for r in result],
        )
        written.append(base_path + ".boundary.tsv")
    elif result and isinstance(result[0], KappaRow):
        _emit_table(
            base_path + ".onsets.tsv",
            ("kappa", "n_max", "mu_b_first_detected", "mu_b_first_gs_estimate",
             "mu_b_first_closed_form"),
            [(r.kappa, r.n_max, r.mu_b_first_detected, r.mu_b_first_gs_estimate,
              r.mu_b_first_closed_form) for r in result],
        )
        written.append(base_path + ".onsets.tsv")
    return written


def _emit_scan_plot_data(result: ScanResult, base_path: str) -> list[str]:
    """Per-figure files: (a) mu and n_ph, (b) currents, (c) gaps vs delta_mu."""
    rows = sorted(
        (r for r in result.rows if r.branch_id == 0 and r.converged),
        key=lambda r: r.mu_b,
    )
    paths = []
    _emit_table(base_path + ".fig_frequency.tsv", ("mu_b", "mu", "n_ph"),
                [(r.mu_b, r.mu, r.n_ph) for r in rows])
    paths.append(base_path + ".fig_frequency.tsv")
    _emit_table(base_path + ".fig_currents.tsv",
                ("mu_b", "j_tls_out", "j_tls_in", "j_ph_out"),
                [(r.mu_b, r.j_tls_out, r.j_tls_in, r.j_ph_out) for r in rows])
    paths.append(base_path + ".fig_currents.tsv")
    _emit_table(base_path + ".fig_gaps.tsv",
                ("mu_b", "delta_mu", "gap_10", "gap_21", "gap_32"),
                [(r.mu_b, r.delta_mu, r.gap_10, r.gap_21, r.gap_32) for r in rows])
    paths.append(base_path + ".fig_gaps.tsv")
    return paths


def write_manifest(spec: SweepSpec, base_path: str, outputs: list[str],
                   defaults_applied: list[str]) -> str:
    """Machine-readable record of every resolved parameter beside the outputs."""
    manifest = {
        "code_version": _code_version,
        "spec": {k: (list(v) if isinstance(v, tuple) else v)
                 for k, v in asdict(spec).items()},
        "defaults_applied": sorted(defaults_applied),
        "outputs": outputs,
        "tolerances": {
            "psi_threshold": spec.psi_threshold,
            "tol_sc": spec.tol_sc,
            "tol_mu": spec.tol_mu,
            "tol_nph": spec.tol_nph,
            "min_width_steps": spec.min_width_steps,
        },
    }
    path = base_path + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
