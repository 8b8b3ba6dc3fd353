"""Command-line interface.

Verbs: ``point``, ``scan-mub``, ``phase-diagram``, ``kappa-scan``,
``selftest``.  Flags override configuration-file keys, which override the
built-in defaults; the resolved values and their provenance are recorded in
the run manifest.  Exit codes: 0 success, 2 partial (unconverged points in
the output), 1 hard failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace

from .selftest import run_selftest
from .sweeps import (
    ConfigError,
    ScanResult,
    SweepSpec,
    emit_results,
    load_config,
    run_kappa_scan,
    run_mu_b_scan,
    run_phase_diagram,
    run_single_point,
    write_manifest,
)

_VERB_KIND = {
    "point": "point",
    "scan-mub": "mub-scan",
    "phase-diagram": "phase-diagram",
    "kappa-scan": "kappa-scan",
}

_FLAG_FIELDS = [f for f in fields(SweepSpec) if f.name not in ("kind",)]


def _add_spec_flags(parser: argparse.ArgumentParser) -> None:
    for f in _FLAG_FIELDS:
        flag = "--" + f.name.replace("_", "-")
        if f.name == "kappa_values":
            parser.add_argument(flag, type=str, default=None,
                                help="comma-separated loss rates")
        elif f.type in ("int", int):
            parser.add_argument(flag, type=int, default=None)
        elif f.type in ("bool", bool):
            parser.add_argument(flag, action="store_true", default=None)
        elif f.type in ("str", str):
            parser.add_argument(flag, type=str, default=None)
        else:
            parser.add_argument(flag, type=float, default=None)


def _resolve_spec(args: argparse.Namespace, kind: str) -> tuple[SweepSpec, list[str]]:
    if args.config:
        spec = load_config(args.config)
    else:
        spec = SweepSpec()
    spec = replace(spec, kind=kind)
    overridden: set[str] = set()
    for f in _FLAG_FIELDS:
        value = getattr(args, f.name, None)
        if value is None:
            continue
        if f.name == "kappa_values":
            value = tuple(float(tok) for tok in value.replace(",", " ").split())
        spec = replace(spec, **{f.name: value})
        overridden.add(f.name)
    defaults = SweepSpec()
    defaults_applied = [
        f.name for f in fields(SweepSpec)
        if f.name not in overridden and getattr(spec, f.name) == getattr(defaults, f.name)
    ]
    return spec, defaults_applied


def _run(spec: SweepSpec):
    if spec.kind == "point":
        return run_single_point(spec)
    if spec.kind == "mub-scan":
        return run_mu_b_scan(spec)
    if spec.kind == "phase-diagram":
        return run_phase_diagram(spec)
    if spec.kind == "kappa-scan":
        return run_kappa_scan(spec)
    raise ValueError(f"unknown kind {spec.kind!r}")


def _has_unconverged(result) -> bool:
    if isinstance(result, ScanResult):
        return any(not r.converged for r in result.rows)
    if isinstance(result, list) and result and hasattr(result[0], "converged"):
        return any(not r.converged for r in result)
    if isinstance(result, list):
        import math

        def bad(row) -> bool:
            return any(
                isinstance(v, float) and math.isnan(v)
                for v in row.__dict__.values()
            )

        return any(bad(r) for r in result)
    return False


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="jchmf",
        description="Steady states of a pumped-dissipative coupled cavity QED array",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in _VERB_KIND:
        p = sub.add_parser(verb)
        p.add_argument("--config", "-c", type=str, default=None,
                       help="key-value configuration file")
        _add_spec_flags(p)
    sub.add_parser("selftest")

    args = parser.parse_args(argv)
    if args.verb == "selftest":
        return 0 if run_selftest(verbose=True) else 1

    try:
        spec, defaults_applied = _resolve_spec(args, _VERB_KIND[args.verb])
        result = _run(spec)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    base = spec.output or f"jchmf_{args.verb.replace('-', '_')}"
    try:
        outputs = emit_results(result, spec, base)
        manifest = write_manifest(spec, base, outputs, defaults_applied)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 1
    for path in outputs + [manifest]:
        print(f"wrote {path}")

    if isinstance(result, ScanResult):
        for branch, regions in sorted(result.plateaus.items()):
            for reg in regions:
                print(
                    f"plateau (branch {branch}): mu_b in [{reg.mu_b_start:.4f}, "
                    f"{reg.mu_b_end:.4f}], mu = {reg.plateau_mu:.6f}, "
                    f"n_ph = {reg.plateau_n_ph:.6f}"
                )
    return 2 if _has_unconverged(result) else 0


if __name__ == "__main__":
    sys.exit(main())
