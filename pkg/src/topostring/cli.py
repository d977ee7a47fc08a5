"""Command-line front end.

Exit codes: 0 success, 1 numeric failure (non-convergence, FAIL verdicts),
2 bad input (unreadable or invalid configuration, bad flags).
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .config import StringConfiguration, constraint_report, embedding, parse_configuration
from .energy import energy_table
from .errors import (
    ConfigurationError,
    DegenerateSpectrumError,
    NonConvergenceError,
    NotNearIntegerError,
    UnsupportedConfigurationError,
)
from .geometry import conformal_factor, density_from_jet
from .integrate import (
    QuadratureResult,
    characteristic_number,
    integrate_euler_boundary,
    integrate_euler_pv,
    integrate_patches,
    patch_family,
)
from .spectra import (
    Branch,
    invert_two_parallel,
    spectrum_four_modes,
    spectrum_general,
    spectrum_surface,
    spectrum_three_modes,
    spectrum_two_parallel,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
ABS_FLOOR = 1e-3


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


@dataclass
class RunReport:
    command: str
    config_digest: str | None = None
    lines: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    exit_code: int = EXIT_OK

    def add(self, line: str) -> None:
        self.lines.append(line)

    def warn(self, message: str) -> None:
        if message not in self.warnings:
            self.warnings.append(message)

    def fail(self) -> None:
        self.exit_code = max(self.exit_code, EXIT_FAIL)

    def render(self) -> str:
        out = [f"# topostring {__version__}", f"# command: {self.command}"]
        if self.config_digest:
            out.append(f"# config sha256: {self.config_digest}")
        out += self.lines
        out += [f"warning: {w}" for w in self.warnings]
        return "\n".join(out) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _load(path: str | None) -> tuple[StringConfiguration, str]:
    if path is None:
        raise InputError("--config PATH is required for this command")
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {p}: {exc.strerror}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise InputError(f"{p} is not UTF-8") from None
    fmt = "yaml" if p.suffix.lower() in (".yaml", ".yml") else "auto"
    try:
        cfg = parse_configuration(text, format=fmt)
    except ConfigurationError as exc:
        raise InputError(f"{p}: {exc}") from None
    return cfg, hashlib.sha256(raw).hexdigest()


def _result_line(r: QuadratureResult) -> str:
    state = "converged" if r.converged else "NOT CONVERGED"
    return f"{r.method.value}: {_fmt(r.value)} +/- {r.error_estimate:.3g} ({state}; {r.singular_report})"


def _record(report: RunReport, r: QuadratureResult) -> None:
    report.add(_result_line(r))
    if "divergence" in r.details:
        report.add(f"  divergence coefficient D = {_fmt(r.details['divergence'])} (finite part reported)")
    if "region_values" in r.details:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in r.details["region_values"].items())
        report.add(f"  per-region values ({r.details['multiplicity']} regions per kind): {vals}")
    for flag in r.flags:
        if not flag.startswith("strip integral diverges"):
            report.warn(f"{r.method.value}: {flag}")
    if not r.converged:
        report.fail()


def _methods(cfg: StringConfiguration, which: str) -> list[tuple[str, Callable[[], QuadratureResult]]]:
    field_ = conformal_factor(cfg)
    table = {
        "pv": lambda: integrate_euler_pv(field_),
        "boundary": lambda: integrate_euler_boundary(field_),
        "patch": lambda: integrate_patches(cfg),
    }
    names = ["pv", "boundary", "patch"] if which == "all" else [which]
    return [(n, table[n]) for n in names]


# --------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> RunReport:
    cfg, digest = _load(args.config)
    report = RunReport("validate", digest)
    cr = constraint_report(cfg, seed=args.seed)
    report.add(f"dimension={cfg.dimension} alpha_prime={_fmt(cfg.alpha_prime)} p_plus={_fmt(cfg.p_plus)} modes={len(cfg.modes)}")
    report.add(f"wave residual (relative, max over {len(cr.samples)} points): {cr.wave_residual_max:.3g}")
    report.add(f"level-match residual: {cr.level_match_residual:.6g} ({'matched' if cr.level_matched else 'unmatched'})")
    for w in cr.warnings:
        report.warn(w)
    if cr.wave_residual_max > 1e-12:
        report.add("wave equation: FAIL")
        report.fail()
    else:
        report.add("wave equation: ok")
    return report


def cmd_embed(args) -> RunReport:
    cfg, digest = _load(args.config)
    report = RunReport("embed", digest)
    n = args.grid
    axis = np.arange(n) * (2.0 * math.pi / n)
    T, S = np.meshgrid(axis, axis, indexing="ij")
    X = embedding(cfg, T, S)
    jet = conformal_factor(cfg).jet(T, S)
    e = density_from_jet(*jet)
    dirs = list(cfg.transverse_directions)
    report.add(f"# alpha_prime={_fmt(cfg.alpha_prime)}; orientation dtau^dsigma; euler density blank where g_ss vanishes")
    report.add(",".join(["tau", "sigma"] + [f"X{I}" for I in dirs] + ["g_ss", "euler_density"]))
    for i in range(n):
        for j in range(n):
            ev = e[i, j]
            cells = [_fmt(T[i, j]), _fmt(S[i, j])] + [_fmt(X[d, i, j]) for d in range(len(dirs))]
            cells += [_fmt(jet[0][i, j]), _fmt(ev) if np.isfinite(ev) and jet[0][i, j] > 1e-12 else ""]
            report.add(",".join(cells))
    return report


def cmd_euler(args) -> RunReport:
    cfg, digest = _load(args.config)
    report = RunReport(f"euler --method {args.method}", digest)
    for w in constraint_report(cfg, seed=args.seed).warnings:
        report.warn(w)
    results = []
    for name, run in _methods(cfg, args.method):
        try:
            r = run()
        except UnsupportedConfigurationError as exc:
            report.add(f"{name}: unsupported ({exc})")
            if args.method != "all":
                report.fail()
            continue
        _record(report, r)
        results.append(r)
    for r in results:
        try:
            cn = characteristic_number(r, args.tolerance)
            report.add(f"{r.method.value}: n = {cn.n} (deviation {cn.deviation:.3g})")
        except (NotNearIntegerError, NonConvergenceError) as exc:
            report.add(f"{r.method.value}: no characteristic number ({exc})")
            report.fail()
        for flag in r.flags:
            if flag.startswith("degenerate") or flag.startswith("single chirality"):
                report.warn(flag)
    return report


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise InputError("missing flags: " + ", ".join("--" + m.replace("_", "-") for m in missing))


def cmd_spectrum(args) -> RunReport:
    report = RunReport(f"spectrum --family {args.family}")
    if args.surface:
        _need(args, "wk", "wl")
        ns = _int_list(args.n_set)
        rs = _float_list(args.r_grid)
        surf = spectrum_surface(args.wk, args.wl, ns, rs)
        report.lines.extend(surf.to_csv().rstrip("\n").split("\n"))
        return report
    if args.invert is not None:
        _need(args, "wk", "wl", "r")
        branches = list(Branch) if args.branch == "both" else [Branch(args.branch)]
        for br in branches:
            rt = invert_two_parallel(args.wk, args.wl, args.r, args.invert, br)
            report.add(f"invert n={args.invert} branch={br.value}: r_tilde_l = {rt:.17g}")
        return report
    fam = args.family
    if fam == "general":
        cfg, digest = _load(args.config)
        report.config_digest = digest
        rel = spectrum_general(cfg)
        report.add(f"general spectrum: {_fmt(rel.lhs_value)} (nearest n = {rel.nearest_n}) [conjectured]")
        report.warn("general spectrum is conjectured")
        if rel.lhs_value == 0.0:
            report.add("note: no interaction between right and left movers; no discretization appears")
        return report
    if fam == "two-parallel":
        _need(args, "wk", "wl", "r", "rt")
        value = spectrum_two_parallel(args.wk, args.wl, args.r, args.rt)
    elif fam == "three-modes":
        _need(args, "wk", "wl", "r", "rt", "r2")
        value = spectrum_three_modes(args.wk, args.wl, args.r, args.rt, args.r2)
    else:
        _need(args, "wk", "wl", "r", "rt", "r2", "rt2")
        value = spectrum_four_modes(args.wk, args.wl, args.r, args.rt, args.r2, args.rt2)
    report.add(f"{fam} spectrum: {value:.17g} (nearest n = {int(round(value))})")
    return report


def cmd_energy(args) -> RunReport:
    report = RunReport("energy")
    ns = range(args.n_min, args.n_max + 1)
    branches = list(Branch) if args.branch == "both" else [Branch(args.branch)]
    for i, br in enumerate(branches):
        table = energy_table(args.wk, args.wl, args.rk, args.H0, ns, br)
        if i == 0:
            report.lines.extend(table.header())
            report.add("n,H_n,branch" if not args.gnuplot_friendly else "# n H_n branch")
        rows = table.csv_rows()
        if args.gnuplot_friendly:
            rows = [r.replace(",", " ") for r in rows if "undefined" not in r]
            rows.append("")
            rows.append("")
        report.lines.extend(rows)
    return report


def cmd_crosscheck(args) -> RunReport:
    cfg, digest = _load(args.config)
    report = RunReport(f"crosscheck --rel-tol {args.rel_tol:g}", digest)
    for w in constraint_report(cfg, seed=args.seed).warnings:
        report.warn(w)
    closed, tag = _closed_form(cfg)
    if closed is None:
        report.add(f"closed form: unavailable ({tag}); numeric-only report")
    else:
        report.add(f"closed form ({tag}): {_fmt(closed)}")
        if "conjectured" in tag:
            report.warn("comparison against the conjectured general spectrum")
    for name, run in _methods(cfg, "all"):
        try:
            r = run()
        except UnsupportedConfigurationError as exc:
            report.add(f"{name}: unsupported ({exc})")
            continue
        _record(report, r)
        if closed is None:
            continue
        dev = abs(r.value - closed)
        rel = dev / abs(closed) if closed else math.inf if dev else 0.0
        verdict = "PASS" if dev <= max(args.rel_tol * abs(closed), ABS_FLOOR) else "FAIL"
        report.add(f"  {r.method.value} vs closed form: |diff| = {dev:.6g}, relative = {rel:.6g} -> {verdict}")
        if verdict == "FAIL":
            report.fail()
    return report


def _closed_form(cfg: StringConfiguration) -> tuple[float | None, str]:
    try:
        fam = patch_family(cfg)
    except UnsupportedConfigurationError:
        fam = None
    try:
        if fam is not None and fam.family == "parallel":
            return spectrum_two_parallel(fam.k, fam.l, fam.r, fam.r_tilde), "two-parallel"
        if fam is not None and fam.family == "perpendicular":
            return 0.0, "perpendicular modes: vanishing integral"
        return spectrum_general(cfg).lhs_value, "general, conjectured"
    except DegenerateSpectrumError as exc:
        return None, str(exc)


# --------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list[int]:
    out = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        if ":" in part:
            lo, hi = part.split(":")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=d, help="configuration file (JSON or YAML)")
    parser.add_argument("--out", metavar="PATH", default=d, help="write the report here instead of stdout")
    parser.add_argument("--rel-tol", type=float, default=d if suppress else 0.01, help="crosscheck tolerance (default 1%%)")
    parser.add_argument("--seed", type=int, default=d if suppress else 0, help="seed for randomized sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topostring", description="Euler-class spectra of closed bosonic strings")
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "parse and check a configuration")
    p = add("embed", cmd_embed, "CSV grid of the embedding, g_ss and the Euler density")
    p.add_argument("--grid", type=int, default=64)
    p = add("euler", cmd_euler, "integrate the Euler form")
    p.add_argument("--method", choices=["pv", "boundary", "patch", "all"], default="all")
    p.add_argument("--tolerance", type=float, default=0.05)
    p = add("spectrum", cmd_spectrum, "closed-form spectra, inversion and surfaces")
    p.add_argument("--family", choices=["two-parallel", "three-modes", "four-modes", "general"], default="two-parallel")
    for flag in ("--wk", "--wl", "--r", "--rt", "--r2", "--rt2"):
        p.add_argument(flag, type=float)
    p.add_argument("--invert", type=int, metavar="N")
    p.add_argument("--branch", choices=["greater", "smaller", "both"], default="greater")
    p.add_argument("--surface", action="store_true")
    p.add_argument("--n-set", default="1:8")
    p.add_argument("--r-grid", default="0.5,1,1.5,2")
    p = add("energy", cmd_energy, "discrete energy table as CSV")
    p.add_argument("--wk", type=float, default=1.0)
    p.add_argument("--wl", type=float, default=1.0)
    p.add_argument("--rk", type=float, default=1.0)
    p.add_argument("--H0", type=float, default=1.0)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--branch", choices=["greater", "smaller", "both"], default="greater")
    p.add_argument("--gnuplot-friendly", action="store_true")
    add("crosscheck", cmd_crosscheck, "numeric integrals against the closed forms")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        report = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (DegenerateSpectrumError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NonConvergenceError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = report.render()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
