"""Command-line front end.

    sesquiop eval-kernel      --spec item2.json
    sesquiop verify-relation  --spec item2.json
    sesquiop verify-discrete  --spec item2.json --n 128 --dump
    sesquiop spectrum         --spec remark.json --n 256 --count 5
    sesquiop sweep            --spec item2.json --run verify-relation --param mu --values 0.5,1,2
    sesquiop report           --out results/

Exit codes: 0 all gated checks pass, 2 spec parse error, 3 spec validation
error, 4 a gated check failed, 5 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import verification as V
from .discretization import MAX_NODES, build_grid, build_K, build_L, export_operator
from .kernels import (
    KernelSpec,
    SpecError,
    SpecParseError,
    load_spec,
    make_coefficients,
    make_kernel,
    spec_to_dict,
    validate_spec,
)
from .spectral import check_LstarL_invariance

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_CHECK = 4
EXIT_IO = 5

TOL_SPECTRAL = 1e-4
DECAY_SLACK = 1.05
# relative commutator residuals below this are at the double-precision floor
DISCRETE_FLOOR = 1e-13
DERIVED_FACTOR = 10.0

COMMANDS = ("eval-kernel", "verify-relation", "verify-discrete", "spectrum", "sweep", "report")


@dataclass(frozen=True)
class RunConfig:
    command: str
    spec_path: str | None = None
    n: int = 128
    samples: int = 200
    count: int = 10
    out_dir: str = "."
    format: str = "csv"
    jobs: int = 1
    dump: bool = False
    tolerance_scale: float = 1.0
    sweep_command: str | None = None
    sweep_param: str | None = None
    sweep_values: tuple = ()


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def fmt(x):
    """Round-trip float formatting for CSV output."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return "" if x is None else str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def sig3(x):
    if isinstance(x, bool):
        return "pass" if x else "FAIL"
    if isinstance(x, (int, float, np.floating)):
        return f"{float(x):.3g}"
    return str(x)


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def json_text(doc):
    return json.dumps(V._plain(doc), indent=2, sort_keys=True) + "\n"


CHECK_COLUMNS = ["name", "n", "residual", "tolerance", "pass"]


def checks_markdown(title, checks):
    lines = [f"# {title}", "", "| check | n | residual | tolerance | result |", "|---|---|---|---|---|"]
    for c in checks:
        lines.append(f"| {c['name']} | {c['n']} | {sig3(c['residual'])} | {sig3(c['tolerance'])} | {sig3(c['pass'])} |")
    return "\n".join(lines) + "\n"


def write_checks(out: Path, stem: str, checks, fmt_name: str, extra=None):
    doc = {"checks": checks}
    if extra:
        doc.update(extra)
    atomic_write(out / f"{stem}.json", json_text(doc))
    if fmt_name == "csv":
        atomic_write(out / f"{stem}.csv", csv_text(checks, CHECK_COLUMNS))
    elif fmt_name == "md":
        atomic_write(out / f"{stem}.md", checks_markdown(stem, checks))


def _gate(checks):
    return EXIT_OK if all(c["pass"] for c in checks) else EXIT_CHECK


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_eval_kernel(cfg: RunConfig, vspec, out: Path):
    kfn = make_kernel(vspec)
    coef = make_coefficients(vspec)
    m = cfg.samples
    z = np.linspace(-2.0, 2.0, m)
    kj = kfn.jet(z, 2)
    y = np.linspace(-1.0, 1.0, m)
    bj, cj = coef.jets(y, 2)
    krows = [{"z": z[i], "k_re": kj.deriv(0)[i].real, "k_im": kj.deriv(0)[i].imag,
              "kp_re": kj.deriv(1)[i].real, "kp_im": kj.deriv(1)[i].imag,
              "kpp_re": kj.deriv(2)[i].real, "kpp_im": kj.deriv(2)[i].imag} for i in range(m)]
    crows = [{"y": y[i], "b_re": bj.deriv(0)[i].real, "b_im": bj.deriv(0)[i].imag,
              "bp_re": bj.deriv(1)[i].real, "bp_im": bj.deriv(1)[i].imag,
              "c_re": cj.deriv(0)[i].real, "c_im": cj.deriv(0)[i].imag} for i in range(m)]
    kcols = ["z", "k_re", "k_im", "kp_re", "kp_im", "kpp_re", "kpp_im"]
    ccols = ["y", "b_re", "b_im", "bp_re", "bp_im", "c_re", "c_im"]
    atomic_write(out / "kernel.json", json_text({"spec": spec_to_dict(vspec), "kernel": krows, "coefficients": crows}))
    if cfg.format == "csv":
        atomic_write(out / "kernel.csv", csv_text(krows, kcols))
        atomic_write(out / "coefficients.csv", csv_text(crows, ccols))
    elif cfg.format == "md":
        lines = ["# kernel", "", "| z | Re k | Im k |", "|---|---|---|"]
        lines += [f"| {sig3(r['z'])} | {sig3(r['k_re'])} | {sig3(r['k_im'])} |" for r in krows]
        atomic_write(out / "kernel.md", "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_verify_relation(cfg: RunConfig, vspec, out: Path):
    s = cfg.tolerance_scale
    reports = [
        V.functional_residual_R(vspec, m=cfg.samples, tolerance=V.TOL_FUNCTIONAL * s),
        V.taylor_residual(vspec, n_max=8, y_samples=20, tolerance=V.TOL_TAYLOR * s),
    ]
    checks = [r.to_dict() for r in reports]
    write_checks(out, "verify_relation", checks, cfg.format, {"spec": spec_to_dict(vspec)})
    return _gate(checks)


def discrete_checks(vspec, n: int, tolerance_scale: float = 1.0):
    """Sesquicommutator and derived identities at n and 2n, with gates."""
    tol = V.TOL_DISCRETE * tolerance_scale
    checks = []
    sizes = [n] + ([2 * n] if 2 * n <= MAX_NODES else [])
    sesq = {}
    for m in sizes:
        g = build_grid(m)
        rep = V.sesquicommutator_residual(vspec, g, tolerance=tol, refine=False)
        sesq[m] = rep.residual
        checks.append(rep.to_dict())
        for d in V.derived_identities_residual(vspec, g, tolerance=tol):
            dd = d.to_dict()
            ratio_ok = d.residual <= max(DERIVED_FACTOR * rep.residual, DISCRETE_FLOOR)
            dd["details"]["ratio_to_sesquicommutator"] = d.residual / rep.residual if rep.residual else None
            dd["pass"] = bool(dd["pass"] and ratio_ok)
            checks.append(dd)
    if len(sizes) == 2:
        r1, r2 = sesq[n], sesq[2 * n]
        checks.append({
            "name": "sesquicommutator_decay",
            "n": 2 * n,
            "residual": r2,
            "tolerance": max(DECAY_SLACK * r1, DISCRETE_FLOOR),
            "pass": bool(r2 <= max(DECAY_SLACK * r1, DISCRETE_FLOOR)),
            "details": {"residual_n": r1, "ratio": r2 / r1 if r1 else None},
        })
    return checks


def cmd_verify_discrete(cfg: RunConfig, vspec, out: Path):
    checks = discrete_checks(vspec, cfg.n, cfg.tolerance_scale)
    write_checks(out, "verify_discrete", checks, cfg.format, {"spec": spec_to_dict(vspec)})
    if cfg.dump:
        g = build_grid(cfg.n)
        export_operator(build_K(vspec, g), out / f"K_n{cfg.n}")
        export_operator(build_L(vspec, g), out / f"L_n{cfg.n}")
    return _gate(checks)


SPECTRUM_COLUMNS = ["lambda", "gap", "llstar_residual", "sigma_re", "sigma_im", "sigma_residual", "simple"]


def cmd_spectrum(cfg: RunConfig, vspec, out: Path):
    g = build_grid(cfg.n)
    rep = check_LstarL_invariance(vspec, g, cfg.count)
    tol = TOL_SPECTRAL * cfg.tolerance_scale
    checks = []
    for p in rep.per_pair:
        checks.append({"name": f"llstar_{p.index}", "n": g.n, "residual": p.llstar_residual,
                       "tolerance": tol, "pass": bool(p.llstar_residual <= tol), "details": {"simple": p.simple}})
        if p.simple:
            checks.append({"name": f"sigma_{p.index}", "n": g.n, "residual": p.sigma_residual,
                           "tolerance": tol, "pass": bool(p.sigma_residual <= tol),
                           "details": {"sigma": p.sigma, "sigma_abs": abs(p.sigma)}})
    doc = {"spec": spec_to_dict(vspec), "checks": checks, "spectrum": rep.to_dict()}
    atomic_write(out / "spectrum.json", json_text(doc))
    if cfg.format == "csv":
        atomic_write(out / "spectrum.csv", csv_text(rep.rows(), SPECTRUM_COLUMNS))
    elif cfg.format == "md":
        atomic_write(out / "spectrum.md", checks_markdown("spectrum", checks))
    if cfg.dump:
        export_operator(build_K(vspec, g), out / f"K_n{g.n}")
        export_operator(build_L(vspec, g), out / f"L_n{g.n}")
    return _gate(checks)


_HANDLERS = {
    "eval-kernel": cmd_eval_kernel,
    "verify-relation": cmd_verify_relation,
    "verify-discrete": cmd_verify_discrete,
    "spectrum": cmd_spectrum,
}


def _parse_value(text: str):
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        return complex(text.replace("i", "j"))


def _sweep_point(args):
    cfg, spec_dict, label = args
    from .kernels import spec_from_dict

    try:
        spec = spec_from_dict(spec_dict)
        vspec = validate_spec(spec)
    except SpecParseError:
        return label, EXIT_PARSE
    except SpecError:
        return label, EXIT_VALIDATION
    out = Path(cfg.out_dir) / label
    try:
        return label, _HANDLERS[cfg.sweep_command](replace(cfg, command=cfg.sweep_command), vspec, out)
    except OSError:
        return label, EXIT_IO


def cmd_sweep(cfg: RunConfig, spec: KernelSpec, out: Path):
    if cfg.sweep_command not in _HANDLERS:
        raise SystemExit(f"sweep needs --run one of {sorted(_HANDLERS)}")
    base = spec_to_dict(spec)
    points = []
    for raw in cfg.sweep_values:
        d = dict(base)
        val = _parse_value(raw)
        name = cfg.sweep_param
        if name == "tau_im" or name in ("gamma", "alpha", "scale"):
            d[name] = float(np.real(val))
        elif name in ("mu", "mu1", "mu2", "c0", "special_coeff"):
            val = complex(val)
            d[name] = [val.real, val.imag]
        elif name == "n":
            pass
        else:
            raise SystemExit(f"cannot sweep parameter {name!r}")
        pcfg = replace(cfg, n=int(float(raw))) if name == "n" else cfg
        points.append((pcfg, d, f"{name}={raw}"))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_sweep_point, points))
    else:
        results = [_sweep_point(p) for p in points]
    rows = [{"point": label, "exit_code": code} for label, code in results]
    atomic_write(out / "sweep.csv", csv_text(rows, ["point", "exit_code"]))
    atomic_write(out / "sweep.json", json_text({"command": cfg.sweep_command, "points": rows}))
    codes = [c for _, c in results]
    return max(codes) if codes else EXIT_OK


def cmd_report(cfg: RunConfig, out: Path):
    files = sorted(p for p in out.rglob("*.json") if p.name != "sweep.json")
    sections = []
    all_pass = True
    for f in files:
        try:
            doc = json.loads(f.read_text())
        except (json.JSONDecodeError, UnicodeDecodeError):
            continue
        checks = doc.get("checks") if isinstance(doc, dict) else None
        if not checks:
            continue
        all_pass &= all(c.get("pass", False) for c in checks)
        sections.append(checks_markdown(str(f.relative_to(out)), checks))
    summary = "**overall: %s**\n\n" % ("pass" if all_pass else "FAIL")
    atomic_write(out / "summary.md", "# sesquiop report\n\n" + summary + "\n".join(sections))
    return EXIT_OK if all_pass else EXIT_CHECK


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def run(cfg: RunConfig) -> int:
    out = Path(os.environ.get("SESQUIOP_OUT") or cfg.out_dir)
    cfg = replace(cfg, out_dir=str(out))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        print(f"error: cannot create {out}: {e}", file=sys.stderr)
        return EXIT_IO
    if cfg.command == "report":
        try:
            return cmd_report(cfg, out)
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_IO
    try:
        spec = load_spec(cfg.spec_path)
    except SpecParseError as e:
        print(f"error: bad spec: {e}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as e:
        print(f"error: cannot read spec: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        vspec = validate_spec(spec)
    except SpecError as e:
        print(f"error: invalid spec: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if cfg.command == "sweep":
            return cmd_sweep(cfg, spec, out)
        return _HANDLERS[cfg.command](cfg, vspec, out)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


def build_parser():
    p = argparse.ArgumentParser(prog="sesquiop", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name != "report":
            sp.add_argument("--spec", required=True, help="kernel spec JSON")
        sp.add_argument("--n", type=int, default=128, help="grid size")
        sp.add_argument("--samples", type=int, default=200, help="samples per axis")
        sp.add_argument("--count", type=int, default=10, help="eigenpairs")
        sp.add_argument("--out", default=".", help="output directory (SESQUIOP_OUT overrides)")
        sp.add_argument("--format", choices=("csv", "json", "md"), default="csv")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--dump", action="store_true", help="export operator matrices")
        sp.add_argument("--tolerance-scale", type=float, default=1.0)
        if name == "sweep":
            sp.add_argument("--run", dest="sweep_command", required=True, choices=sorted(_HANDLERS))
            sp.add_argument("--param", required=True, help="spec field (or 'n') to vary")
            sp.add_argument("--values", required=True, help="comma-separated values")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        spec_path=getattr(args, "spec", None),
        n=args.n,
        samples=args.samples,
        count=args.count,
        out_dir=args.out,
        format=args.format,
        jobs=args.jobs,
        dump=args.dump,
        tolerance_scale=args.tolerance_scale,
        sweep_command=getattr(args, "sweep_command", None),
        sweep_param=getattr(args, "param", None),
        sweep_values=tuple(v for v in getattr(args, "values", "").split(",") if v) if args.command == "sweep" else (),
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
