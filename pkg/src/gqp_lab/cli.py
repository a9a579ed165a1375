"""``gqp-lab`` command line: analyze, spectrum, sweep, surfaces.

Exit codes: 0 ok, 1 bad input, 2 indeterminate or non-converged result,
3 invariant violation.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .config import EMIT_CHOICES, RunConfig, load_config, parse_emit, parse_grid
from .errors import GqpError, InvalidInputError, InvariantViolation
from .report import (SCHEMA_ID, SCHEMA_VERSION, atomic_write, csv_text, dumps, gnuplot_blocks,
                     spectrum_tables, timestamp, write_report)
from .spectral import (POTENTIALS, SpectralProblem, arclength_domain, count_bound_states,
                       liouville_check, variational_bound)
from .surfaces import DEFAULT_PARAMS, PAPER_STATE_BOUND, make_chart, surface_parameters
from .topology import GridSample, analyze_topology
from .tridiag import BACKEND

CSV_COLUMNS = ("u", "v", "sqrt_g", "K", "H", "V_dacosta", "grad_n_sq", "div_n_sq")
MAX_PLOT_LINES = 128
SWEEP_COLUMNS = ("index", "value", "status", "signed_degree", "signed_degree_value",
                 "absolute_degree", "absolute_degree_rounded", "total_curvature",
                 "dirichlet_energy", "willmore_energy", "N_paper", "N_sigma_lower", "N_dacosta",
                 "message")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInputError(message)


def _positive_int(text):
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None


def _range(text):
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, allow_abbrev=False)
    g = common.add_argument_group("surface")
    g.add_argument("--surface", choices=sorted(DEFAULT_PARAMS))
    for name, text in (("a", "sphere radius"), ("c", "catenoid throat radius"),
                       ("R", "torus centre-line radius"), ("r", "torus tube radius"),
                       ("Rb", "bilayer neck waist radius"), ("h", "bilayer half-separation")):
        g.add_argument(f"--{name}", type=float, help=text)
    g = common.add_argument_group("numerics")
    g.add_argument("--T", type=float,
                   help="meridian half-width: chart coordinate (analyze, sweep) or arclength "
                        "(spectrum); default 20 x surface scale")
    g.add_argument("--grid", type=parse_grid, metavar="NxM", help="quadrature grid, e.g. 512x512")
    g.add_argument("--lmax", type=_positive_int, help="angular-momentum cutoff")
    g.add_argument("--N", type=_positive_int, help="meridian grid intervals")
    g.add_argument("--n-eigs", dest="n_eigs", type=_positive_int, help="eigenvalues tabulated per channel")
    g.add_argument("--potential", choices=POTENTIALS)
    g.add_argument("--hbar", type=float)
    g.add_argument("--mass", type=float)
    g = common.add_argument_group("run")
    g.add_argument("--config", help="TOML file with the same keys as the flags; flags win")
    g.add_argument("--out", help="output directory")
    g.add_argument("--emit", type=parse_emit, help=f"comma list from {','.join(EMIT_CHOICES)}")
    g.add_argument("--workers", type=_positive_int, help="threads; results do not depend on it")

    parser = _Parser(prog="gqp-lab", allow_abbrev=False,
                     description="Geometric quantum potential, normal-field invariants and "
                                 "bound states on surfaces of revolution.")
    parser.add_argument("--version", action="version", version=f"gqp-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("analyze", parents=[common], allow_abbrev=False,
                   help="integrated invariants and state-count estimators")
    sub.add_parser("spectrum", parents=[common], allow_abbrev=False,
                   help="bound states of the surface Hamiltonian")
    sp = sub.add_parser("sweep", parents=[common], allow_abbrev=False,
                        help="invariants against one surface parameter")
    sp.add_argument("--param", help="surface parameter to vary")
    sp.add_argument("--range", type=_range, metavar="LO,HI")
    sp.add_argument("--steps", type=_positive_int)
    sub.add_parser("surfaces", allow_abbrev=False, help="list built-in surfaces")
    return parser


_CONFIG_KEYS = ("surface", "a", "c", "R", "r", "Rb", "h", "T", "grid", "lmax", "N", "n_eigs",
                "potential", "hbar", "mass", "out", "emit", "workers", "param", "range", "steps")


def config_from_args(args) -> RunConfig:
    given = {k: getattr(args, k) for k in _CONFIG_KEYS if getattr(args, k, None) is not None}
    base = load_config(args.config) if getattr(args, "config", None) else None
    if base is None:
        return RunConfig(**given)
    # a surface switch drops parameters that belong to the old one
    data = base.to_dict()
    if "surface" in given and given["surface"] != base.surface:
        for p in surface_parameters(base.surface):
            data.pop(p, None)
    data.update(given)
    return RunConfig.from_dict(data)


# ---------------------------------------------------------------------------
# report pieces

def _base_report(cfg: RunConfig, command: str) -> dict:
    return {
        "schema": SCHEMA_ID,
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "gqp-lab", "version": __version__, "kernel_backend": BACKEND},
        "command": command,
        "generated_at": timestamp(),
        "config": cfg.to_dict(execution=False),
        "units": cfg.units.describe(),
        "truncation_T": None,
        "field_summary": None,
        "topology": None,
        "spectrum": None,
        "sweep": None,
        "checks": [],
        "paper_comparison": [],
        "status": {"exit_code": 0, "message": "ok"},
        "outputs": [],
    }


def _comparison(quantity, paper_value, relation, computed, note="", tol=1e-6):
    if computed is None:
        status = "undetermined"
    elif relation == ">=":
        status = "agree" if computed >= paper_value - tol else "disagree"
    else:
        status = "agree" if abs(computed - paper_value) <= tol else "disagree"
    return {"quantity": quantity, "paper_value": paper_value, "relation": relation,
            "computed": computed, "status": status, "note": note}


def analysis_comparisons(kind: str, topo) -> list:
    out = []
    bound = PAPER_STATE_BOUND.get(kind)
    if kind in ("catenoid", "bilayer-neck"):
        out.append(_comparison("abs_signed_degree", 1, "==",
                               abs(topo.signed_degree) if topo.degree_clean else None,
                               "truncated total curvature / 4 pi, rounded"))
        for q in ("N_sigma_lower", "N_dacosta", "N_paper"):
            out.append(_comparison(q, bound, ">=", getattr(topo, q), "semiclassical estimator"))
    elif kind == "torus":
        out.append(_comparison("absolute_degree", 2, "==",
                               topo.absolute_degree_rounded if topo.degree_clean else None,
                               "normals sweep the sphere twice"))
        out.append(_comparison("N_paper", bound, ">=", topo.N_paper, "semiclassical estimator"))
    return out


def field_table(chart, grid, units, max_lines: int = MAX_PLOT_LINES):
    """Pointwise fields on a strided subset of the quadrature nodes, one block per u-line."""
    su = max(1, math.ceil(grid.u_nodes.size / max_lines))
    sv = max(1, math.ceil(grid.v_nodes.size / max_lines))
    u, v = grid.u_nodes[::su], grid.v_nodes[::sv]
    g = GridSample(chart, u, v, units)
    cols = (g.u, g.v, g.cv.sqrt_g, g.cv.K, g.cv.H, g.sd.V_dacosta, g.sd.grad_n_sq, g.sd.div_n_sq)
    return [[tuple(float(c[i, j]) for c in cols) for j in range(v.size)] for i in range(u.size)]


def _emit_fields(cfg, chart, grid, out_dir: Path) -> list:
    written = []
    if "csv" not in cfg.emit and "plot-data" not in cfg.emit:
        return written
    blocks = field_table(chart, grid, cfg.units)
    if "csv" in cfg.emit:
        atomic_write(out_dir / "fields.csv", csv_text(CSV_COLUMNS, [r for b in blocks for r in b]))
        written.append("fields.csv")
    if "plot-data" in cfg.emit:
        atomic_write(out_dir / "fields.dat", gnuplot_blocks(CSV_COLUMNS, blocks))
        written.append("fields.dat")
    return written


def _finish(report: dict, out_dir: Path, code: int, message: str) -> int:
    report["status"] = {"exit_code": code, "message": message}
    report["outputs"] = sorted(set(report["outputs"]) | {"report.json"})
    write_report(out_dir / "report.json", report)
    return code


# ---------------------------------------------------------------------------
# commands

def cmd_analyze(cfg: RunConfig) -> tuple[dict, int]:
    chart = cfg.chart()
    T = cfg.truncation(chart)
    side = {}
    topo = analyze_topology(chart, cfg.grid, T, cfg.units, cfg.workers, integrals_out=side)
    out_dir = Path(cfg.out)
    report = _base_report(cfg, "analyze")
    report["truncation_T"] = T
    report["field_summary"] = topo.field_ranges
    report["topology"] = topo.as_dict()
    report["checks"] = [
        {"name": "degree_rounding", "ok": bool(topo.degree_clean),
         "detail": {"signed_residual": topo.signed_degree_residual,
                    "absolute_residual": topo.absolute_degree_residual}},
        {"name": "bogomolnyi", "ok": bool(topo.bogomolnyi_margin_strict >= 0.0),
         "detail": {"margin_strict": topo.bogomolnyi_margin_strict,
                    "margin_paper": topo.bogomolnyi_margin_paper}},
    ]
    if topo.gauss_bonnet_residual is not None:
        report["checks"].append({"name": "gauss_bonnet", "ok": True,
                                 "detail": {"residual": topo.gauss_bonnet_residual}})
    report["paper_comparison"] = analysis_comparisons(chart.kind, topo)
    report["outputs"] = _emit_fields(cfg, chart, side["grid"], out_dir)
    if not topo.degree_clean:
        return report, _finish(report, out_dir, 2,
                               "degree not within 1e-3 of an integer: increase T or the grid")
    return report, _finish(report, out_dir, 0, "ok")


def _closed_form_check(chart, result, units):
    """Sphere without potential: E = l(l+1) hbar^2/2m a^2 in every channel."""
    a = chart.params["a"]
    worst = 0.0
    for ell, vals in result.eigenvalues.items():
        exact = units.kinetic * np.array([(ell + n) * (ell + n + 1) for n in range(len(vals))]) / a ** 2
        nz = exact > 0
        if np.any(nz):
            worst = max(worst, float(np.max(np.abs(vals[nz] - exact[nz]) / exact[nz])))
    return {"name": "closed_form_spectrum", "ok": worst < 1e-3, "detail": {"max_relative_error": worst}}


def cmd_spectrum(cfg: RunConfig) -> tuple[dict, int]:
    chart = cfg.chart()
    T = cfg.truncation(chart)
    problem = SpectralProblem(chart, cfg.units, cfg.potential, cfg.lmax, T, cfg.N)
    result = count_bound_states(problem, cfg.n_eigs, cfg.workers)
    out_dir = Path(cfg.out)
    report = _base_report(cfg, "spectrum")
    report["truncation_T"] = T
    report["spectrum"] = result.as_dict()

    lc = liouville_check(problem, ells=(0, 1, 2), k=4, N=min(cfg.N, 1024))
    worst = max(max(np.array(c["difference"]) / np.array(c["tolerance"])) for c in lc["channels"])
    report["checks"].append({"name": "liouville_vs_weighted", "ok": lc["ok"],
                             "detail": {"worst_difference_over_tolerance": float(worst)}})
    s_lo, s_hi, periodic = arclength_domain(chart)
    if not periodic and math.isinf(s_lo) and math.isinf(s_hi) and cfg.potential != "none":
        # the boxed trial state bounds the truncated problem that was solved; the
        # whole-line one certifies a negative ground energy of the untruncated surface
        rq_box, sigma_box = variational_bound(chart, cfg.units, cfg.potential, T=T)
        rq, sigma = variational_bound(chart, cfg.units, cfg.potential)
        slack = 10.0 * result.ground_energy_error + 1e-9 * max(1.0, abs(rq_box))
        report["checks"].append({"name": "variational_upper_bound",
                                 "ok": result.ground_energy <= rq_box + slack,
                                 "detail": {"boxed_gaussian_energy": rq_box,
                                            "boxed_gaussian_sigma": sigma_box,
                                            "gaussian_energy": rq, "gaussian_sigma": sigma,
                                            "ground_energy": result.ground_energy,
                                            "certifies_negative_ground": rq < 0}})
    if chart.kind == "sphere" and cfg.potential in ("none", "dacosta"):
        report["checks"].append(_closed_form_check(chart, result, cfg.units))
    report["checks"].append({"name": "bound_count_converged", "ok": result.converged,
                             "detail": {"levels": [lv.bound_count for lv in result.levels]}})
    bound = PAPER_STATE_BOUND.get(chart.kind)
    if bound is not None:
        report["paper_comparison"].append(_comparison(
            "bound_count", bound, ">=", result.bound_count,
            "eigenstates below the continuum edge vs the semiclassical lower bound; not a pass condition"))

    if "csv" in cfg.emit:
        for ell, text in spectrum_tables(result).items():
            atomic_write(out_dir / f"spectrum_l{ell}.csv", text)
            report["outputs"].append(f"spectrum_l{ell}.csv")
    if "plot-data" in cfg.emit:
        blocks = [[(ell, i, float(e)) for i, e in enumerate(vals)] for ell, vals in result.eigenvalues.items()]
        atomic_write(out_dir / "spectrum.dat", gnuplot_blocks(("l", "n", "energy"), blocks))
        report["outputs"].append("spectrum.dat")

    failed = [c["name"] for c in report["checks"] if not c["ok"] and c["name"] != "bound_count_converged"]
    if failed:
        _finish(report, out_dir, 3, f"invariant check(s) failed: {', '.join(failed)}")
        raise InvariantViolation(f"invariant check(s) failed: {', '.join(failed)}")
    if not result.converged:
        lo, hi = result.bound_count_range
        return report, _finish(report, out_dir, 2,
                               f"bound count not converged: range [{lo}, {hi}] across refinement levels")
    return report, _finish(report, out_dir, 0, "ok")


def _sweep_row(cfg: RunConfig, index: int, value: float) -> dict:
    row = {k: None for k in SWEEP_COLUMNS}
    row.update(index=index, value=value)
    try:
        chart = cfg.chart(**{cfg.param: value})
        topo = analyze_topology(chart, cfg.grid, cfg.truncation(chart), cfg.units, 1)
    except GqpError as exc:
        row.update(status="rejected", message=str(exc))
        return row
    row.update(status="ok" if topo.degree_clean else "indeterminate", message="",
               signed_degree=topo.signed_degree, signed_degree_value=topo.signed_degree_value,
               absolute_degree=topo.absolute_degree,
               absolute_degree_rounded=topo.absolute_degree_rounded,
               total_curvature=topo.total_curvature, dirichlet_energy=topo.dirichlet_energy,
               willmore_energy=topo.willmore_energy, N_paper=topo.N_paper,
               N_sigma_lower=topo.N_sigma_lower, N_dacosta=topo.N_dacosta)
    return row


def refine_minimum(cfg: RunConfig, quantity: str, bracket: tuple[float, float], xatol: float = 1e-5):
    """Bounded scalar minimization of a topology quantity in the swept parameter."""
    def f(x):
        chart = cfg.chart(**{cfg.param: float(x)})
        return getattr(analyze_topology(chart, cfg.grid, cfg.truncation(chart), cfg.units, 1), quantity)

    res = minimize_scalar(f, bounds=bracket, method="bounded", options={"xatol": xatol})
    return float(res.x), float(res.fun)


def cmd_sweep(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.param is None or cfg.range is None:
        raise InvalidInputError("sweep needs --param and --range")
    values = np.linspace(cfg.range[0], cfg.range[1], cfg.steps)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda iv: _sweep_row(cfg, *iv), enumerate(map(float, values))))
    else:
        rows = [_sweep_row(cfg, i, float(v)) for i, v in enumerate(values)]
    out_dir = Path(cfg.out)
    atomic_write(out_dir / "sweep.csv", csv_text(SWEEP_COLUMNS, [[r[k] for k in SWEEP_COLUMNS] for r in rows]))
    report = _base_report(cfg, "sweep")
    report["outputs"] = ["sweep.csv"]

    good = [r for r in rows if r["status"] == "ok"]
    signed = sorted({r["signed_degree"] for r in good})
    absolute = sorted({r["absolute_degree_rounded"] for r in good})
    constant = len(signed) <= 1 and len(absolute) <= 1
    minimum = None
    if len(good) >= 3:
        vals = [r["N_paper"] for r in good]
        i = int(np.argmin(vals))
        minimum = {"quantity": "N_paper", "grid_argmin": good[i]["value"], "grid_min": vals[i]}
        if 0 < i < len(good) - 1:
            x, fx = refine_minimum(cfg, "N_paper", (good[i - 1]["value"], good[i + 1]["value"]))
            minimum.update(refined_argmin=x, refined_min=fx)
    report["sweep"] = {"parameter": cfg.param, "values": values.tolist(),
                       "rows": rows, "degrees_constant": constant,
                       "signed_degrees": signed, "absolute_degrees": absolute,
                       "rejected_rows": [r["index"] for r in rows if r["status"] == "rejected"],
                       "minimum": minimum}
    report["checks"].append({"name": "degree_constancy", "ok": constant,
                             "detail": {"signed": signed, "absolute": absolute}})
    if not constant:
        _finish(report, out_dir, 3, "degrees changed within one sweep")
        raise InvariantViolation(f"degrees changed within one sweep: signed {signed}, absolute {absolute}")
    if any(r["status"] == "indeterminate" for r in rows):
        return report, _finish(report, out_dir, 2, "some rows have indeterminate degrees")
    return report, _finish(report, out_dir, 0, "ok")


def cmd_surfaces() -> dict:
    listing = {}
    for kind in sorted(DEFAULT_PARAMS):
        chart = make_chart(kind)
        listing[kind] = {"parameters": dict(DEFAULT_PARAMS[kind]), "compact": chart.compact,
                         "euler_characteristic": chart.euler_characteristic,
                         "paper_state_bound": PAPER_STATE_BOUND.get(kind)}
    return listing


def _summary(report: dict) -> list[str]:
    lines = [f"command: {report['command']}", f"surface: {report['config']['surface']}"]
    topo = report.get("topology")
    if topo:
        for key in ("signed_degree", "absolute_degree", "total_curvature", "dirichlet_energy",
                    "willmore_energy", "N_paper", "N_sigma_lower", "N_dacosta"):
            lines.append(f"{key}: {topo[key]}")
    spectrum = report.get("spectrum")
    if spectrum:
        lines.append(f"ground_energy: {spectrum['ground_energy']}")
        lines.append(f"bound_count: {spectrum['bound_count']} (range {spectrum['bound_count_range']})")
    for c in report.get("paper_comparison", []):
        lines.append(f"published bound: {c['quantity']} {c['relation']} {c['paper_value']}, "
                     f"computed {c['computed']} -> {c['status']}")
    lines.append(f"status: {report['status']['exit_code']} {report['status']['message']}")
    return lines


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "surfaces":
            sys.stdout.write(dumps(cmd_surfaces()))
            return 0
        cfg = config_from_args(args)
        command = {"analyze": cmd_analyze, "spectrum": cmd_spectrum, "sweep": cmd_sweep}[args.command]
        report, code = command(cfg)
        for line in _summary(report):
            print(line)
        print(f"report: {Path(cfg.out) / 'report.json'}")
        return code
    except GqpError as exc:
        print(f"gqp-lab: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
