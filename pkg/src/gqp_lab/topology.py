"""Integrated invariants of the normal field over a (truncated) surface.

Quadrature is tensor-product: periodic-trapezoid in every periodic direction
(spectrally accurate on smooth periodic integrands) and Gauss-Legendre or
composite Simpson on bounded meridians.  Noncompact surfaces are truncated at
|v| <= T in the chart's meridian coordinate; nothing is transformed.

Reductions use :func:`math.fsum`, so totals do not depend on how the grid is
split between worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .errors import DegreeIndeterminateError, InvalidInputError, InvariantViolation
from .potential import NATURAL, PhysicalUnits, sigma_decomposition
from .surfaces import TWO_PI, SurfaceChart, curvatures, evaluate, geometry

FOUR_PI = 4.0 * math.pi
RULES = ("periodic-trapezoid", "composite-simpson", "gauss-legendre")
BLOCK_LINES = 16
CLEAN_RESIDUAL = 1e-3
INDETERMINATE_RESIDUAL = 0.1


@dataclass(frozen=True)
class QuadratureGrid:
    chart: SurfaceChart
    u_nodes: np.ndarray
    u_weights: np.ndarray
    v_nodes: np.ndarray
    v_weights: np.ndarray
    v_range: tuple[float, float]
    T: float | None
    resolution: tuple[int, int]
    rule_u: str
    rule_v: str

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.u_weights, self.v_weights)

    @property
    def coordinate_area(self) -> float:
        return TWO_PI * (self.v_range[1] - self.v_range[0])


def _gauss_legendre(a, b, n):
    x, w = roots_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _simpson(a, b, n):
    if n % 2 == 0:
        raise InvalidInputError("composite Simpson needs an odd number of nodes")
    x = np.linspace(a, b, n)
    h = (b - a) / (n - 1)
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * h / 3.0


def build_grid(chart: SurfaceChart, resolution=(512, 512), T: float | None = None,
               rule: str | None = None) -> QuadratureGrid:
    """Tensor quadrature grid over the chart, truncated at |v| <= T when noncompact.

    ``rule`` picks the rule for a bounded, nonperiodic meridian (default
    Gauss-Legendre); periodic directions always use the trapezoid rule.
    """
    nu, nv = (int(x) for x in resolution)
    if nu < 16 or nv < 16:
        raise InvalidInputError(f"resolution must be >= 16 per direction, got {resolution}")
    if chart.compact:
        T = None
    elif T is None or not (T > 0 and math.isfinite(T)):
        raise InvalidInputError(f"noncompact surface {chart.kind!r} needs a truncation T > 0")

    u0 = chart.u_domain[0]
    u = u0 + TWO_PI * np.arange(nu) / nu
    wu = np.full(nu, TWO_PI / nu)

    lo, hi = chart.v_domain
    if chart.periodic_v:
        v = lo + TWO_PI * np.arange(nv) / nv
        wv = np.full(nv, TWO_PI / nv)
        rule_v = "periodic-trapezoid"
        v_range = (lo, hi)
    else:
        if T is not None:
            lo, hi = max(lo, -T), min(hi, T)
        v_range = (lo, hi)
        rule_v = rule or "gauss-legendre"
        if rule_v == "gauss-legendre":
            v, wv = _gauss_legendre(lo, hi, nv)
        elif rule_v == "composite-simpson":
            v, wv = _simpson(lo, hi, nv)
        else:
            raise InvalidInputError(f"rule {rule_v!r} not valid for a bounded meridian")
    return QuadratureGrid(chart=chart, u_nodes=u, u_weights=wu, v_nodes=v, v_weights=wv,
                          v_range=v_range, T=T, resolution=(nu, nv),
                          rule_u="periodic-trapezoid", rule_v=rule_v)


# ---------------------------------------------------------------------------
# pointwise fields on the grid

class GridSample:
    """Geometry of one block of grid lines; attributes are (lines, Nv) arrays."""

    def __init__(self, chart, u, v, units):
        uu, vv = np.meshgrid(u, v, indexing="ij")
        self.u, self.v = uu, vv
        self.pt, self.cv, sd = geometry(chart, uu, vv)
        self.sd = sigma_decomposition(self.cv, sd, units)
        self.units = units


# name -> (function of GridSample, multiply by sqrt(g)?)
FIELDS = {
    "one": (lambda g: np.ones_like(g.cv.K), True),
    "K": (lambda g: g.cv.K, True),
    "abs_K": (lambda g: np.abs(g.cv.K), True),
    "H": (lambda g: g.cv.H, True),
    "H_sq": (lambda g: g.cv.H ** 2, True),
    "grad_n_sq": (lambda g: g.sd.grad_n_sq, True),
    "div_n_sq": (lambda g: g.sd.div_n_sq, True),
    "kappa_diff_sq": (lambda g: 4.0 * g.cv.discriminant, True),
    "V_dacosta": (lambda g: g.sd.V_dacosta, True),
    "V_paper8": (lambda g: g.sd.V_paper8, True),
    "p_sq_over_hbar_sq": (lambda g: g.sd.p_sq / g.units.hbar ** 2, True),
    "paper_density": (lambda g: g.sd.grad_n_sq + g.sd.div_n_sq, True),
    # n . (n_u x n_v) is already a density in du dv
    "degree_density": (lambda g: g.sd.degree_density, False),
}

CSV_FIELDS = ("sqrt_g", "K", "H", "V_dacosta", "grad_n_sq", "div_n_sq")


def _raw_field(g: GridSample, name):
    if name == "sqrt_g":
        return g.cv.sqrt_g
    return FIELDS[name][0](g)


def _field_values(g: GridSample, density):
    if callable(density):
        return np.asarray(density(g), dtype=float) * g.cv.sqrt_g
    fn, surface = FIELDS[density]
    vals = fn(g)
    return vals * g.cv.sqrt_g if surface else vals


def evaluate_fields(grid: QuadratureGrid, densities, units: PhysicalUnits = NATURAL,
                    workers: int = 1, raw: tuple[str, ...] = ()) -> tuple[dict, dict]:
    """Integrand arrays (density times measure) on the full grid, plus optional raw fields.

    Blocks of ``BLOCK_LINES`` u-lines are evaluated independently so results
    are identical for any worker count.
    """
    nu, nv = grid.resolution
    starts = list(range(0, nu, BLOCK_LINES))
    out = {key: np.empty((nu, nv)) for key in densities}
    raw_out = {key: np.empty((nu, nv)) for key in raw}

    def work(i0):
        g = GridSample(grid.chart, grid.u_nodes[i0:i0 + BLOCK_LINES], grid.v_nodes, units)
        return i0, {k: _field_values(g, d) for k, d in densities.items()}, \
            {k: _raw_field(g, k) for k in raw}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, starts))
    else:
        results = [work(i0) for i0 in starts]
    for i0, vals, rvals in results:
        for k, arr in vals.items():
            out[k][i0:i0 + arr.shape[0]] = arr
        for k, arr in rvals.items():
            raw_out[k][i0:i0 + arr.shape[0]] = arr
    for k, arr in out.items():
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError(f"density {k!r} is not finite at some grid node")
    return out, raw_out


def _sum(grid: QuadratureGrid, values: np.ndarray) -> float:
    return math.fsum((grid.weights * values).ravel())


def integrate_density(grid: QuadratureGrid, density, units: PhysicalUnits = NATURAL,
                      workers: int = 1) -> float:
    """Sum of w_ij f(u_i, v_j) sqrt(g)(u_i, v_j).

    ``density`` is a field name from :data:`FIELDS` or a callable taking a
    :class:`GridSample` and returning the pointwise scalar (sqrt(g) is
    applied here).
    """
    if isinstance(density, str) and density not in FIELDS:
        raise InvalidInputError(f"unknown density {density!r}; known: {sorted(FIELDS)}")
    vals, _ = evaluate_fields(grid, {"f": density}, units, workers)
    return _sum(grid, vals["f"])


# ---------------------------------------------------------------------------
# |K| integral with sign changes resolved

def _k_sqrt_g(chart, u, v):
    cv = curvatures(evaluate(chart, u, v))
    return cv.K * cv.sqrt_g


def _refine_roots(chart, u, a, b, fa, iters=200):
    """Vectorised bisection for sign changes of K sqrt(g) on [a, b] along lines u."""
    a, b, fa = a.copy(), b.copy(), fa.copy()
    for _ in range(iters):
        mid = 0.5 * (a + b)
        done = (mid <= a) | (mid >= b)
        if np.all(done):
            break
        fm = _k_sqrt_g(chart, u, mid)
        left = np.sign(fm) == np.sign(fa)
        a = np.where(left & ~done, mid, a)
        fa = np.where(left & ~done, fm, fa)
        b = np.where(~left & ~done, mid, b)
        hit = fm == 0
        a = np.where(hit, mid, a)
        b = np.where(hit, mid, b)
    return 0.5 * (a + b)


def _abs_curvature_lines(grid: QuadratureGrid, f: np.ndarray) -> np.ndarray:
    """Per-u-line integral of |K| sqrt(g) dv.

    |f| has kinks where K changes sign, which would spoil the spectral
    accuracy of the grid rules; lines with sign changes are split at the
    roots and each piece integrated with its own Gauss-Legendre rule.
    """
    chart = grid.chart
    nu, nv = f.shape
    line_signed = f @ grid.v_weights
    result = np.abs(line_signed)
    sgn = np.sign(f)
    periodic = chart.periodic_v

    brackets = []  # (line, a, b, fa)
    for i in range(nu):
        nz = np.flatnonzero(sgn[i])
        if nz.size < 2:
            continue
        s = sgn[i, nz]
        change = np.flatnonzero(s[:-1] != s[1:])
        pairs = [(nz[k], nz[k + 1]) for k in change]
        if periodic and s[-1] != s[0]:
            pairs.append((nz[-1], nz[0]))
        for j0, j1 in pairs:
            va = grid.v_nodes[j0]
            vb = grid.v_nodes[j1]
            if vb < va:
                vb += TWO_PI
            brackets.append((i, va, vb, f[i, j0]))
    if not brackets:
        return result

    lines = np.array([b[0] for b in brackets])
    roots = _refine_roots(chart, grid.u_nodes[lines],
                          np.array([b[1] for b in brackets]), np.array([b[2] for b in brackets]),
                          np.array([b[3] for b in brackets]))
    x, w = roots_legendre(nv)
    lo, hi = grid.v_range
    for i in np.unique(lines):
        r = np.sort(roots[lines == i])
        if periodic:
            r = np.mod(r - lo, TWO_PI) + lo
            r = np.sort(r)
            edges = np.append(r, r[0] + TWO_PI)
        else:
            edges = np.concatenate(([lo], r, [hi]))
        a, b = edges[:-1], edges[1:]
        half = 0.5 * (b - a)
        pts = (a[:, None] + half[:, None] * (x[None, :] + 1.0))
        vals = _k_sqrt_g(chart, np.full(pts.shape, grid.u_nodes[i]), pts)
        pieces = (vals * w[None, :]).sum(axis=1) * half
        result[i] = math.fsum(np.abs(pieces))
    return result


# ---------------------------------------------------------------------------
# reports

@dataclass
class GridIntegrals:
    area: float
    total_curvature: float
    abs_curvature: float
    degree_direct: float
    dirichlet_energy: float
    div_energy: float
    willmore: float
    kappa_diff_sq: float
    paper_density: float
    p_sq_over_hbar_sq: float
    field_ranges: dict
    fields: dict = field(default_factory=dict, repr=False)


_INTEGRAL_FIELDS = {
    "area": "one", "total_curvature": "K", "degree_direct": "degree_density",
    "dirichlet_energy": "grad_n_sq", "div_energy": "div_n_sq", "willmore": "H_sq",
    "kappa_diff_sq": "kappa_diff_sq", "paper_density": "paper_density",
    "p_sq_over_hbar_sq": "p_sq_over_hbar_sq",
}


def grid_integrals(grid: QuadratureGrid, units: PhysicalUnits = NATURAL, workers: int = 1,
                   keep_fields: bool = False) -> GridIntegrals:
    """Every integral the reports need, from one pass over the grid."""
    raw = ("K", "H", "V_dacosta") + (CSV_FIELDS if keep_fields else ())
    raw = tuple(dict.fromkeys(raw))
    vals, rawv = evaluate_fields(grid, dict(_INTEGRAL_FIELDS), units, workers, raw=raw)
    sums = {name: _sum(grid, vals[name]) for name in _INTEGRAL_FIELDS}
    abs_lines = _abs_curvature_lines(grid, vals["total_curvature"])
    abs_total = math.fsum(grid.u_weights * abs_lines)
    ranges = {k: {"min": float(np.min(rawv[k])), "max": float(np.max(rawv[k]))}
              for k in ("V_dacosta", "K", "H")}
    return GridIntegrals(abs_curvature=abs_total, field_ranges=ranges,
                         fields=rawv if keep_fields else {}, **sums)


@dataclass(frozen=True)
class DegreeResult:
    signed_Q: int
    Q_value: float
    Q_direct: float
    signed_residual: float
    absolute_degree: float
    absolute_rounded: int
    absolute_residual: float
    clean: bool

    @property
    def paper_degree(self) -> int:
        """Sweep count used in the 4*pi bound: the rounded absolute degree."""
        return self.absolute_rounded


def gauss_map_degrees(grid: QuadratureGrid, integrals: GridIntegrals | None = None,
                      units: PhysicalUnits = NATURAL, workers: int = 1) -> DegreeResult:
    """Signed and absolute degree of the Gauss map.

    The signed degree is computed twice, from n.(n_u x n_v) du dv and from
    K dS; the two must agree to rounding.  A rounding residual above 0.1
    means the truncation or resolution cannot support an integer answer.
    """
    it = integrals or grid_integrals(grid, units, workers)
    q = it.total_curvature / FOUR_PI
    q_direct = it.degree_direct / FOUR_PI
    if abs(q - q_direct) > 1e-9 * max(1.0, abs(q)):
        raise InvariantViolation(f"degree routes disagree: K dS gives {q!r}, n.(n_u x n_v) gives {q_direct!r}")
    signed = int(round(q))
    residual = abs(q - signed)
    if residual > INDETERMINATE_RESIDUAL:
        raise DegreeIndeterminateError(
            f"total curvature / 4pi = {q:.6g} is not close to an integer "
            f"(residual {residual:.3g}); increase the truncation T or the resolution")
    absolute = it.abs_curvature / FOUR_PI
    abs_round = int(round(absolute))
    abs_res = abs(absolute - abs_round)
    if absolute < abs(q) - 1e-9 * max(1.0, absolute):
        raise InvariantViolation(f"absolute degree {absolute} below |signed| {abs(q)}")
    return DegreeResult(signed_Q=signed, Q_value=q, Q_direct=q_direct, signed_residual=residual,
                        absolute_degree=absolute, absolute_rounded=abs_round,
                        absolute_residual=abs_res,
                        clean=bool(residual < CLEAN_RESIDUAL and abs_res < CLEAN_RESIDUAL))


def _quad_tol(value):
    return 1e-8 * max(1.0, abs(value))


@dataclass(frozen=True)
class BogomolnyiResult:
    dirichlet_energy: float
    paper_degree: int
    margin_paper: float
    margin_strict: float
    tolerance_paper: float
    tolerance_strict: float


def bogomolnyi_check(grid: QuadratureGrid, integrals: GridIntegrals | None = None,
                     degrees: DegreeResult | None = None, units: PhysicalUnits = NATURAL,
                     workers: int = 1) -> BogomolnyiResult:
    """Dirichlet energy against 4*pi*(sweep count) and 8*pi*|Q|.

    Tolerances allow for quadrature error plus the truncation deficit that the
    degree rounding residuals measure.  A violation raises: the bound is a
    theorem, so failing it means a bug.
    """
    it = integrals or grid_integrals(grid, units, workers)
    deg = degrees or gauss_map_degrees(grid, it)
    e = it.dirichlet_energy
    margin_paper = e - FOUR_PI * deg.paper_degree
    margin_strict = e - 2.0 * FOUR_PI * abs(deg.signed_Q)
    tol_paper = _quad_tol(e) + FOUR_PI * deg.absolute_residual
    tol_strict = _quad_tol(e) + 2.0 * FOUR_PI * deg.signed_residual
    if margin_paper < -tol_paper or margin_strict < -tol_strict:
        raise InvariantViolation(
            f"Bogomolnyi bound violated: E={e!r}, margins {margin_paper!r} / {margin_strict!r}")
    return BogomolnyiResult(dirichlet_energy=e, paper_degree=deg.paper_degree,
                            margin_paper=margin_paper, margin_strict=margin_strict,
                            tolerance_paper=tol_paper, tolerance_strict=tol_strict)


@dataclass(frozen=True)
class StateCounts:
    N_paper: float
    N_sigma_lower: float
    N_dacosta: float
    bound: int


def state_count_estimates(grid: QuadratureGrid, units: PhysicalUnits = NATURAL,
                          integrals: GridIntegrals | None = None,
                          degrees: DegreeResult | None = None, workers: int = 1) -> StateCounts:
    """Phase-space state counts (1/pi) * integral of p^2 / hbar^2 for three choices of p^2.

    ``N_paper`` uses p^2 = hbar^2[(grad n)^2 + (div n)^2], ``N_sigma_lower``
    drops the divergence term, ``N_dacosta`` uses p^2 = -2m V_dacosta.
    """
    it = integrals or grid_integrals(grid, units, workers)
    deg = degrees or gauss_map_degrees(grid, it)
    n_paper = it.paper_density / math.pi
    n_sigma = it.dirichlet_energy / math.pi
    n_dc = it.p_sq_over_hbar_sq / math.pi
    bound = 4 * deg.paper_degree
    tol = _quad_tol(n_paper)
    if n_paper < n_sigma - tol or n_sigma < -tol:
        raise InvariantViolation(f"estimator ordering broken: N_paper={n_paper!r}, N_sigma={n_sigma!r}")
    if n_sigma < bound - tol - 4.0 * deg.absolute_residual:
        raise InvariantViolation(f"N_sigma_lower={n_sigma!r} below 4 x degree = {bound}")
    if n_paper < n_dc - tol:
        raise InvariantViolation(f"N_paper={n_paper!r} below N_dacosta={n_dc!r}")
    return StateCounts(N_paper=n_paper, N_sigma_lower=n_sigma, N_dacosta=n_dc, bound=bound)


@dataclass(frozen=True)
class TopoReport:
    surface: str
    params: dict
    resolution: tuple[int, int]
    rule_v: str
    truncation_T: float | None
    area: float
    total_curvature: float
    signed_degree: int
    signed_degree_value: float
    signed_degree_direct: float
    signed_degree_residual: float
    absolute_degree: float
    absolute_degree_rounded: int
    absolute_degree_residual: float
    degree_clean: bool
    dirichlet_energy: float
    willmore_energy: float
    bogomolnyi_margin_paper: float
    bogomolnyi_margin_strict: float
    paper_degree: int
    N_paper: float
    N_sigma_lower: float
    N_dacosta: float
    bogomolnyi_state_bound: int
    euler_characteristic_input: int | None
    gauss_bonnet_residual: float | None
    field_ranges: dict

    def as_dict(self) -> dict:
        d = asdict(self)
        d["resolution"] = list(self.resolution)
        return d


def analyze_topology(chart: SurfaceChart, resolution=(512, 512), T: float | None = None,
                     units: PhysicalUnits = NATURAL, workers: int = 1, rule: str | None = None,
                     gb_tol: float = 1e-6, integrals_out: dict | None = None) -> TopoReport:
    grid = build_grid(chart, resolution, T, rule)
    it = grid_integrals(grid, units, workers, keep_fields=integrals_out is not None)
    if integrals_out is not None:
        integrals_out["grid"] = grid
        integrals_out["integrals"] = it
    deg = gauss_map_degrees(grid, it)
    bog = bogomolnyi_check(grid, it, deg)
    counts = state_count_estimates(grid, units, it, deg)
    gb = None
    if chart.compact:
        gb = abs(it.total_curvature - TWO_PI * chart.euler_characteristic)
        if gb > gb_tol:
            raise InvariantViolation(f"Gauss-Bonnet residual {gb!r} exceeds {gb_tol}")
    return TopoReport(
        surface=chart.kind, params=dict(chart.params), resolution=grid.resolution,
        rule_v=grid.rule_v, truncation_T=grid.T, area=it.area,
        total_curvature=it.total_curvature, signed_degree=deg.signed_Q,
        signed_degree_value=deg.Q_value, signed_degree_direct=deg.Q_direct,
        signed_degree_residual=deg.signed_residual, absolute_degree=deg.absolute_degree,
        absolute_degree_rounded=deg.absolute_rounded,
        absolute_degree_residual=deg.absolute_residual, degree_clean=deg.clean,
        dirichlet_energy=it.dirichlet_energy, willmore_energy=it.willmore,
        bogomolnyi_margin_paper=bog.margin_paper, bogomolnyi_margin_strict=bog.margin_strict,
        paper_degree=deg.paper_degree, N_paper=counts.N_paper,
        N_sigma_lower=counts.N_sigma_lower, N_dacosta=counts.N_dacosta,
        bogomolnyi_state_bound=counts.bound,
        euler_characteristic_input=chart.euler_characteristic, gauss_bonnet_residual=gb,
        field_ranges=it.field_ranges,
    )


# ---------------------------------------------------------------------------
# truncation study

_STUDY_KEYS = ("total_curvature", "degree_value", "absolute_degree", "dirichlet_energy",
               "N_paper", "N_sigma_lower", "N_dacosta")


@dataclass(frozen=True)
class TruncationStudy:
    surface: str
    T_values: list
    table: dict           # quantity -> list of values, one per T
    extrapolated: dict    # quantity -> Aitken estimate of the T -> infinity limit
    exp_rate: dict        # quantity -> list of observed exponential rates
    monotone: dict        # quantity -> successive changes shrink
    degree_stable: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _aitken(x):
    d1 = x[-2] - x[-3]
    d2 = x[-1] - x[-2]
    denom = d2 - d1
    if denom == 0 or abs(d2) >= abs(d1):
        return x[-1]
    return x[-1] - d2 * d2 / denom


def truncation_study(chart: SurfaceChart, T_values, resolution=(512, 512),
                     units: PhysicalUnits = NATURAL, workers: int = 1,
                     scale_nodes: bool = True) -> TruncationStudy:
    """Tabulate the invariants against the truncation T and estimate the limit.

    ``resolution`` applies to the smallest T; with ``scale_nodes`` the
    meridian node count grows with T so the node density stays fixed.
    Degrees are not rounded here, so short truncations do not abort the
    study; stability is judged on the largest T.
    """
    T_values = [float(t) for t in T_values]
    if len(T_values) < 3 or any(b <= a for a, b in zip(T_values, T_values[1:])):
        raise InvalidInputError("truncation study needs >= 3 strictly increasing T values")
    table = {k: [] for k in _STUDY_KEYS}
    nu, nv = resolution
    for T in T_values:
        nv_T = nv
        if scale_nodes and not chart.compact:
            nv_T = int(math.ceil(nv * T / T_values[0]))
        grid = build_grid(chart, (nu, nv_T), T)
        it = grid_integrals(grid, units, workers)
        table["total_curvature"].append(it.total_curvature)
        table["degree_value"].append(it.total_curvature / FOUR_PI)
        table["absolute_degree"].append(it.abs_curvature / FOUR_PI)
        table["dirichlet_energy"].append(it.dirichlet_energy)
        table["N_paper"].append(it.paper_density / math.pi)
        table["N_sigma_lower"].append(it.dirichlet_energy / math.pi)
        table["N_dacosta"].append(it.p_sq_over_hbar_sq / math.pi)

    eps = np.finfo(float).eps
    extrap, rates, mono = {}, {}, {}
    for k, xs in table.items():
        extrap[k] = _aitken(xs)
        floor = 64 * eps * max(1.0, max(abs(x) for x in xs))
        diffs = [abs(b - a) for a, b in zip(xs, xs[1:])]
        r = []
        for i in range(len(diffs) - 1):
            if diffs[i] > floor and diffs[i + 1] > floor:
                r.append(math.log(diffs[i] / diffs[i + 1]) / (T_values[i + 1] - T_values[i]))
            else:
                r.append(None)
        rates[k] = r
        mono[k] = all(b <= a or b <= floor for a, b in zip(diffs, diffs[1:]))
    last = table["degree_value"][-1]
    stable = abs(last - round(last)) < CLEAN_RESIDUAL
    return TruncationStudy(surface=chart.kind, T_values=T_values, table=table,
                           extrapolated=extrap, exp_rate=rates, monotone=mono,
                           degree_stable=bool(stable))
