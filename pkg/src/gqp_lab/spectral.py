"""Schrödinger spectrum on surfaces of revolution.

Separating ψ = e^{iℓφ} χ(s) / sqrt(ρ(s)) in the meridian arclength s turns
H = -(hbar^2/2m) Δ + V into the flat 1D operator

    -(hbar^2/2m) χ'' + U_ℓ χ,   U_ℓ = (hbar^2/2m)[ℓ^2/ρ^2 + (sqrt ρ)''/sqrt ρ] + V.

The measure term (sqrt ρ)''/sqrt ρ is discretized as the second difference
of sqrt ρ on the same grid, which keeps sqrt ρ an exact null vector of the
free ℓ = 0 operator and gives O(h^2) convergence even where ρ -> 0 at the
axis.  Two independent discretizations check it:

* a cell-centred flux form of -(1/ρ)(ρ ψ')' + ℓ^2/ρ^2 ψ with weight ρ,
  never transformed (``discretize_weighted``);
* the full 2D operator (1/sqrt g) ∂_i (sqrt g g^{ij} ∂_j) on the (u, v)
  chart grid (``cross_check_2d``).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad, solve_ivp

from .errors import DiscretizationError, InvalidInputError, InvariantViolation, NonConvergedError
from .potential import NATURAL, PhysicalUnits, potential_fields
from .surfaces import PAPER_STATE_BOUND, TWO_PI, SurfaceChart, evaluate
from .tridiag import SymTridiagonal, count_below, eigen_lowest

POTENTIALS = ("dacosta", "paper8", "none")
MIN_N = 64
WELL_POINTS = 16
_EPS = np.finfo(float).eps
DEGENERACY_RULE = "l = 0 counted once; each l > 0 counted twice (+l and -l)"


@dataclass(frozen=True)
class SpectralProblem:
    """Bound-state problem on a surface of revolution.

    ``T`` is the meridian box half-width in arclength (noncompact charts
    only; ignored for compact ones).  ``N`` is the number of grid intervals
    across the box.  Truncation ends are Dirichlet.
    """

    chart: SurfaceChart
    units: PhysicalUnits = NATURAL
    potential: str = "dacosta"
    lmax: int = 8
    T: float | None = None
    N: int = 2048
    boundary: str = "dirichlet"

    def __post_init__(self):
        if self.potential not in POTENTIALS:
            raise InvalidInputError(f"potential must be one of {POTENTIALS}, got {self.potential!r}")
        if int(self.N) != self.N or self.N < MIN_N:
            raise InvalidInputError(f"N must be an integer >= {MIN_N}, got {self.N!r}")
        if int(self.lmax) != self.lmax or self.lmax < 0:
            raise InvalidInputError(f"lmax must be an integer >= 0, got {self.lmax!r}")
        if self.boundary != "dirichlet":
            raise InvalidInputError("only Dirichlet truncation is supported")
        if self.chart.compact:
            object.__setattr__(self, "T", None)
        elif self.T is None or not (math.isfinite(self.T) and self.T > 0):
            raise InvalidInputError(f"noncompact surface {self.chart.kind!r} needs T > 0, got {self.T!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "lmax", int(self.lmax))


# ---------------------------------------------------------------------------
# meridian in arclength

def _speed(chart, t):
    _, rho_t, _, _, z_t, _ = chart.profile.curve(np.asarray(t, dtype=float))
    return np.hypot(rho_t, z_t)


def _arclength(chart, t0, t1):
    prof = chart.profile
    if prof.arclength is not None:
        return float(prof.arclength(np.float64(t1)) - prof.arclength(np.float64(t0)))
    val, _ = quad(lambda t: float(_speed(chart, t)), t0, t1, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


class Meridian:
    """Map from meridian arclength s (measured from the profile origin) to chart data.

    Uses the chart's closed-form inverse arclength when available and
    otherwise integrates dt/ds = 1/|X_v| over ``[s_lo, s_hi]``.
    """

    def __init__(self, chart: SurfaceChart, s_lo: float, s_hi: float):
        if not chart.axisymmetric:
            raise InvalidInputError(f"surface {chart.kind!r} is not a surface of revolution")
        self.chart = chart
        self.s_range = (float(s_lo), float(s_hi))
        prof = chart.profile
        self._closed = prof.inverse_arclength
        self._sols = []
        if self._closed is None:
            rhs = lambda s, t: 1.0 / _speed(chart, t)  # noqa: E731
            for end in (s_lo, s_hi):
                if end != 0.0:
                    sol = solve_ivp(rhs, (0.0, end), [prof.origin], method="DOP853",
                                    rtol=1e-13, atol=1e-13, dense_output=True)
                    if not sol.success:
                        raise InvalidInputError(f"arclength map failed: {sol.message}")
                    self._sols.append((min(0.0, end), max(0.0, end), sol.sol))

    def t_of_s(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self._closed is not None:
            return np.asarray(self._closed(s), dtype=float)
        lo, hi = self.s_range
        if np.any(s < lo - 1e-9 * max(1.0, abs(lo))) or np.any(s > hi + 1e-9 * max(1.0, abs(hi))):
            raise InvalidInputError(f"arclength outside the mapped range {self.s_range}")
        t = np.full(s.shape, self.chart.profile.origin, dtype=float)
        for a, b, fn in self._sols:
            m = (s >= a) & (s <= b) & (s != 0.0)
            if np.any(m):
                t[m] = fn(s[m])[0]
        return t

    def rho_derivs(self, s):
        """rho, d rho/ds and d^2 rho/ds^2 at arclength ``s``."""
        t = self.t_of_s(s)
        rho, rho_t, rho_tt, _, z_t, z_tt = self.chart.profile.curve(t)
        w = np.hypot(rho_t, z_t)
        w_t = (rho_t * rho_tt + z_t * z_tt) / w
        rho_s = rho_t / w
        rho_ss = (rho_tt - rho_s * w_t) / (w * w)
        return rho, rho_s, rho_ss

    def potential(self, s, which: str, units: PhysicalUnits) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if which == "none":
            return np.zeros(s.shape)
        t = self.t_of_s(s)
        _, _, sd = potential_fields(self.chart, np.zeros_like(t), t, units)
        return np.asarray(sd.V_dacosta if which == "dacosta" else sd.V_paper8, dtype=float)


def arclength_domain(chart: SurfaceChart) -> tuple[float, float, bool]:
    """Full meridian range in arclength and whether it is periodic."""
    lo, hi = chart.v_domain
    origin = chart.profile.origin
    if chart.periodic_v:
        s_lo = _arclength(chart, origin, lo)
        return s_lo, s_lo + _arclength(chart, lo, hi), True
    s_lo = -math.inf if math.isinf(lo) else _arclength(chart, origin, lo)
    s_hi = math.inf if math.isinf(hi) else _arclength(chart, origin, hi)
    for end, axis, name in ((lo, chart.axis_ends[0], "lower"), (hi, chart.axis_ends[1], "upper")):
        if math.isfinite(end) and not axis:
            raise InvalidInputError(f"{name} meridian end of {chart.kind!r} is a boundary; "
                                    "only closed or unbounded surfaces are supported")
    return s_lo, s_hi, False


# ---------------------------------------------------------------------------
# reduced 1D system

def _box(domain, T):
    """[-T, T] for a two-ended meridian, [end, end + T] for a one-ended one."""
    lo, hi = domain
    if math.isinf(lo) or math.isinf(hi):
        if T is None or not T > 0:
            raise InvalidInputError("unbounded meridian needs a box half-width T > 0")
        if math.isinf(lo) and math.isinf(hi):
            return -float(T), float(T)
        return (lo, lo + T) if math.isinf(hi) else (hi - T, hi)
    return lo, hi


@dataclass(frozen=True)
class ReducedSystem:
    """1D Schrödinger system -k χ'' + U χ in a flat coordinate s.

    ``rho`` returns (rho, rho_s, rho_ss); it is None for a plain 1D problem
    without measure or centrifugal terms.  ``potential`` returns V(s).
    """

    ell: int
    kinetic: float
    domain: tuple[float, float]
    periodic: bool = False
    axis_ends: tuple[bool, bool] = (False, False)
    rho: Callable | None = field(default=None, repr=False)
    potential: Callable | None = field(default=None, repr=False)
    label: str = ""

    def box(self, T: float | None = None) -> tuple[float, float]:
        return _box(self.domain, T)

    def V(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.zeros(s.shape) if self.potential is None else np.asarray(self.potential(s), dtype=float)

    def U(self, s) -> np.ndarray:
        """Continuous effective potential including centrifugal and measure terms."""
        s = np.asarray(s, dtype=float)
        out = self.V(s)
        if self.rho is not None:
            rho, rho_s, rho_ss = self.rho(s)
            out = out + self.kinetic * (self.ell ** 2 / rho ** 2
                                        + rho_ss / (2.0 * rho) - rho_s ** 2 / (4.0 * rho ** 2))
        return out


def flat_system(potential: Callable | None, lo: float, hi: float, periodic: bool = False,
                kinetic: float = 1.0) -> ReducedSystem:
    """Plain -k χ'' + V χ on [lo, hi] (Dirichlet unless periodic)."""
    if not hi > lo:
        raise InvalidInputError(f"empty interval [{lo}, {hi}]")
    return ReducedSystem(ell=0, kinetic=kinetic, domain=(lo, hi), periodic=periodic,
                         potential=potential, label="flat")


def reduce_axisymmetric(problem: SpectralProblem, ell: int,
                        meridian: Meridian | None = None) -> ReducedSystem:
    """Angular channel ``ell`` of the problem as a flat-measure 1D system."""
    if int(ell) != ell or ell < 0:
        raise InvalidInputError(f"ell must be an integer >= 0, got {ell!r}")
    chart = problem.chart
    if not chart.axisymmetric:
        raise InvalidInputError(f"surface {chart.kind!r} is not a surface of revolution")
    s_lo, s_hi, periodic = arclength_domain(chart)
    if meridian is None:
        meridian = Meridian(chart, *_box((s_lo, s_hi), None if problem.T is None else 2.0 * problem.T))
    which, units = problem.potential, problem.units
    return ReducedSystem(
        ell=int(ell), kinetic=units.kinetic, domain=(s_lo, s_hi), periodic=periodic,
        axis_ends=tuple(chart.axis_ends), rho=meridian.rho_derivs,
        potential=lambda s: meridian.potential(s, which, units),
        label=chart.kind,
    )


def _grid(system: ReducedSystem, N: int, T: float | None):
    lo, hi = system.box(T)
    if system.periodic:
        h = (hi - lo) / N
        return lo, hi, h, lo + h * np.arange(N)
    h = (hi - lo) / N
    return lo, hi, h, lo + h * np.arange(N + 1)


def _check_well(system: ReducedSystem, nodes: np.ndarray, periodic: bool):
    if system.potential is None:
        return
    V = system.V(nodes)
    vmin = float(np.min(V))
    if not vmin < 0:
        return
    inside = V <= 0.5 * vmin
    i = int(np.argmin(V))
    n = nodes.size
    width = 1
    for step in (1, -1):
        j = i + step
        while width < n:
            if periodic:
                j %= n
            elif not 0 <= j < n:
                break
            if not inside[j]:
                break
            width += 1
            j += step
    if width < WELL_POINTS:
        raise DiscretizationError(
            f"grid step too coarse: {width} points across the half-maximum of the deepest well "
            f"(need >= {WELL_POINTS}); increase N")


def discretize_1d(system: ReducedSystem, N: int, T: float | None = None) -> SymTridiagonal:
    """Second-order central differences of -k χ'' + U χ on a uniform s-grid.

    Dirichlet at truncation ends and at axis ends (where χ = sqrt(ρ) ψ
    vanishes); periodic closure for a closed meridian.  The unknowns are the
    interior nodes (all nodes when periodic).
    """
    if int(N) != N or N < MIN_N:
        raise InvalidInputError(f"N must be an integer >= {MIN_N}, got {N!r}")
    N = int(N)
    lo, hi, h, s = _grid(system, N, T)
    k = system.kinetic
    inner = s if system.periodic else s[1:-1]
    _check_well(system, inner, system.periodic)

    U = system.V(inner)
    if system.rho is not None:
        q = np.empty(s.size)
        mask = np.ones(s.size, dtype=bool)
        if not system.periodic:
            for idx, axis in ((0, system.axis_ends[0]), (-1, system.axis_ends[1])):
                if axis:
                    q[idx] = 0.0
                    mask[idx] = False
        rho = system.rho(s[mask])[0]
        if np.any(rho <= 0):
            raise InvalidInputError("radius vanishes inside the meridian box")
        q[mask] = np.sqrt(rho)
        if system.periodic:
            lap_q = np.roll(q, -1) - 2.0 * q + np.roll(q, 1)
            q_in = q
        else:
            lap_q = q[2:] - 2.0 * q[1:-1] + q[:-2]
            q_in = q[1:-1]
        rho_in = q_in * q_in
        U = U + k * (system.ell ** 2 / rho_in ** 2 + lap_q / (h * h * q_in))
    diag = 2.0 * k / (h * h) + U
    off = np.full(diag.size - 1, -k / (h * h))
    corner = -k / (h * h) if system.periodic else 0.0
    return SymTridiagonal(diag, off, corner)


def discretize_weighted(system: ReducedSystem, N: int, T: float | None = None) -> SymTridiagonal:
    """Cell-centred flux form of -k (1/ρ)(ρ ψ')' + (k ℓ^2/ρ^2 + V) ψ, symmetrized.

    The generalized problem A ψ = E B ψ with B = diag(ρ) is returned as
    B^{-1/2} A B^{-1/2}.  Axis faces carry zero flux; truncation ends are
    Dirichlet through a ghost cell.
    """
    if int(N) != N or N < MIN_N:
        raise InvalidInputError(f"N must be an integer >= {MIN_N}, got {N!r}")
    N = int(N)
    lo, hi = system.box(T)
    h = (hi - lo) / N
    k = system.kinetic
    centres = lo + h * (np.arange(N) + 0.5)
    faces = lo + h * np.arange(N + 1)
    if system.rho is None:
        rc = np.ones(N)
        rf = np.ones(N + 1)
    else:
        rc = system.rho(centres)[0]
        fmask = np.ones(N + 1, dtype=bool)
        rf = np.empty(N + 1)
        if not system.periodic:
            for idx, axis in ((0, system.axis_ends[0]), (-1, system.axis_ends[1])):
                if axis:
                    rf[idx] = 0.0
                    fmask[idx] = False
        rf[fmask] = system.rho(faces[fmask])[0]
    a = k * rf / (h * h)
    diag = a[:-1] + a[1:] + system.V(centres) * rc
    if system.rho is not None:
        diag = diag + k * system.ell ** 2 / rc
    off = -a[1:-1]
    corner = 0.0
    if system.periodic:
        # faces 0 and N coincide
        corner = -a[0]
    else:
        diag[0] += a[0]
        diag[-1] += a[-1]
    scale = 1.0 / np.sqrt(rc)
    return SymTridiagonal(diag * scale * scale, off * scale[:-1] * scale[1:], corner * scale[0] * scale[-1])


# ---------------------------------------------------------------------------
# bound states

@dataclass
class ConvergenceLevel:
    N: int
    T: float | None
    threshold: float
    bound_count: int
    channel_counts: dict
    ground_energy: float
    lmax_reached: bool


@dataclass
class SpectralResult:
    surface: str
    parameters: dict
    potential: str
    units: dict
    N: int
    T: float | None
    lmax: int
    threshold_rule: str
    threshold: float
    degeneracy_rule: str
    eigenvalues: dict            # ell -> ascending eigenvalues at (N, T)
    channel_counts: dict         # ell -> bound states in that channel (without degeneracy)
    bound_count: int | None
    bound_count_range: tuple[int, int]
    converged: bool
    ground_energy: float
    ground_energy_richardson: float
    ground_energy_error: float
    levels: list
    lmax_reached: bool
    paper_bound: int | None
    paper_bound_agrees: bool | None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["eigenvalues"] = {str(k): list(map(float, v)) for k, v in self.eigenvalues.items()}
        d["channel_counts"] = {str(k): int(v) for k, v in self.channel_counts.items()}
        d["bound_count_range"] = list(self.bound_count_range)
        for lev in d["levels"]:
            lev["channel_counts"] = {str(k): int(v) for k, v in lev["channel_counts"].items()}
        return d


def box_threshold(system: ReducedSystem, T: float | None) -> float:
    """Largest energy counted as bound: -(π/L)^2 k for a box of length L."""
    lo, hi = system.box(T)
    return -system.kinetic * (math.pi / (hi - lo)) ** 2


def _threshold(system, T, matrix):
    if math.isinf(system.domain[0]) or math.isinf(system.domain[1]):
        return box_threshold(system, T)
    return -64.0 * _EPS * matrix.norm()


def _meridian_for(problem: SpectralProblem, T_max: float | None) -> Meridian:
    s_lo, s_hi, _ = arclength_domain(problem.chart)
    return Meridian(problem.chart, *_box((s_lo, s_hi), T_max))


def _solve_level(problem, meridian, N, T, n_eigs, workers, table_channels):
    """Sweep channels at one resolution; returns counts and per-channel eigenvalues."""

    def channel(ell):
        system = reduce_axisymmetric(problem, ell, meridian)
        A = discretize_1d(system, N, T)
        thr = _threshold(system, T, A)
        cnt = count_below(A, thr)
        k = min(max(n_eigs, cnt), A.n)
        return ell, cnt, eigen_lowest(A, k), thr

    results = {}
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        ell = 0
        empty_run = 0
        batch = max(1, workers)
        while True:
            ells = [e for e in range(ell, ell + batch) if e <= problem.lmax or e < table_channels]
            if not ells:
                break
            out = list(pool.map(channel, ells)) if pool else [channel(e) for e in ells]
            stop = False
            for e, cnt, vals, thr in out:
                results[e] = (cnt, vals, thr)
            for e in ells:
                empty_run = empty_run + 1 if results[e][0] == 0 else 0
                if empty_run >= 2 and e >= 1 and e + 1 >= table_channels:
                    stop = True
                    break
            ell += batch
            if stop:
                break
    finally:
        if pool:
            pool.shutdown()

    counts, eigs, thr = {}, {}, None
    empty_run = 0
    reached = True
    for e in sorted(results):
        cnt, vals, t = results[e]
        thr = t if thr is None else thr
        eigs[e] = vals
        if reached:
            counts[e] = cnt
            empty_run = empty_run + 1 if cnt == 0 else 0
            if empty_run >= 2 and e >= 1:
                reached = False
    lmax_reached = reached
    total = sum(c if e == 0 else 2 * c for e, c in counts.items())
    ground = min(float(v[0]) for v in eigs.values())
    return counts, eigs, thr, total, ground, lmax_reached


def count_bound_states(problem: SpectralProblem, n_eigs: int = 6, workers: int = 1,
                       strict: bool = False) -> SpectralResult:
    """Bound states below the continuum edge (noncompact) or below zero (compact).

    Levels: (N, T), (2N, T) and (2N, 2T).  The (N, T) grid is a principal
    submatrix of the (2N, 2T) one, so eigenvalues cannot rise under T-doubling;
    a rise is reported as an invariant violation.  A count that differs between
    levels is reported as a range (``strict`` raises instead).
    """
    N, T = problem.N, problem.T
    levels_spec = [(N, T), (2 * N, T)]
    if T is not None:
        levels_spec.append((2 * N, 2 * T))
    meridian = _meridian_for(problem, None if T is None else 2 * T)
    table_channels = problem.lmax + 1

    levels, tables = [], []
    for n_i, t_i in levels_spec:
        counts, eigs, thr, total, ground, reached = _solve_level(
            problem, meridian, n_i, t_i, n_eigs, workers, table_channels)
        levels.append(ConvergenceLevel(N=n_i, T=t_i, threshold=thr, bound_count=total,
                                       channel_counts=counts, ground_energy=ground,
                                       lmax_reached=reached))
        tables.append(eigs)

    if T is not None:
        small, big = tables[0], tables[2]
        for ell, vals in small.items():
            if ell not in big:
                continue
            m = min(vals.size, big[ell].size)
            tol = 1e3 * _EPS * max(1.0, float(np.max(np.abs(vals[:m]))))
            if np.any(big[ell][:m] > vals[:m] + tol):
                raise InvariantViolation(f"eigenvalue rose when the box doubled (l = {ell})")
        if levels[2].bound_count < levels[0].bound_count:
            raise InvariantViolation("bound count decreased when the box doubled")

    counts_all = [lv.bound_count for lv in levels]
    converged = len(set(counts_all)) == 1
    if strict and not converged:
        raise NonConvergedError(f"bound count differs between refinement levels: {counts_all}")
    e1, e2 = levels[0].ground_energy, levels[1].ground_energy
    err = abs(e2 - e1) / 3.0
    rich = e2 + (e2 - e1) / 3.0
    primary = levels[0]
    bound = primary.bound_count if converged else None
    published = PAPER_STATE_BOUND.get(problem.chart.kind)
    agrees = None if (published is None or bound is None) else bool(bound >= published)
    return SpectralResult(
        surface=problem.chart.kind, parameters=dict(problem.chart.params),
        potential=problem.potential, units=problem.units.describe(),
        N=N, T=T, lmax=problem.lmax,
        threshold_rule=("E < -(pi/L)^2 hbar^2/2m, L = box length" if T is not None
                        else "E < -64 eps ||A|| (strictly negative)"),
        threshold=primary.threshold, degeneracy_rule=DEGENERACY_RULE,
        eigenvalues={e: tables[0][e] for e in sorted(tables[0]) if e <= problem.lmax},
        channel_counts=primary.channel_counts, bound_count=bound,
        bound_count_range=(min(counts_all), max(counts_all)), converged=converged,
        ground_energy=e1, ground_energy_richardson=rich, ground_energy_error=err,
        levels=levels, lmax_reached=any(lv.lmax_reached for lv in levels),
        paper_bound=published, paper_bound_agrees=agrees,
    )


# ---------------------------------------------------------------------------
# independent checks

def liouville_check(problem: SpectralProblem, ells=(0, 1, 2), k: int = 4,
                    N: int | None = None) -> dict:
    """Compare the transformed and weighted 1D spectra per channel.

    Tolerance per eigenvalue: 10 x the larger Richardson error estimate of
    the two routes (N versus 2N), plus a roundoff floor.
    """
    N = N or problem.N
    T = problem.T
    meridian = _meridian_for(problem, T)
    rows = []
    ok = True
    for ell in ells:
        system = reduce_axisymmetric(problem, ell, meridian)
        a1 = eigen_lowest(discretize_1d(system, N, T), k)
        a2 = eigen_lowest(discretize_1d(system, 2 * N, T), k)
        b1 = eigen_lowest(discretize_weighted(system, N, T), k)
        b2 = eigen_lowest(discretize_weighted(system, 2 * N, T), k)
        err_a = np.abs(a2 - a1) / 3.0
        err_b = np.abs(b2 - b1) / 3.0
        floor = 1e-9 * np.maximum(1.0, np.abs(a2))
        tol = 10.0 * np.maximum(err_a, err_b) + floor
        diff = np.abs(a2 - b2)
        row_ok = bool(np.all(diff <= tol))
        ok &= row_ok
        rows.append({"ell": int(ell), "transformed": a2.tolist(), "weighted": b2.tolist(),
                     "difference": diff.tolist(), "tolerance": tol.tolist(), "ok": row_ok})
    return {"channels": rows, "ok": ok}


def _laplace_beltrami_2d(chart: SurfaceChart, nu: int, v_lo: float, v_hi: float, nv: int,
                         V_of: Callable | None, kinetic: float):
    """Finite-volume H on a periodic-u, cell-centred-v grid; returns (S, M diag) with S symmetric."""
    hu = TWO_PI / nu
    hv = (v_hi - v_lo) / nv
    u = chart.u_domain[0] + hu * np.arange(nu)
    v = v_lo + hv * (np.arange(nv) + 0.5)
    vf = v_lo + hv * np.arange(nv + 1)

    def metric(uu, vv):
        pt = evaluate(chart, uu, vv)
        E = np.einsum("...i,...i->...", pt.d_u, pt.d_u)
        F = np.einsum("...i,...i->...", pt.d_u, pt.d_v)
        G = np.einsum("...i,...i->...", pt.d_v, pt.d_v)
        if np.any(np.abs(F) > 1e-12 * np.maximum(E, G)):
            raise InvalidInputError("2D operator assumes an orthogonal chart")
        return E, G

    periodic_v = chart.periodic_v
    # metric is u-independent on a surface of revolution; evaluate on one u-line
    Ec, Gc = metric(np.zeros(nv), v)
    sqrt_c = np.sqrt(Ec * Gc)
    a_u = sqrt_c / Ec                      # sqrt(g) g^{uu} at u-faces
    fmask = np.ones(nv + 1, dtype=bool)
    if not periodic_v:
        for idx, axis in ((0, chart.axis_ends[0]), (-1, chart.axis_ends[1])):
            if axis:
                fmask[idx] = False
    b_v = np.zeros(nv + 1)                 # sqrt(g) g^{vv} at v-faces
    Ef, Gf = metric(np.zeros(int(fmask.sum())), vf[fmask])
    b_v[fmask] = np.sqrt(Ef * Gf) / Gf

    idx = np.arange(nu * nv).reshape(nu, nv)
    rows, cols, vals = [], [], []
    diag = np.zeros((nu, nv))
    cu = kinetic * a_u * hv / hu
    # u-direction (periodic)
    right = np.roll(idx, -1, axis=0)
    w = np.broadcast_to(cu, (nu, nv))
    rows.append(idx.ravel()); cols.append(right.ravel()); vals.append(-w.ravel())
    rows.append(right.ravel()); cols.append(idx.ravel()); vals.append(-w.ravel())
    diag += 2.0 * w
    # v-direction
    cv = kinetic * b_v * hu / hv
    if periodic_v:
        up = np.roll(idx, -1, axis=1)
        wv = np.broadcast_to(cv[1:], (nu, nv))   # face between j and j+1 (wrap uses face nv == face 0)
        rows.append(idx.ravel()); cols.append(up.ravel()); vals.append(-wv.ravel())
        rows.append(up.ravel()); cols.append(idx.ravel()); vals.append(-wv.ravel())
        diag += wv + np.roll(wv, 1, axis=1)
    else:
        wv = np.broadcast_to(cv[1:-1], (nu, nv - 1))
        a, b = idx[:, :-1].ravel(), idx[:, 1:].ravel()
        rows += [a, b]; cols += [b, a]; vals += [-wv.ravel(), -wv.ravel()]
        diag[:, :-1] += wv
        diag[:, 1:] += wv
        # Dirichlet through a ghost at distance hv/2; zero where the face is on the axis
        diag[:, 0] += 2.0 * cv[0]
        diag[:, -1] += 2.0 * cv[-1]
    mass = np.broadcast_to(sqrt_c * hu * hv, (nu, nv))
    if V_of is not None:
        diag += V_of(v)[None, :] * mass
    rows.append(idx.ravel()); cols.append(idx.ravel()); vals.append(diag.ravel())
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nu * nv, nu * nv))
    d = 1.0 / np.sqrt(mass.ravel())
    D = sp.diags(d)
    S = (D @ A @ D).tocsc()
    return S, v


def _lowest_sparse(S, k: int, lower: float):
    vals = spla.eigsh(S, k=k, sigma=lower, which="LM", return_eigenvectors=False, tol=0.0)
    return np.sort(vals)


def _v_box(chart: SurfaceChart, T: float | None):
    """Chart-coordinate meridian interval matching the arclength box of the 1D route."""
    if chart.compact or chart.periodic_v:
        return chart.v_domain
    s_lo, s_hi, _ = arclength_domain(chart)
    b_lo, b_hi = _box((s_lo, s_hi), T)
    meridian = Meridian(chart, b_lo, b_hi)
    lo, hi = chart.v_domain
    t_lo = lo if math.isfinite(s_lo) else float(meridian.t_of_s(np.array([b_lo]))[0])
    t_hi = hi if math.isfinite(s_hi) else float(meridian.t_of_s(np.array([b_hi]))[0])
    return t_lo, t_hi


def eigenvalues_2d(problem: SpectralProblem, k: int, resolution=(128, 128),
                   potential: str | None = None) -> np.ndarray:
    """Lowest ``k`` eigenvalues of the 2D finite-volume operator."""
    chart = problem.chart
    which = potential or problem.potential
    nu, nv = (int(x) for x in resolution)
    if nu < 8 or nv < 8:
        raise InvalidInputError(f"2D resolution too small: {resolution}")
    v_lo, v_hi = _v_box(chart, problem.T)
    units = problem.units

    def V_of(v):
        _, _, sd = potential_fields(chart, np.zeros_like(v), v, units)
        return sd.V_dacosta if which == "dacosta" else sd.V_paper8

    S, v = _laplace_beltrami_2d(chart, nu, v_lo, v_hi, nv, None if which == "none" else V_of,
                                units.kinetic)
    vmin = float(np.min(V_of(v))) if which != "none" else 0.0
    lower = vmin - 1.0 - 1e-3 * abs(vmin)
    return _lowest_sparse(S, k, lower)


def eigenvalues_1d_union(problem: SpectralProblem, k: int, N: int | None = None,
                         T: float | None = None) -> np.ndarray:
    """Lowest ``k`` eigenvalues over all channels, with ±ℓ degeneracy."""
    N = N or problem.N
    T = problem.T if T is None else T
    meridian = _meridian_for(problem, T)
    pool: list[float] = []
    ell = 0
    while True:
        system = reduce_axisymmetric(problem, ell, meridian)
        vals = eigen_lowest(discretize_1d(system, N, T), min(k, N - 1))
        if len(pool) >= k and vals[0] > sorted(pool)[k - 1]:
            break
        pool.extend(vals.tolist() * (1 if ell == 0 else 2))
        ell += 1
    return np.sort(np.asarray(pool))[:k]


def cross_check_2d(problem: SpectralProblem, k: int = 12, resolution=(128, 128),
                   N: int | None = None, strict: bool = True) -> dict:
    """Lowest eigenvalues of the 2D operator against the channel decomposition.

    Each route runs at two resolutions (the given one and half of it for
    2D, N and 2N for 1D); tolerance per eigenvalue is 10 x the larger
    Richardson error estimate plus a roundoff floor.
    """
    N = N or problem.N
    nu, nv = (int(x) for x in resolution)
    c2 = eigenvalues_2d(problem, k, (nu // 2, nv // 2))
    f2 = eigenvalues_2d(problem, k, (nu, nv))
    c1 = eigenvalues_1d_union(problem, k, N)
    f1 = eigenvalues_1d_union(problem, k, 2 * N)
    err2 = np.abs(f2 - c2) / 3.0
    err1 = np.abs(f1 - c1) / 3.0
    floor = 1e-9 * np.maximum(1.0, np.abs(f1))
    tol = 10.0 * np.maximum(err1, err2) + floor
    diff = np.abs(f2 - f1)
    ok = bool(np.all(diff <= tol))
    record = {
        "surface": problem.chart.kind, "potential": problem.potential,
        "resolution_2d": [nu, nv], "N": N,
        "eigenvalues_2d": f2.tolist(), "eigenvalues_1d": f1.tolist(),
        "richardson_2d": err2.tolist(), "richardson_1d": err1.tolist(),
        "difference": diff.tolist(), "tolerance": tol.tolist(), "ok": ok,
    }
    if strict and not ok:
        worst = int(np.argmax(diff - tol))
        raise InvariantViolation(
            f"2D and channel spectra disagree at level {worst}: |{f2[worst]} - {f1[worst]}| "
            f"> {tol[worst]}")
    return record


def potential_ordering(problem: SpectralProblem, k: int = 12, resolution=(64, 64)) -> dict:
    """Level-by-level check that adding V <= 0 does not raise any eigenvalue (2D operator)."""
    with_v = eigenvalues_2d(problem, k, resolution, potential=problem.potential)
    free = eigenvalues_2d(problem, k, resolution, potential="none")
    tol = 1e-9 * np.maximum(1.0, np.abs(free))
    ok = bool(np.all(with_v <= free + tol))
    return {"with_potential": with_v.tolist(), "without": free.tolist(), "ok": ok}


def gaussian_rayleigh_quotient(chart: SurfaceChart, sigma: float, units: PhysicalUnits = NATURAL,
                               potential: str = "dacosta", T: float | None = None) -> float:
    """Energy of a Gaussian trial state (ℓ = 0), by adaptive quadrature.

    The trial state is exp(-s^2 / 2 sigma^2) on the whole line, or, with a
    truncation ``T``, the same Gaussian minus its value at s = ±T so that it
    vanishes on the Dirichlet box [-T, T].  Evaluated in the surface measure
    ρ ds directly, with no reference to either discretization; by the
    variational principle it bounds the ground energy of the corresponding
    (whole-line or boxed) problem from above.
    """
    if not sigma > 0:
        raise InvalidInputError(f"sigma must be > 0, got {sigma!r}")
    if T is not None and not T > 0:
        raise InvalidInputError(f"T must be > 0, got {T!r}")
    s_lo, s_hi, periodic = arclength_domain(chart)
    if periodic or math.isfinite(s_lo) or math.isfinite(s_hi):
        raise InvalidInputError("the Gaussian trial state is defined for two-ended noncompact surfaces")
    boxed = T is not None and T < 12.0 * sigma
    span = float(T) if boxed else 12.0 * sigma
    meridian = Meridian(chart, -span, span)
    k = units.kinetic

    def rho(s):
        return float(meridian.rho_derivs(np.array([s]))[0][0])

    def V(s):
        return float(meridian.potential(np.array([s]), potential, units)[0])

    def psi(s):
        g = math.exp(-0.5 * (s / sigma) ** 2)
        if not boxed:
            return g
        # g(s) - g(T) without cancellation when sigma >> T
        return -g * math.expm1(-0.5 * (span * span - s * s) / sigma ** 2)

    def num(s):
        dpsi = s / sigma ** 2 * math.exp(-0.5 * (s / sigma) ** 2)
        return (k * dpsi ** 2 + V(s) * psi(s) ** 2) * rho(s)

    def den(s):
        return psi(s) ** 2 * rho(s)

    cuts = sorted({0.0, 1.0 * chart.scale, 4.0 * chart.scale, sigma, 3.0 * sigma, span})
    cuts = [c for c in cuts if c <= span]
    # the energy integrand can cancel to near zero on a piece; bound its error
    # absolutely by the piece's norm times an energy scale
    e_scale = k / min(sigma, chart.scale) ** 2
    top = bot = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        for lo, hi in ((a, b), (-b, -a)):
            norm = quad(den, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
            top += quad(num, lo, hi, epsabs=1e-12 * norm * e_scale, epsrel=1e-12, limit=200)[0]
            bot += norm
    return top / bot


def variational_bound(chart: SurfaceChart, units: PhysicalUnits = NATURAL,
                      potential: str = "dacosta", sigmas=None, T: float | None = None
                      ) -> tuple[float, float]:
    """Smallest Gaussian Rayleigh quotient over ``sigmas``; returns (energy, sigma).

    With ``T`` the trial states are the boxed ones, bounding the truncated problem.
    """
    if sigmas is None:
        sigmas = chart.scale * np.logspace(0.0, 1.5, 10)
    best = min((gaussian_rayleigh_quotient(chart, float(s), units, potential, T), float(s))
               for s in sigmas)
    return best
