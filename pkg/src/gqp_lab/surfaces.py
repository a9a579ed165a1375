"""Analytic surface charts and their pointwise differential geometry.

Every built-in surface is a surface of revolution

    X(u, v) = (rho(v) cos u, rho(v) sin u, z(v)),

with ``u`` the azimuth (periodic, length 2*pi) and ``v`` the meridian
parameter of the profile curve.  The normal is ``n = X_u x X_v / |X_u x X_v|``,
which for the sphere and torus charts below points outward.  With the second
fundamental form ``b_ij = n . X_ij`` an outward normal on a convex surface
gives negative principal curvatures.

All functions are vectorised: ``u`` and ``v`` may be scalars or arrays of any
broadcastable shape, and every returned field carries that shape (vectors an
extra trailing axis of length 3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import InvalidInputError, IrregularPointError, OutOfDomainError

TWO_PI = 2.0 * math.pi
_EPS = np.finfo(float).eps

KINDS = ("plane", "sphere", "catenoid", "torus", "bilayer-neck", "revolution-custom")

# Profile callables return (rho, rho_t, rho_tt, z, z_t, z_tt) at meridian parameter t.
ProfileFn = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class Profile:
    """Meridian curve of a surface of revolution.

    ``arclength`` and ``inverse_arclength`` are optional closed forms for the
    signed arclength measured from ``origin``; when absent the spectral code
    integrates the meridian speed numerically.
    """

    curve: ProfileFn
    origin: float = 0.0
    arclength: Callable[[np.ndarray], np.ndarray] | None = None
    inverse_arclength: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class SurfaceChart:
    kind: str
    params: Mapping[str, float]
    u_domain: tuple[float, float]
    v_domain: tuple[float, float]
    periodic_u: bool
    periodic_v: bool
    profile: Profile = field(repr=False, compare=False)
    scale: float = 1.0
    euler_characteristic: int | None = None
    # meridian ends that sit on the rotation axis (rho -> 0)
    axis_ends: tuple[bool, bool] = (False, False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown surface kind {self.kind!r}")
        for name, value in self.params.items():
            if not (math.isfinite(value) and value > 0):
                raise InvalidInputError(f"parameter {name} must be finite and > 0, got {value!r}")
        for flag, dom, name in ((self.periodic_u, self.u_domain, "u"),
                                (self.periodic_v, self.v_domain, "v")):
            if flag and not math.isclose(dom[1] - dom[0], TWO_PI, rel_tol=0, abs_tol=1e-14):
                raise InvalidInputError(f"periodic {name}-domain must have length 2*pi")
            if dom[0] >= dom[1]:
                raise InvalidInputError(f"empty {name}-domain {dom}")

    @property
    def compact(self) -> bool:
        return self.euler_characteristic is not None

    @property
    def axisymmetric(self) -> bool:
        return self.periodic_u and self.profile is not None


@dataclass(frozen=True)
class SurfacePoint:
    u: np.ndarray
    v: np.ndarray
    position: np.ndarray
    d_u: np.ndarray
    d_v: np.ndarray
    d_uu: np.ndarray
    d_uv: np.ndarray
    d_vv: np.ndarray


@dataclass(frozen=True)
class CurvatureData:
    kappa1: np.ndarray
    kappa2: np.ndarray
    H: np.ndarray
    K: np.ndarray
    n: np.ndarray
    sqrt_g: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    b11: np.ndarray
    b12: np.ndarray
    b22: np.ndarray
    # (kappa1 - kappa2)^2 / 4, snapped to exactly 0 at numerically umbilic points
    discriminant: np.ndarray


@dataclass(frozen=True)
class SigmaDensities:
    """Normal-field densities at surface points.

    The geometric fields come from :func:`sigma_densities`; the potential
    fields (``V_*``, ``p_sq``, ``decomposition_residual``) stay ``None`` until
    :func:`gqp_lab.potential.sigma_decomposition` fills them in.
    """

    grad_n_sq: np.ndarray
    div_n: np.ndarray
    div_n_sq: np.ndarray
    n_lap_n: np.ndarray
    degree_density: np.ndarray
    identity_grad_n_sq: np.ndarray
    identity_div_n: np.ndarray
    V_dacosta: np.ndarray | None = None
    V_paper7: np.ndarray | None = None
    V_paper8: np.ndarray | None = None
    V_corrected: np.ndarray | None = None
    p_sq: np.ndarray | None = None
    decomposition_residual: np.ndarray | None = None


# ---------------------------------------------------------------------------
# built-in profiles

def _plane_curve(t):
    one = np.ones_like(t)
    zero = np.zeros_like(t)
    return t, one, zero, zero, zero, zero


def _sphere_curve(a):
    def curve(t):
        c, s = np.cos(t), np.sin(t)
        return a * c, -a * s, -a * c, a * s, a * c, -a * s
    return curve


def _catenoid_curve(c):
    def curve(t):
        ch, sh = np.cosh(t / c), np.sinh(t / c)
        one = np.ones_like(t)
        zero = np.zeros_like(t)
        return c * ch, sh, ch / c, t, one, zero
    return curve


def _torus_curve(R, r):
    def curve(t):
        c, s = np.cos(t), np.sin(t)
        return R + r * c, -r * s, -r * c, r * s, r * c, -r * s
    return curve


def _bilayer_curve(Rb, h):
    def curve(t):
        q = np.sqrt(Rb * Rb + t * t)
        q3 = q ** 3
        return (q, t / q, Rb * Rb / q3,
                h * t / q, h * Rb * Rb / q3, -3.0 * h * Rb * Rb * t / (q3 * q * q))
    return curve


def plane() -> SurfaceChart:
    """Flat plane in polar form; ``v`` is the radius."""
    return SurfaceChart(
        kind="plane", params={}, u_domain=(0.0, TWO_PI), v_domain=(0.0, math.inf),
        periodic_u=True, periodic_v=False,
        profile=Profile(_plane_curve, origin=0.0, arclength=lambda t: t, inverse_arclength=lambda s: s),
        scale=1.0, axis_ends=(True, False),
    )


def sphere(a: float = 1.0) -> SurfaceChart:
    """Sphere of radius ``a``; ``v`` is the latitude, so ``(u, v) = (0, 0)`` is (a, 0, 0)."""
    half = 0.5 * math.pi
    return SurfaceChart(
        kind="sphere", params={"a": a}, u_domain=(0.0, TWO_PI), v_domain=(-half, half),
        periodic_u=True, periodic_v=False,
        profile=Profile(_sphere_curve(a), origin=-half,
                        arclength=lambda t: a * (t + half),
                        inverse_arclength=lambda s: s / a - half),
        scale=a, euler_characteristic=2, axis_ends=(True, True),
    )


def catenoid(c: float = 1.0) -> SurfaceChart:
    """Catenoid with throat radius ``c``: (c cosh(v/c) cos u, c cosh(v/c) sin u, v)."""
    return SurfaceChart(
        kind="catenoid", params={"c": c}, u_domain=(0.0, TWO_PI), v_domain=(-math.inf, math.inf),
        periodic_u=True, periodic_v=False,
        profile=Profile(_catenoid_curve(c), origin=0.0,
                        arclength=lambda t: c * np.sinh(t / c),
                        inverse_arclength=lambda s: c * np.arcsinh(s / c)),
        scale=c,
    )


def torus(R: float = 2.0, r: float = 1.0) -> SurfaceChart:
    """Torus with centre-line radius ``R`` and tube radius ``r``; ``v`` is the tube angle."""
    if not R > r:
        raise InvalidInputError(f"torus requires R > r, got R={R}, r={r}")
    return SurfaceChart(
        kind="torus", params={"R": R, "r": r}, u_domain=(0.0, TWO_PI), v_domain=(-math.pi, math.pi),
        periodic_u=True, periodic_v=True,
        profile=Profile(_torus_curve(R, r), origin=0.0,
                        arclength=lambda t: r * t, inverse_arclength=lambda s: s / r),
        scale=r, euler_characteristic=0,
    )


def bilayer_neck(Rb: float = 1.0, h: float = 1.0) -> SurfaceChart:
    """Two sheets asymptotic to the planes z = +-h, joined by a neck of waist radius ``Rb``.

    Profile: rho(t) = sqrt(Rb^2 + t^2), z(t) = h t / sqrt(Rb^2 + t^2).
    """
    return SurfaceChart(
        kind="bilayer-neck", params={"Rb": Rb, "h": h}, u_domain=(0.0, TWO_PI),
        v_domain=(-math.inf, math.inf), periodic_u=True, periodic_v=False,
        profile=Profile(_bilayer_curve(Rb, h), origin=0.0), scale=Rb,
    )


def revolution(curve: ProfileFn, v_domain: tuple[float, float], *, periodic_v: bool = False,
               origin: float = 0.0, scale: float = 1.0, euler_characteristic: int | None = None,
               axis_ends: tuple[bool, bool] = (False, False),
               params: Mapping[str, float] | None = None) -> SurfaceChart:
    """User-supplied surface of revolution.  ``curve(t)`` must return
    ``(rho, rho_t, rho_tt, z, z_t, z_tt)`` as arrays."""
    return SurfaceChart(
        kind="revolution-custom", params=dict(params or {}), u_domain=(0.0, TWO_PI),
        v_domain=tuple(v_domain), periodic_u=True, periodic_v=periodic_v,
        profile=Profile(curve, origin=origin), scale=scale,
        euler_characteristic=euler_characteristic, axis_ends=axis_ends,
    )


_BUILDERS = {
    "plane": (plane, ()),
    "sphere": (sphere, ("a",)),
    "catenoid": (catenoid, ("c",)),
    "torus": (torus, ("R", "r")),
    "bilayer-neck": (bilayer_neck, ("Rb", "h")),
}

DEFAULT_PARAMS = {
    "plane": {},
    "sphere": {"a": 1.0},
    "catenoid": {"c": 1.0},
    "torus": {"R": 2.0, "r": 1.0},
    "bilayer-neck": {"Rb": 1.0, "h": 1.0},
}

# published semiclassical lower bounds on the number of states of the reference geometries
PAPER_STATE_BOUND = {"catenoid": 4, "bilayer-neck": 4, "torus": 8}


def surface_parameters(kind: str) -> tuple[str, ...]:
    try:
        return _BUILDERS[kind][1]
    except KeyError:
        raise InvalidInputError(f"unknown built-in surface {kind!r}") from None


def make_chart(kind: str, **params: float) -> SurfaceChart:
    """Build a built-in chart by name, filling unspecified parameters with defaults."""
    builder, names = _BUILDERS.get(kind, (None, None))
    if builder is None:
        raise InvalidInputError(f"unknown built-in surface {kind!r}; choose from {sorted(_BUILDERS)}")
    extra = set(params) - set(names)
    if extra:
        raise InvalidInputError(f"surface {kind!r} takes no parameter(s) {sorted(extra)}")
    full = dict(DEFAULT_PARAMS[kind])
    full.update({k: float(v) for k, v in params.items() if v is not None})
    return builder(**full)


# ---------------------------------------------------------------------------
# evaluation

def _reduce(x, lo, periodic):
    if periodic:
        return lo + np.mod(x - lo, TWO_PI)
    return x


def _check_domain(x, dom, name):
    bad = ~np.isfinite(x) | (x < dom[0]) | (x > dom[1])
    if np.any(bad):
        first = np.asarray(x)[bad].flat[0]
        raise OutOfDomainError(f"{name}={first!r} outside chart domain {dom}")


def evaluate(chart: SurfaceChart, u, v) -> SurfacePoint:
    """Position and first/second partial derivatives at chart coordinates."""
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    u = _reduce(u, chart.u_domain[0], chart.periodic_u)
    v = _reduce(v, chart.v_domain[0], chart.periodic_v)
    if not chart.periodic_u:
        _check_domain(u, chart.u_domain, "u")
    if not chart.periodic_v:
        _check_domain(v, chart.v_domain, "v")

    rho, rho_t, rho_tt, z, z_t, z_tt = (np.broadcast_to(a, v.shape) for a in chart.profile.curve(v))
    cu, su = np.cos(u), np.sin(u)
    zero = np.zeros_like(v)

    def vec(x, y, zz):
        return np.stack(np.broadcast_arrays(x, y, zz), axis=-1)

    pt = SurfacePoint(
        u=u, v=v,
        position=vec(rho * cu, rho * su, z),
        d_u=vec(-rho * su, rho * cu, zero),
        d_v=vec(rho_t * cu, rho_t * su, z_t),
        d_uu=vec(-rho * cu, -rho * su, zero),
        d_uv=vec(-rho_t * su, rho_t * cu, zero),
        d_vv=vec(rho_tt * cu, rho_tt * su, z_tt),
    )
    normal = np.linalg.norm(np.cross(pt.d_u, pt.d_v), axis=-1)
    irregular = normal <= 1e-12 * chart.scale ** 2
    if np.any(irregular):
        where = (np.asarray(u)[irregular].flat[0], np.asarray(v)[irregular].flat[0])
        raise IrregularPointError(f"d_u x d_v vanishes at (u, v) = {where}")
    return pt


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def curvatures(point: SurfacePoint) -> CurvatureData:
    """Fundamental forms, unit normal and principal curvatures (kappa1 >= kappa2)."""
    N = np.cross(point.d_u, point.d_v)
    sqrt_g = np.linalg.norm(N, axis=-1)
    if np.any(sqrt_g == 0):
        raise IrregularPointError("d_u x d_v vanishes")
    n = N / sqrt_g[..., None]
    E = _dot(point.d_u, point.d_u)
    F = _dot(point.d_u, point.d_v)
    G = _dot(point.d_v, point.d_v)
    b11 = _dot(n, point.d_uu)
    b12 = _dot(n, point.d_uv)
    b22 = _dot(n, point.d_vv)
    det = sqrt_g * sqrt_g

    # shape operator S = I^{-1} II
    s11 = (G * b11 - F * b12) / det
    s12 = (G * b12 - F * b22) / det
    s21 = (E * b12 - F * b11) / det
    s22 = (E * b22 - F * b12) / det
    H = 0.5 * (s11 + s22)
    K = (b11 * b22 - b12 * b12) / det
    half_diff = 0.5 * (s11 - s22)
    disc = np.maximum(half_diff * half_diff + s12 * s21, 0.0)
    # umbilic snap: below rounding level of the shape-operator entries
    noise = (8.0 * _EPS * (np.abs(s11) + np.abs(s22) + np.abs(s12) + np.abs(s21))) ** 2
    disc = np.where(disc <= noise, 0.0, disc)
    root = np.sqrt(disc)
    return CurvatureData(
        kappa1=H + root, kappa2=H - root, H=H, K=K, n=n, sqrt_g=sqrt_g,
        E=E, F=F, G=G, b11=b11, b12=b12, b22=b22, discriminant=disc,
    )


def normal_derivatives(point: SurfacePoint, curv: CurvatureData) -> tuple[np.ndarray, np.ndarray]:
    """Analytic partial derivatives of the unit normal, from d(X_u x X_v)."""
    Nu = np.cross(point.d_uu, point.d_v) + np.cross(point.d_u, point.d_uv)
    Nv = np.cross(point.d_uv, point.d_v) + np.cross(point.d_u, point.d_vv)
    n = curv.n
    inv = 1.0 / curv.sqrt_g[..., None]
    n_u = (Nu - n * _dot(n, Nu)[..., None]) * inv
    n_v = (Nv - n * _dot(n, Nv)[..., None]) * inv
    return n_u, n_v


def sigma_densities(point: SurfacePoint, curv: CurvatureData) -> SigmaDensities:
    """(grad n)^2, div n and n . Lap n from the normal field itself.

    The curvature forms ``4H^2 - 2K`` and ``-2H`` are returned alongside so
    callers can check the two routes against each other.
    """
    n_u, n_v = normal_derivatives(point, curv)
    E, F, G = curv.E, curv.F, curv.G
    det = curv.sqrt_g * curv.sqrt_g
    grad_n_sq = (G * _dot(n_u, n_u) - 2.0 * F * _dot(n_u, n_v) + E * _dot(n_v, n_v)) / det
    div_n = (G * _dot(n_u, point.d_u) - F * (_dot(n_u, point.d_v) + _dot(n_v, point.d_u))
             + E * _dot(n_v, point.d_v)) / det
    degree_density = _dot(curv.n, np.cross(n_u, n_v))
    return SigmaDensities(
        grad_n_sq=grad_n_sq,
        div_n=div_n,
        div_n_sq=div_n * div_n,
        # |n| = 1  =>  n . Lap n = -(grad n)^2
        n_lap_n=-grad_n_sq,
        degree_density=degree_density,
        identity_grad_n_sq=4.0 * curv.H ** 2 - 2.0 * curv.K,
        identity_div_n=-2.0 * curv.H,
    )


def geometry(chart: SurfaceChart, u, v):
    """Convenience: (point, curvature, densities) in one call."""
    pt = evaluate(chart, u, v)
    cv = curvatures(pt)
    return pt, cv, sigma_densities(pt, cv)


def sample_points(chart: SurfaceChart, n: int, seed: int = 0, window: float = 3.0):
    """Uniform random chart coordinates; unbounded meridians are cut at ``window * scale``."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(chart.u_domain[0], chart.u_domain[1], n)
    lo, hi = chart.v_domain
    span = window * chart.scale
    lo = max(lo, -span)
    hi = min(hi, span)
    # keep away from axis points, where the chart is irregular
    pad = 1e-3 * (hi - lo)
    if chart.axis_ends[0]:
        lo += pad
    if chart.axis_ends[1]:
        hi -= pad
    v = rng.uniform(lo, hi, n)
    return u, v


def catenoid_polar_metric(chart: SurfaceChart, r):
    """Line-element coefficients (g_rr, g_phiphi / r^2) of a catenoid chart in polar form.

    Obtained from the chart's own metric via r = c cosh(v/c); for r >> c both
    tend to 1, the flat-plane values.
    """
    if chart.kind != "catenoid":
        raise InvalidInputError("polar metric is defined for catenoid charts only")
    c = chart.params["c"]
    r = np.asarray(r, dtype=float)
    if np.any(r <= c):
        raise OutOfDomainError("polar catenoid chart needs r > c")
    v = c * np.arccosh(r / c)
    cv = curvatures(evaluate(chart, 0.0, v))
    dr_dv = np.sinh(v / c)
    return cv.G / dr_dv ** 2, cv.E / r ** 2
