"""Geometric quantum potential and its normal-field (sigma-model) forms.

Four expressions are evaluated side by side:

* ``V_dacosta``   -(hbar^2/8m)(kappa1 - kappa2)^2, the canonical potential;
* ``V_corrected`` -(hbar^2/8m)[2 (grad n)^2 - (div n)^2], algebraically equal to it;
* ``V_paper7``    -(hbar^2/4m)[(grad n)^2 + (div n)^2];
* ``V_paper8``    -(hbar^2/2m)[(grad n)^2 + (div n)^2].

Only ``V_dacosta`` feeds the solvers.  The last two agree with it only on
minimal surfaces (``V_paper7``) or nowhere in general (``V_paper8``); the
discrepancy is measured, never patched.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import InvalidInputError
from .surfaces import CurvatureData, SigmaDensities, SurfaceChart, geometry


@dataclass(frozen=True)
class PhysicalUnits:
    """Defaults are natural units hbar = 1, 2m = 1."""

    hbar: float = 1.0
    mass: float = 0.5

    def __post_init__(self):
        for name in ("hbar", "mass"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def kinetic(self) -> float:
        """hbar^2 / 2m."""
        return self.hbar ** 2 / (2.0 * self.mass)

    def describe(self) -> dict:
        return {"hbar": self.hbar, "mass": self.mass, "hbar2_over_2m": self.kinetic}


NATURAL = PhysicalUnits()


def gqp(curv: CurvatureData, units: PhysicalUnits = NATURAL):
    """-(hbar^2/8m)(kappa1 - kappa2)^2; zero exactly at umbilic points."""
    c8 = units.hbar ** 2 / (8.0 * units.mass)
    # (kappa1 - kappa2)^2 = 4 * discriminant
    # + 0.0 turns -0.0 into 0.0
    return -c8 * 4.0 * curv.discriminant + 0.0


def sigma_decomposition(curv: CurvatureData, sigma: SigmaDensities,
                        units: PhysicalUnits = NATURAL) -> SigmaDensities:
    hb2 = units.hbar ** 2
    m = units.mass
    total = sigma.grad_n_sq + sigma.div_n_sq
    v_dc = gqp(curv, units)
    v_corr = -(hb2 / (8.0 * m)) * (2.0 * sigma.grad_n_sq - sigma.div_n_sq)
    return replace(
        sigma,
        V_dacosta=v_dc,
        V_paper7=-(hb2 / (4.0 * m)) * total,
        V_paper8=-(hb2 / (2.0 * m)) * total,
        V_corrected=v_corr,
        p_sq=-2.0 * m * v_dc,
        decomposition_residual=np.abs(v_dc - v_corr),
    )


def potential_fields(chart: SurfaceChart, u, v, units: PhysicalUnits = NATURAL):
    """Evaluate chart, curvatures and completed densities at (u, v)."""
    pt, cv, sd = geometry(chart, u, v)
    return pt, cv, sigma_decomposition(cv, sd, units)


@dataclass(frozen=True)
class DiscrepancyReport:
    n_samples: int
    max_abs_paper8: float
    mean_abs_paper8: float
    max_abs_paper7: float
    mean_abs_paper7: float
    max_abs_corrected: float
    mean_abs_corrected: float
    # pointwise |V_form - V_dacosta| / |V_dacosta| over samples with V_dacosta != 0
    max_rel_paper8: float | None
    max_rel_paper7: float | None
    max_rel_corrected: float | None
    # corrected residual relative to the local curvature scale (hbar^2/8m)(k1^2 + k2^2)
    max_scaled_corrected: float
    corrected_ok: bool
    # minimal-surface claim K = (grad n)^2, tested where div n vanishes
    minimal_points: int
    max_abs_K_minus_grad_n_sq: float | None
    mean_grad_n_sq_over_K: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def _rel(diff, ref):
    mask = ref != 0
    if not np.any(mask):
        return None
    return float(np.max(diff[mask] / np.abs(ref[mask])))


def discrepancy_report(chart: SurfaceChart, u, v, units: PhysicalUnits = NATURAL,
                       tol: float = 1e-10) -> DiscrepancyReport:
    """Compare the normal-field potential forms against the curvature form on sample points."""
    u = np.ravel(np.asarray(u, dtype=float))
    v = np.ravel(np.asarray(v, dtype=float))
    if u.size < 100:
        raise InvalidInputError(f"discrepancy report needs >= 100 samples, got {u.size}")
    _, cv, sd = potential_fields(chart, u, v, units)
    ref = sd.V_dacosta
    d8 = np.abs(sd.V_paper8 - ref)
    d7 = np.abs(sd.V_paper7 - ref)
    dc = sd.decomposition_residual
    c8 = units.hbar ** 2 / (8.0 * units.mass)
    scale = c8 * (cv.kappa1 ** 2 + cv.kappa2 ** 2)
    scaled = np.where(scale > 0, dc / np.where(scale > 0, scale, 1.0), dc)
    max_scaled = float(np.max(scaled))

    curv_scale = np.sqrt(cv.kappa1 ** 2 + cv.kappa2 ** 2)
    minimal = np.abs(sd.div_n) <= 1e-10 * np.maximum(curv_scale, 1e-300)
    minimal &= cv.K != 0
    if np.any(minimal):
        k_res = float(np.max(np.abs(cv.K[minimal] - sd.grad_n_sq[minimal])))
        ratio = float(np.mean(sd.grad_n_sq[minimal] / cv.K[minimal]))
    else:
        k_res = ratio = None

    return DiscrepancyReport(
        n_samples=int(u.size),
        max_abs_paper8=float(d8.max()), mean_abs_paper8=float(d8.mean()),
        max_abs_paper7=float(d7.max()), mean_abs_paper7=float(d7.mean()),
        max_abs_corrected=float(dc.max()), mean_abs_corrected=float(dc.mean()),
        max_rel_paper8=_rel(d8, ref), max_rel_paper7=_rel(d7, ref), max_rel_corrected=_rel(dc, ref),
        max_scaled_corrected=max_scaled,
        corrected_ok=bool(max_scaled <= tol),
        minimal_points=int(np.count_nonzero(minimal)),
        max_abs_K_minus_grad_n_sq=k_res,
        mean_grad_n_sq_over_K=ratio,
    )
