"""Symmetric tridiagonal eigenvalues by Sturm-sequence bisection.

The kernels live in the compiled ``_sturm_ext`` module when it was built, and
in ``_sturm_py`` otherwise.  Set ``GQP_LAB_PURE_PYTHON=1`` to force the
fallback.  ``BACKEND`` names the one in use.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _sturm_py
from .errors import InvalidInputError

_ext = None
if not os.environ.get("GQP_LAB_PURE_PYTHON"):
    try:
        from . import _sturm_ext as _ext
    except ImportError:
        _ext = None

BACKEND = "cython" if _ext is not None else "python"
_BACKENDS = {"python": _sturm_py}
if _ext is not None:
    _BACKENDS["cython"] = _ext

_EPS = np.finfo(float).eps


def available_backends() -> tuple[str, ...]:
    return tuple(_BACKENDS)


def _kernel(backend):
    if backend is None:
        backend = BACKEND
    try:
        return _BACKENDS[backend]
    except KeyError:
        raise InvalidInputError(f"backend {backend!r} not available; have {available_backends()}") from None


@dataclass(frozen=True)
class SymTridiagonal:
    """Symmetric tridiagonal matrix, optionally closed cyclically.

    ``corner`` is the (0, n-1) entry; nonzero only for periodic closure.
    """

    diag: np.ndarray
    off: np.ndarray
    corner: float = 0.0

    def __post_init__(self):
        d = np.ascontiguousarray(self.diag, dtype=np.float64)
        e = np.ascontiguousarray(self.off, dtype=np.float64)
        if d.ndim != 1 or e.ndim != 1 or e.size != max(d.size - 1, 0):
            raise InvalidInputError("off-diagonal must have length n - 1")
        if self.corner != 0.0 and d.size < 3:
            raise InvalidInputError("cyclic closure needs n >= 3")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "off", e)
        object.__setattr__(self, "corner", float(self.corner))

    @property
    def n(self) -> int:
        return self.diag.size

    def gershgorin(self) -> tuple[float, float]:
        r = np.zeros(self.n)
        r[:-1] += np.abs(self.off)
        r[1:] += np.abs(self.off)
        if self.corner:
            r[0] += abs(self.corner)
            r[-1] += abs(self.corner)
        return float(np.min(self.diag - r)), float(np.max(self.diag + r))

    def norm(self) -> float:
        lo, hi = self.gershgorin()
        return max(abs(lo), abs(hi), 1e-300)

    def tosparse(self):
        m = sp.diags([self.off, self.diag, self.off], [-1, 0, 1], format="lil")
        if self.corner:
            m[0, self.n - 1] = self.corner
            m[self.n - 1, 0] = self.corner
        return m.tocsc()

    def toarray(self) -> np.ndarray:
        return self.tosparse().toarray()


def _unit_scaled(matrix: SymTridiagonal):
    """Entries scaled by the power of two bringing ||A|| near 1 (exact), and that exponent.

    Keeps the kernels' fixed pivot floor and the squared couplings away from
    underflow and overflow whatever the matrix scale.
    """
    norm = matrix.norm()
    shift = -int(np.frexp(norm)[1]) if norm > 0 else 0
    return (np.ldexp(matrix.diag, shift), np.ldexp(matrix.off, shift),
            float(np.ldexp(matrix.corner, shift)), shift)


def count_below(matrix: SymTridiagonal, x: float, backend: str | None = None) -> int:
    """Number of eigenvalues strictly below ``x`` (Sylvester inertia)."""
    d, off, corner, shift = _unit_scaled(matrix)
    return int(_kernel(backend).sturm_count(d, off, corner, float(np.ldexp(float(x), shift))))


def eigen_lowest(matrix: SymTridiagonal, k: int, vectors: bool = False,
                 backend: str | None = None, rtol: float = 4.0 * _EPS):
    """The ``k`` smallest eigenvalues, ascending; optionally with unit eigenvectors.

    Bisection stops at an absolute width of ``rtol * ||A||``.
    """
    if k < 0 or k > matrix.n:
        raise InvalidInputError(f"k={k} outside [0, {matrix.n}]")
    if k == 0:
        vals = np.empty(0)
        return (vals, np.empty((matrix.n, 0))) if vectors else vals
    lo, hi = matrix.gershgorin()
    # bisect on a copy scaled to unit norm
    d, off, corner, shift = _unit_scaled(matrix)
    slo, shi = np.ldexp(lo, shift), np.ldexp(hi, shift)
    scale = float(np.ldexp(matrix.norm(), shift))
    pad = 2.0 * _EPS * scale + 1e-300
    tol = max(rtol * scale, 2.0 * _EPS * scale)
    vals = np.asarray(
        _kernel(backend).lowest_eigenvalues(d, off, corner, int(k), slo - pad, shi + pad, tol),
        dtype=float,
    )
    vals = np.ldexp(vals, -shift)
    # every eigenvalue lies in the Gershgorin interval; clipping removes the bracket
    # padding, and sorting orders estimates of a cluster narrower than the tolerance
    vals = np.sort(np.clip(vals, lo, hi))
    if not vectors:
        return vals
    return vals, _inverse_iteration(matrix, vals)


def _inverse_iteration(matrix: SymTridiagonal, vals: np.ndarray, iters: int = 3) -> np.ndarray:
    A = matrix.tosparse()
    n = matrix.n
    eye = sp.identity(n, format="csc")
    rng = np.random.default_rng(12345)
    scale = matrix.norm()
    out = np.zeros((n, vals.size))
    for j, lam in enumerate(vals):
        shift = lam - 1e3 * _EPS * scale
        lu = spla.splu((A - shift * eye).tocsc())
        x = rng.standard_normal(n)
        for _ in range(iters):
            # keep degenerate partners orthogonal
            for i in range(j):
                if abs(vals[i] - lam) <= 1e-8 * scale:
                    x -= out[:, i] * (out[:, i] @ x)
            x = lu.solve(x)
            x /= np.linalg.norm(x)
        for i in range(j):
            if abs(vals[i] - lam) <= 1e-8 * scale:
                x -= out[:, i] * (out[:, i] @ x)
        out[:, j] = x / np.linalg.norm(x)
    return out
