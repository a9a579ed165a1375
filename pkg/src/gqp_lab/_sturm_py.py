"""Pure-Python/NumPy fallback for the Sturm kernels in ``_sturm_ext``.

Same signatures.  Bisection runs on all requested eigenvalues at once, with
the recurrence looping over matrix rows and NumPy vectorising over shifts.
"""
import numpy as np

PIVMIN = 1e-290
_ALPHA = 0.6180339887498949


def _fix(q):
    return np.where(np.abs(q) < PIVMIN, -PIVMIN, q)


def _counts(d, e, corner, x):
    x = np.asarray(x, dtype=float)
    n = d.shape[0]
    q = _fix(d[0] - x)
    neg = (q < 0).astype(np.int64)
    if corner == 0.0 or n < 3:
        for i in range(1, n):
            q = _fix(d[i] - x - e[i - 1] * e[i - 1] / q)
            neg += q < 0
        return neg
    # cyclic: block LDL^T of the leading (n-1) block with Bunch 2x2 pivots, carried
    # row by row so every shift follows its own pivot sequence
    shape = x.shape
    x = np.atleast_1d(x)
    m = n - 1
    sigma = np.maximum(np.maximum(np.abs(d.max() - x), np.abs(d.min() - x)),
                       max(float(np.abs(e).max()), abs(corner)))
    q = d[0] - x
    neg = np.zeros(x.shape, dtype=np.int64)
    f = np.full_like(x, corner)
    schur = d[n - 1] - x
    pending = np.zeros(x.shape, dtype=bool)
    qp = np.zeros_like(x)
    fp = np.zeros_like(x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for i in range(m):
            col = e[n - 2] if i == n - 2 else (corner if i == 0 else 0.0)
            ei = e[i] if i < m - 1 else 0.0
            q_next = np.zeros_like(x)
            f_next = np.zeros_like(x)
            # second row of a 2x2 block
            P = pending
            if np.any(P):
                ep = e[i - 1]
                p = d[i] - x[P]
                det = qp[P] * p - ep * ep
                neg[P] += 1
                schur[P] -= (p * fp[P] ** 2 - 2.0 * ep * fp[P] * col + qp[P] * col * col) / det
                if i + 1 <= m - 1:
                    c_next = e[n - 2] if i + 1 == n - 2 else 0.0
                    q_next[P] = d[i + 1] - x[P] - ei * ei * qp[P] / det
                    f_next[P] = c_next - ei * (qp[P] * col - ep * fp[P]) / det
            # new pivot
            R = ~P
            two = R & (np.abs(q) * sigma < _ALPHA * ei * ei) if i < m - 1 else np.zeros_like(R)
            one = R & ~two
            qp = np.where(two, q, qp)
            fp = np.where(two, f, fp)
            if np.any(one):
                qq = _fix(q[one])
                neg[one] += qq < 0
                ff = f[one]
                schur[one] -= ff * (ff / qq)
                if i + 1 <= m - 1:
                    c_next = e[n - 2] if i + 1 == n - 2 else 0.0
                    f_next[one] = c_next - ei * (ff / qq)
                    q_next[one] = d[i + 1] - x[one] - ei * (ei / qq)
            pending = two
            q, f = q_next, f_next
    schur = _fix(schur)
    return (neg + (schur < 0)).reshape(shape)


def sturm_count(d, e, corner, x):
    """Number of eigenvalues strictly below ``x``."""
    return int(_counts(np.asarray(d, float), np.asarray(e, float), float(corner), float(x)))


def lowest_eigenvalues(d, e, corner, k, lo, hi, tol):
    d = np.asarray(d, float)
    e = np.asarray(e, float)
    a = np.full(k, float(lo))
    b = np.full(k, float(hi))
    target = np.arange(1, k + 1)
    while True:
        active = (b - a) > tol
        mid = 0.5 * (a + b)
        active &= (mid > a) & (mid < b)
        if not np.any(active):
            break
        c = _counts(d, e, corner, mid[active])
        upper = c >= target[active]
        ia = np.flatnonzero(active)
        b[ia[upper]] = mid[active][upper]
        a[ia[~upper]] = mid[active][~upper]
    return 0.5 * (a + b)
