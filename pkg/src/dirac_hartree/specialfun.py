"""Bessel functions of the first kind and the root tables built on them.

Everything here is self-contained: no external special-function library is
used, so the rest of the package can be checked against this layer.

Evaluation uses the ascending power series for small arguments and Miller's
backward recurrence, normalised with the sum rule
``J_0 + 2 * sum_k J_{2k} = 1``, elsewhere.  Both run in extended precision
(``numpy.longdouble``) and are rounded to float64 on return.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ORDER = 64
MAX_ARG = 200.0

SERIES_MAX_ARG = 12.0
SCAN_STEP = 0.1
BISECT_TOL = 1e-14
COARSE_WIDTH = 1e-3
MAX_REFINE = 60
RESIDUAL_FLOOR = 1e-17
ROOT_RESIDUAL_TOL = 1e-12

_RESCALE = np.longdouble("1e1000")


class BesselDomainError(ValueError):
    """Order or argument outside the supported range."""


class RootBracketError(RuntimeError):
    """A root could not be bracketed or refined to the required residual."""


def _check_domain(m: int, x: np.ndarray) -> None:
    if abs(m) > MAX_ORDER:
        raise BesselDomainError(f"order {m} outside |m| <= {MAX_ORDER}")
    if x.size and (np.any(~np.isfinite(x)) or x.min() < 0 or x.max() > MAX_ARG):
        raise BesselDomainError(f"argument outside [0, {MAX_ARG}]")


def _series(m: int, x: np.ndarray) -> np.ndarray:
    """Ascending series sum_k (-1)^k (x/2)^(2k+m) / (k! (k+m)!), m >= 0."""
    x = np.asarray(x, dtype=np.longdouble)
    half = x / 2
    q = -(half * half)
    term = np.ones_like(x)
    for i in range(1, m + 1):
        term = term * half / i
    total = term.copy()
    eps = np.finfo(np.longdouble).eps
    k = 0
    while k < 200:
        for _ in range(8):
            k += 1
            term = term * q / (k * (k + m))
            total += term
        if np.all(np.abs(term) <= eps * np.abs(total)):
            break
    return total


def _miller(nmax: int, x: np.ndarray) -> np.ndarray:
    """J_0..J_nmax at positive x by backward recurrence; shape (nmax+1,) + x.shape."""
    x = np.asarray(x, dtype=np.longdouble)
    xmax = float(x.max()) if x.size else 0.0
    start = int(max(nmax, xmax) + 40 + 12 * np.cbrt(xmax))
    start += start % 2
    out = np.zeros((nmax + 1,) + x.shape, dtype=np.longdouble)
    j_next = np.zeros_like(x)
    j = np.full_like(x, np.longdouble("1e-30"))
    norm = np.zeros_like(x)
    two_over_x = 2 / x
    for n in range(start, 0, -1):
        j_prev = n * two_over_x * j - j_next
        j_next, j = j, j_prev
        if n - 1 <= nmax:
            out[n - 1] = j
        if (n - 1) % 2 == 0 and n > 1:
            norm += 2 * j
        if n % 16:
            continue
        big = np.abs(j) > _RESCALE
        if np.any(big):
            scale = np.where(big, 1 / _RESCALE, np.longdouble(1))
            j *= scale
            j_next *= scale
            norm *= scale
            out *= scale
    norm += j
    return out / norm


def _orders_nonneg(nmax: int, x: np.ndarray, orders=None) -> np.ndarray:
    """J_0..J_nmax (extended precision) for x >= 0 of any shape.

    With ``orders`` given, only those rows are filled on the series branch.
    """
    x = np.asarray(x, dtype=np.longdouble)
    out = np.zeros((nmax + 1,) + x.shape, dtype=np.longdouble)
    zero = x == 0
    small = (~zero) & (x <= SERIES_MAX_ARG)
    large = x > SERIES_MAX_ARG
    out[0][zero] = 1
    if np.any(small):
        xs = x[small]
        for m in (range(nmax + 1) if orders is None else orders):
            out[m][small] = _series(m, xs)
    if np.any(large):
        out[:, large] = _miller(nmax, x[large])
    return out


def _pair(m: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(J_m(x), J_{m+1}(x)) in float64, any integer m."""
    om, sm = _reflect(m)
    on, sn = _reflect(m + 1)
    top = max(om, on)
    _check_domain(top, x)
    J = _orders_nonneg(top, x, orders=(om, on))
    return sm * J[om].astype(float), sn * J[on].astype(float)


def bessel_j_orders(nmax: int, x) -> np.ndarray:
    """Values J_0(x), ..., J_nmax(x) for every entry of ``x``.

    Returns an array of shape ``(nmax + 1,) + x.shape`` in float64.
    """
    x = np.asarray(x, dtype=float)
    _check_domain(nmax, x)
    return _orders_nonneg(nmax, x).astype(float)


def _reflect(m: int) -> tuple[int, float]:
    """J_{-m} = (-1)^m J_m."""
    if m >= 0:
        return m, 1.0
    return -m, -1.0 if m % 2 else 1.0


def bessel_j_array(m: int, x) -> np.ndarray:
    """J_m at each entry of ``x``; negative orders via reflection."""
    x = np.asarray(x, dtype=float)
    order, sign = _reflect(m)
    _check_domain(order, x)
    return sign * _orders_nonneg(order, x, orders=(order,))[order].astype(float)


def bessel_j(m: int, x: float) -> float:
    """Bessel function of the first kind J_m(x) for integer m, 0 <= x <= 200."""
    if int(m) != m:
        raise BesselDomainError(f"non-integer order {m!r}")
    return float(bessel_j_array(int(m), np.array([float(x)]))[0])


def bessel_j_series(m: int, x) -> np.ndarray:
    """Power-series-only evaluation; accurate for small arguments (x <~ 12)."""
    x = np.asarray(x, dtype=float)
    order, sign = _reflect(m)
    _check_domain(order, x)
    return sign * _series(order, x).astype(float)


@dataclass(frozen=True)
class RootTable:
    """Ascending positive roots of a Bessel secular function.

    ``family`` is one of ``"dirichlet"``, ``"dirac_plus"``, ``"dirac_minus"``.
    """

    family: str
    order: int
    roots: tuple[float, ...]
    residuals: tuple[float, ...]

    def __post_init__(self):
        r = np.asarray(self.roots)
        if r.size and (r[0] <= 0 or np.any(np.diff(r) <= 0)):
            raise RootBracketError(f"{self.family}({self.order}): roots not strictly increasing")

    def __len__(self) -> int:
        return len(self.roots)

    def __getitem__(self, i):
        return self.roots[i]

    def as_array(self) -> np.ndarray:
        return np.array(self.roots)


def secular_function(family: str, m: int):
    """Vectorised secular function whose positive zeros define the family."""
    if family == "dirichlet":
        return lambda x: bessel_j_array(m, x)
    if family not in ("dirac_plus", "dirac_minus"):
        raise ValueError(f"unknown root family {family!r}")
    s = 1.0 if family == "dirac_plus" else -1.0

    def f(x):
        jm, jm1 = _pair(m, np.asarray(x, dtype=float))
        return jm - s * jm1

    return f


def _find_roots(f, count: int, label: str) -> tuple[np.ndarray, np.ndarray]:
    if count < 1:
        raise ValueError("count must be >= 1")
    # uniform scan from the origin; the origin itself is never reported
    nsteps = int(round(MAX_ARG / SCAN_STEP))
    grid = SCAN_STEP * np.arange(1, nsteps + 1)
    lo_list: list[float] = []
    hi_list: list[float] = []
    chunk = 400
    fprev = None
    xprev = None
    for start in range(0, nsteps, chunk):
        xs = grid[start:start + chunk]
        fs = f(xs)
        if fprev is not None:
            xs_all = np.concatenate([[xprev], xs])
            fs_all = np.concatenate([[fprev], fs])
        else:
            xs_all, fs_all = xs, fs
        exact = np.nonzero(fs_all[1:] == 0)[0]
        change = np.nonzero(np.sign(fs_all[:-1]) * np.sign(fs_all[1:]) < 0)[0]
        for i in sorted(set(change) | set(exact)):
            lo_list.append(xs_all[i])
            hi_list.append(xs_all[i + 1])
        xprev, fprev = xs[-1], fs[-1]
        if len(lo_list) >= count:
            break
    if len(lo_list) < count:
        raise RootBracketError(
            f"{label}: found {len(lo_list)} of {count} roots in (0, {MAX_ARG}]"
        )
    lo = np.array(lo_list[:count])
    hi = np.array(hi_list[:count])
    flo = f(lo)
    fhi = f(hi)
    # a few bisection steps, then Illinois (regula falsi with endpoint
    # down-weighting) on all brackets at once; the bracket is kept throughout
    while np.any(hi - lo > COARSE_WIDTH):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        left = np.sign(fmid) == np.sign(flo)
        lo, flo = np.where(left, mid, lo), np.where(left, fmid, flo)
        hi, fhi = np.where(left, hi, mid), np.where(left, fhi, fmid)
    best = np.where(np.abs(flo) <= np.abs(fhi), lo, hi)
    fbest = np.minimum(np.abs(flo), np.abs(fhi))
    side = np.zeros(lo.shape, dtype=int)
    ga, gb = flo.copy(), fhi.copy()  # weighted endpoint values
    for _ in range(MAX_REFINE):
        active = (fbest > RESIDUAL_FLOOR) & (hi - lo > BISECT_TOL)
        if not np.any(active):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            x = (lo * gb - hi * ga) / (gb - ga)
        bad = ~((x > lo) & (x < hi))
        x = np.where(bad, 0.5 * (lo + hi), x)
        fx = f(x)
        stalled = active & ((x == lo) | (x == hi))
        active &= ~stalled
        improve = active & (np.abs(fx) < fbest)
        best = np.where(improve, x, best)
        fbest = np.where(improve, np.abs(fx), fbest)
        left = active & (np.sign(fx) == np.sign(flo))
        right = active & ~left
        # Illinois: halve the stale endpoint when the same side moves twice
        ga = np.where(left, fx, np.where(right & (side == 1), 0.5 * ga, ga))
        gb = np.where(right, fx, np.where(left & (side == -1), 0.5 * gb, gb))
        lo, flo = np.where(left, x, lo), np.where(left, fx, flo)
        hi, fhi = np.where(right, x, hi), np.where(right, fx, fhi)
        side = np.where(left, -1, np.where(right, 1, side))
        if not np.any(active):
            break
    roots = best
    resid = np.abs(f(roots))
    bad = np.nonzero(resid > ROOT_RESIDUAL_TOL)[0]
    if bad.size:
        i = bad[0]
        raise RootBracketError(
            f"{label}: root {i + 1} in bracket [{lo_list[i]:.3f}, {hi_list[i]:.3f}] "
            f"has residual {resid[i]:.3e}"
        )
    return roots, resid


def dirichlet_roots(m: int, count: int) -> RootTable:
    """First ``count`` positive zeros j_{m,n} of J_m."""
    if m < 0:
        raise BesselDomainError("Dirichlet order must be >= 0")
    _check_domain(m, np.zeros(0))
    roots, resid = _find_roots(secular_function("dirichlet", m), count, f"J_{m}")
    return RootTable("dirichlet", m, tuple(roots.tolist()), tuple(resid.tolist()))


def dirac_secular_roots(m: int, sign: int, count: int) -> RootTable:
    """First ``count`` positive roots of J_m(k) - sign * J_{m+1}(k).

    ``sign`` is +1 for the positive-energy channel and -1 for the negative one.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    _check_domain(max(abs(m), abs(m + 1)), np.zeros(0))
    family = "dirac_plus" if sign > 0 else "dirac_minus"
    label = f"J_{m} {'-' if sign > 0 else '+'} J_{m + 1}"
    roots, resid = _find_roots(secular_function(family, m), count, label)
    return RootTable(family, m, tuple(roots.tolist()), tuple(resid.tolist()))
