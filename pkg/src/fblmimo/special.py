"""Log-domain special functions and signed log-determinant primitives.

Every density evaluated in this package involves determinants, Gamma-function
products, and regularized incomplete Gamma values whose linear-domain
magnitudes span hundreds of orders of magnitude once the coherence interval
gets into the hundreds.  All of those quantities are therefore carried around
as (sign, log-magnitude) pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
import scipy.special as sp

__all__ = [
    "SignedLogReal",
    "log_gamma",
    "reg_inc_gamma_lower",
    "log_reg_inc_gamma_lower",
    "monomial_derivative",
    "log_monomial_derivative",
    "signed_logdet",
    "signed_logdet_from_logs",
    "balanced_mp_det",
]


def balanced_mp_det(w, n: int):
    """(det of the balanced mpmath matrix, ln of the extracted scale).

    mpmath's LU pivoting measures singularity against the largest entry, so a
    matrix whose entries span more digits than the working precision is
    declared singular outright.  Dividing each row and column by its largest
    magnitude removes the span; the extracted factors re-enter through their
    log.  Mutates ``w``.
    """
    logfac = mp.mpf(0)
    for i in range(n):
        s = max(abs(w[i, j]) for j in range(n))
        if s > 0:
            logfac += mp.log(s)
            for j in range(n):
                w[i, j] /= s
    for j in range(n):
        s = max(abs(w[i, j]) for i in range(n))
        if s > 0:
            logfac += mp.log(s)
            for i in range(n):
                w[i, j] /= s
    return mp.det(w), logfac

NEG_INF = float("-inf")


@dataclass(frozen=True)
class SignedLogReal:
    """A real number stored as sign and natural-log magnitude.

    ``sign`` is -1, 0 or +1; ``logmag`` is ``-inf`` exactly when ``sign`` is 0.
    """

    sign: int
    logmag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign}")
        if (self.sign == 0) != (self.logmag == NEG_INF):
            raise ValueError("sign=0 iff logmag=-inf")

    @classmethod
    def from_real(cls, x: float) -> "SignedLogReal":
        if x == 0.0:
            return cls(0, NEG_INF)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    def value(self) -> float:
        """Linear-domain value; may over/underflow for extreme logmag."""
        return self.sign * math.exp(self.logmag)

    def __mul__(self, other: "SignedLogReal") -> "SignedLogReal":
        s = self.sign * other.sign
        if s == 0:
            return SignedLogReal(0, NEG_INF)
        return SignedLogReal(s, self.logmag + other.logmag)

    def __add__(self, other: "SignedLogReal") -> "SignedLogReal":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.logmag >= other.logmag else (other, self)
        # max-shifted summation: |result| = e^hi * |hi_sign + lo_sign*e^(lo-hi)|
        t = lo.sign * hi.sign * math.exp(lo.logmag - hi.logmag)
        mag = 1.0 + t
        if mag == 0.0:
            return SignedLogReal(0, NEG_INF)
        return SignedLogReal(hi.sign, hi.logmag + math.log(mag))

    def __neg__(self) -> "SignedLogReal":
        return SignedLogReal(-self.sign, self.logmag)


def log_gamma(x):
    """Natural log of the Gamma function for positive real arguments."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("log_gamma requires x > 0")
    out = sp.gammaln(x)
    return float(out) if out.ndim == 0 else out


def reg_inc_gamma_lower(n, x):
    """Regularized lower incomplete Gamma function P(n, x).

    ``P(n, x) = (1/Gamma(n)) * integral_0^x t^(n-1) e^(-t) dt``.
    """
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(n <= 0):
        raise ValueError("reg_inc_gamma_lower requires n > 0")
    if np.any(x < 0):
        raise ValueError("reg_inc_gamma_lower requires x >= 0")
    out = sp.gammainc(n, x)
    return float(out) if out.ndim == 0 else out


def log_reg_inc_gamma_lower(n, x):
    """ln P(n, x), finite even where P underflows in double precision.

    Where ``scipy.special.gammainc`` returns a positive double its log is
    used directly; in the deep left tail (x << n) the value is recovered from
    the ascending series
    ``P(n,x) = x^n e^(-x) / Gamma(n+1) * sum_k x^k / ((n+1)...(n+k))``.
    """
    n = np.asarray(n, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(n <= 0):
        raise ValueError("log_reg_inc_gamma_lower requires n > 0")
    if np.any(x < 0):
        raise ValueError("log_reg_inc_gamma_lower requires x >= 0")
    n, x = np.broadcast_arrays(n, x)
    p = np.asarray(sp.gammainc(n, x))
    with np.errstate(divide="ignore"):
        out = np.asarray(np.log(p))
    bad = (p == 0.0) & (x > 0.0)
    if np.any(bad):
        nb = n[bad]
        xb = x[bad]
        # sum_k prod_{j<=k} x/(n+j); ratio x/(n+k) < 1 once k > x - n
        term = np.ones_like(xb)
        total = np.ones_like(xb)
        for k in range(1, 10_000):
            term = term * xb / (nb + k)
            total += term
            if np.all(term < 1e-18 * total):
                break
        out[bad] = nb * np.log(xb) - xb - sp.gammaln(nb + 1.0) + np.log(total)
    return float(out) if out.ndim == 0 else out


def monomial_derivative(p: int, d: int, x: float) -> float:
    """d-th derivative of t -> t**p evaluated at x.

    Returns ``p!/(p-d)! * x**(p-d)`` for ``d <= p`` and 0 otherwise.
    """
    if p < 0 or d < 0:
        raise ValueError("p and d must be nonnegative integers")
    if d > p:
        return 0.0
    return float(math.perm(p, d)) * float(x) ** (p - d)


def log_monomial_derivative(p, d, log_x):
    """ln of ``monomial_derivative`` for x > 0, given ln x (vector friendly)."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    return sp.gammaln(p + 1.0) - sp.gammaln(p - d + 1.0) + (p - d) * np.asarray(log_x)


def signed_logdet(a: np.ndarray) -> SignedLogReal:
    """Sign and ln|det| of a square real matrix via pivoted elimination.

    Rows are pre-scaled by their max-abs entry (scale re-absorbed into the
    log-magnitude) so that inputs spanning hundreds of orders of magnitude
    stay within double range during elimination.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("signed_logdet requires a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("signed_logdet requires finite entries")
    scale = np.max(np.abs(a), axis=1)
    if np.any(scale == 0.0):
        return SignedLogReal(0, NEG_INF)
    sign, logabs = np.linalg.slogdet(a / scale[:, None])
    if sign == 0.0:
        return SignedLogReal(0, NEG_INF)
    return SignedLogReal(int(sign), float(logabs + np.log(scale).sum()))


def signed_logdet_from_logs(logmag: np.ndarray, sign: np.ndarray | None = None):
    """Batched signed log-determinant of matrices given entrywise in log domain.

    Parameters
    ----------
    logmag : (..., q, q) array of ln|entry| (-inf allowed for zero entries).
    sign : optional (..., q, q) array of entry signs; all +1 when omitted.

    Returns
    -------
    (det_sign, det_logmag) arrays of shape (...,).

    Per-column and then per-row maxima are factored out before
    exponentiation, so entries may span arbitrarily many orders of magnitude
    both across rows and across columns; an entry is lost to underflow only
    when it is ~e^-700 below the largest entry of its row *and* column, in
    which case it cannot influence the determinant at double precision
    anyway.
    """
    logmag = np.asarray(logmag, dtype=float)
    colmax = np.max(logmag, axis=-2, keepdims=True)
    dead_col = ~np.isfinite(colmax)
    balanced = logmag - np.where(dead_col, 0.0, colmax)
    rowmax = np.max(balanced, axis=-1, keepdims=True)
    dead_row = ~np.isfinite(rowmax)
    balanced = balanced - np.where(dead_row, 0.0, rowmax)
    scaled = np.exp(balanced)
    if sign is not None:
        scaled = scaled * sign
    det_sign, det_log = np.linalg.slogdet(scaled)
    det_log = det_log + np.sum(
        np.where(dead_col, 0.0, colmax)[..., 0, :], axis=-1
    ) + np.sum(np.where(dead_row, 0.0, rowmax)[..., 0], axis=-1)
    singular = (
        (det_sign == 0.0)
        | np.any(dead_col[..., 0, :], axis=-1)
        | np.any(dead_row[..., 0], axis=-1)
    )
    det_log = np.where(singular, NEG_INF, det_log)
    det_sign = np.where(singular, 0.0, det_sign)
    return det_sign.astype(np.int64), det_log
