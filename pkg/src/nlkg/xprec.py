"""Compensated double-double arithmetic and the precision-tier facade.

A value is stored as an unevaluated sum hi + lo of two IEEE doubles with
|lo| <= ulp(hi)/2, which gives roughly 31 significant decimal digits.  The
same class carries either python/numpy scalars or whole float64 arrays in
its components, so field arrays and bisection parameters share one code
path.  All operations are deterministic: identical inputs give bit
identical outputs.
"""

from __future__ import annotations

import numbers

import numpy as np

__all__ = [
    "DoubleDouble",
    "NATIVE",
    "COMPENSATED",
    "tier_by_name",
    "exp", "log", "sqrt", "sin", "cos", "sinh", "cosh", "tanh",
    "absolute", "where", "power",
    "to_float64", "abs_max", "all_finite", "total", "concat", "zeros_like_prefix",
]

# ---------------------------------------------------------------------------
# Error-free transformations (Dekker / Knuth).  These rely only on IEEE
# double rounding, so they work elementwise on numpy arrays as well as on
# scalars.  math.fma is unavailable on this interpreter; two_prod uses the
# Dekker split instead.
# ---------------------------------------------------------------------------

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    """s + err == a + b exactly, no ordering assumption."""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _quick_two_sum(a, b):
    """s + err == a + b exactly, assumes |a| >= |b|."""
    s = a + b
    err = b - (s - a)
    return s, err


def _split(a):
    c = _SPLITTER * a
    big = c - a
    hi = c - big
    return hi, a - hi


def _two_prod(a, b):
    """p + err == a * b exactly (Dekker splitting)."""
    p = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


class DoubleDouble:
    """A real number (or array of reals) as a compensated pair hi + lo."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi, lo=0.0):
        self.hi = hi
        self.lo = lo

    # -- construction -------------------------------------------------------

    @classmethod
    def from_float(cls, x):
        return cls(np.float64(x), np.float64(0.0))

    @classmethod
    def from_array(cls, values):
        a = np.asarray(values, dtype=np.float64)
        return cls(a, np.zeros_like(a))

    @classmethod
    def from_string(cls, s: str) -> "DoubleDouble":
        """Parse a decimal string to full double-double precision."""
        import mpmath

        with mpmath.workprec(140):
            x = mpmath.mpf(s)
            hi = float(x)
            lo = float(x - hi)
        return cls(np.float64(hi), np.float64(lo))

    def to_decimal(self, digits: int = 33) -> str:
        """Shortest faithful decimal rendering of hi + lo."""
        import mpmath

        with mpmath.workprec(140):
            return mpmath.nstr(mpmath.mpf(float(self.hi)) + mpmath.mpf(float(self.lo)),
                               digits, strip_zeros=False)

    # -- basic queries -------------------------------------------------------

    def __float__(self):
        return float(self.hi + self.lo)

    def __len__(self):
        return len(self.hi)

    @property
    def shape(self):
        return np.shape(self.hi)

    def __getitem__(self, idx):
        return DoubleDouble(self.hi[idx], self.lo[idx])

    def copy(self):
        return DoubleDouble(np.copy(self.hi), np.copy(self.lo))

    def __repr__(self):
        return f"DoubleDouble({self.hi!r}, {self.lo!r})"

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, DoubleDouble):
            s, e = _two_sum(self.hi, other.hi)
            t, f = _two_sum(self.lo, other.lo)
            e = e + t
            s, e = _quick_two_sum(s, e)
            e = e + f
            hi, lo = _quick_two_sum(s, e)
            return DoubleDouble(hi, lo)
        s, e = _two_sum(self.hi, other)
        e = e + self.lo
        hi, lo = _quick_two_sum(s, e)
        return DoubleDouble(hi, lo)

    __radd__ = __add__

    def __neg__(self):
        return DoubleDouble(-self.hi, -self.lo)

    def __sub__(self, other):
        return self.__add__(-other)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, DoubleDouble):
            p, e = _two_prod(self.hi, other.hi)
            e = e + (self.hi * other.lo + self.lo * other.hi)
            hi, lo = _quick_two_sum(p, e)
            return DoubleDouble(hi, lo)
        p, e = _two_prod(self.hi, other)
        e = e + self.lo * other
        hi, lo = _quick_two_sum(p, e)
        return DoubleDouble(hi, lo)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, DoubleDouble):
            other = DoubleDouble(other)
        q1 = self.hi / other.hi
        r = self - other * q1
        q2 = r.hi / other.hi
        r = r - other * q2
        q3 = r.hi / other.hi
        hi, lo = _quick_two_sum(q1, q2)
        s, e = _two_sum(hi, q3)
        e = e + lo
        hi, lo = _quick_two_sum(s, e)
        return DoubleDouble(hi, lo)

    def __rtruediv__(self, other):
        return DoubleDouble(other) / self

    def __abs__(self):
        neg = self.hi < 0
        return DoubleDouble(np.where(neg, -self.hi, self.hi),
                            np.where(neg, -self.lo, self.lo))

    def __pow__(self, p):
        return power(self, p)

    # -- comparisons (lexicographic on the normalized pair) -------------------

    def _cmp_parts(self, other):
        if isinstance(other, DoubleDouble):
            return other.hi, other.lo
        return other, 0.0

    def __lt__(self, other):
        ohi, olo = self._cmp_parts(other)
        return (self.hi < ohi) | ((self.hi == ohi) & (self.lo < olo))

    def __le__(self, other):
        ohi, olo = self._cmp_parts(other)
        return (self.hi < ohi) | ((self.hi == ohi) & (self.lo <= olo))

    def __gt__(self, other):
        ohi, olo = self._cmp_parts(other)
        return (self.hi > ohi) | ((self.hi == ohi) & (self.lo > olo))

    def __ge__(self, other):
        ohi, olo = self._cmp_parts(other)
        return (self.hi > ohi) | ((self.hi == ohi) & (self.lo >= olo))

    def __eq__(self, other):
        ohi, olo = self._cmp_parts(other)
        return (self.hi == ohi) & (self.lo == olo)

    def __ne__(self, other):
        return ~self.__eq__(other)

    def __hash__(self):
        return hash((float(self.hi), float(self.lo)))


# ---------------------------------------------------------------------------
# Double-double constants (hi, lo pairs; standard values, checked against
# mpmath in the test suite).
# ---------------------------------------------------------------------------

DD_LN2 = DoubleDouble(6.931471805599452862e-01, 2.319046813846299558e-17)
DD_PI = DoubleDouble(3.141592653589793116e+00, 1.224646799147353207e-16)
DD_2PI = DoubleDouble(6.283185307179586232e+00, 2.449293598294706414e-16)
DD_PI_2 = DoubleDouble(1.570796326794896558e+00, 6.123233995736766036e-17)


def _is_dd(x):
    return isinstance(x, DoubleDouble)


# ---------------------------------------------------------------------------
# Elementary functions.  Strategy: exact argument reduction with the
# double-double constants, a short Taylor tail on the reduced argument, and
# (for log) one Newton correction of the native result.  Documented accuracy
# target: 1e-28 relative on moderate arguments.
# ---------------------------------------------------------------------------

def _dd_from_int(n: int) -> DoubleDouble:
    """Exact double-double of an integer with at most ~106 significant bits."""
    hi = float(n)
    lo = float(n - int(hi))
    return DoubleDouble(np.float64(hi), np.float64(lo))


def _inv_factorials(ks):
    """Double-double 1/k! values (factorials are exact below 2^106)."""
    import math as _m

    return tuple(DoubleDouble(1.0) / _dd_from_int(_m.factorial(k)) for k in ks)


# Series coefficients, highest order first.  They must carry double-double
# precision: a float-rounded 1/6 alone would cap sin/cos near 1e-18.
_EXP_COEFFS = _inv_factorials(range(9, 0, -1)) + (DoubleDouble(1.0),)
_SIN_COEFFS = tuple(c * ((-1.0) ** k) for k, c in
                    zip(range(14, -1, -1), _inv_factorials(range(29, 0, -2))))
_COS_COEFFS = tuple(c * ((-1.0) ** k) for k, c in
                    zip(range(14, -1, -1), _inv_factorials(range(28, -1, -2))))
_SINH_COEFFS = _inv_factorials(range(23, 0, -2))


def _dd_exp(a: DoubleDouble) -> DoubleDouble:
    # exp(a) = 2^m * (exp(r/512))^512 with r = a - m ln2, |r| <= ln2/2.
    m = np.round(np.asarray(a.hi, dtype=np.float64) / 0.6931471805599453)
    r = (a - DD_LN2 * m) * (1.0 / 512.0)
    # Horner on the Taylor tail: |r| <= 6.8e-4, so nine terms reach ~1e-33.
    e = _horner(r, _EXP_COEFFS)
    for _ in range(9):  # undo the /512 scaling by repeated squaring
        e = e * e
    hi = np.ldexp(e.hi, m.astype(np.int64))
    lo = np.ldexp(e.lo, m.astype(np.int64))
    # saturate out-of-range arguments like the native function does
    over = a.hi > 709.0
    under = a.hi < -709.0
    if np.any(over) or np.any(under):
        hi = np.where(over, np.inf, np.where(under, 0.0, hi))
        lo = np.where(over | under, 0.0, lo)
    return DoubleDouble(hi, lo)


def _dd_log(a: DoubleDouble) -> DoubleDouble:
    # Native estimate plus one Newton step: y <- y + a e^{-y} - 1 doubles
    # the number of correct digits.
    y0 = np.log(np.asarray(a.hi, dtype=np.float64))
    y = DoubleDouble(y0) + (a * _dd_exp(DoubleDouble(-y0)) - 1.0)
    return y


def _dd_sqrt(a: DoubleDouble) -> DoubleDouble:
    # Karp's trick: one correction of the native square root.
    y0 = np.sqrt(np.asarray(a.hi, dtype=np.float64))
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(y0 > 0.0, 1.0 / np.where(y0 > 0.0, y0, 1.0), 0.0)
        d = a - DoubleDouble(y0) * DoubleDouble(y0)
        corr = d.hi * (inv * 0.5)
    s, e = _two_sum(y0, corr)
    return DoubleDouble(s, e)


def _horner(y, coeffs):
    """Evaluate sum coeffs[k] * y^k with coeffs given highest-order first."""
    acc = y * coeffs[0]
    for c in coeffs[1:-1]:
        acc = (acc + c) * y
    return acc + coeffs[-1]


def _dd_sincos_reduced(r: DoubleDouble):
    # Taylor series on |r| <= pi/4; 15 terms keep the tail below 1e-33.
    # sin(r) = r * P(r^2), cos(r) = Q(r^2), Horner from the smallest term.
    r2 = r * r
    return r * _horner(r2, _SIN_COEFFS), _horner(r2, _COS_COEFFS)


def _dd_sincos(a: DoubleDouble):
    # Reduce modulo 2*pi, then modulo pi/2; j indexes the quadrant.
    k = np.round(np.asarray(a.hi, dtype=np.float64) / 6.283185307179586)
    r = a - DD_2PI * k
    j = np.round(np.asarray(r.hi, dtype=np.float64) / 1.5707963267948966)
    r = r - DD_PI_2 * j
    s, c = _dd_sincos_reduced(r)
    jm = np.asarray(j).astype(np.int64) % 4
    sin_out_hi = np.select([jm == 0, jm == 1, jm == 2, jm == 3],
                           [s.hi, c.hi, -s.hi, -c.hi])
    sin_out_lo = np.select([jm == 0, jm == 1, jm == 2, jm == 3],
                           [s.lo, c.lo, -s.lo, -c.lo])
    cos_out_hi = np.select([jm == 0, jm == 1, jm == 2, jm == 3],
                           [c.hi, -s.hi, -c.hi, s.hi])
    cos_out_lo = np.select([jm == 0, jm == 1, jm == 2, jm == 3],
                           [c.lo, -s.lo, -c.lo, s.lo])
    return DoubleDouble(sin_out_hi, sin_out_lo), DoubleDouble(cos_out_hi, cos_out_lo)


def _dd_sinh(a: DoubleDouble) -> DoubleDouble:
    # Series branch below |a| = 0.5 avoids the e^a - e^{-a} cancellation.
    e = _dd_exp(a)
    large = (e - 1.0 / e) * 0.5
    small = a * _horner(a * a, _SINH_COEFFS)
    use_small = np.abs(np.asarray(a.hi)) < 0.5
    return DoubleDouble(np.where(use_small, small.hi, large.hi),
                        np.where(use_small, small.lo, large.lo))


def _dd_cosh(a: DoubleDouble) -> DoubleDouble:
    e = _dd_exp(a)
    return (e + 1.0 / e) * 0.5


def _dd_tanh(a: DoubleDouble) -> DoubleDouble:
    s = _dd_sinh(a)
    c = _dd_sqrt(s * s + 1.0)
    t = s / c
    saturated = np.abs(np.asarray(a.hi)) > 300.0
    if np.any(saturated):
        sign = np.sign(np.asarray(a.hi))
        return DoubleDouble(np.where(saturated, sign, t.hi),
                            np.where(saturated, 0.0, t.lo))
    return t


def _dd_power(a: DoubleDouble, p) -> DoubleDouble:
    if isinstance(p, numbers.Integral):
        n = int(p)
        if n == 0:
            return DoubleDouble(np.ones_like(np.asarray(a.hi)),
                                np.zeros_like(np.asarray(a.hi)))
        if n < 0:
            return 1.0 / _dd_power(a, -n)
        result = None
        base = a
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        return result
    return _dd_exp(_dd_log(a) * float(p))


# ---------------------------------------------------------------------------
# Tier-generic facade: every function below accepts either plain numpy
# values (native tier) or DoubleDouble (compensated tier) and dispatches.
# ---------------------------------------------------------------------------

def exp(x):
    return _dd_exp(x) if _is_dd(x) else np.exp(x)


def log(x):
    return _dd_log(x) if _is_dd(x) else np.log(x)


def sqrt(x):
    return _dd_sqrt(x) if _is_dd(x) else np.sqrt(x)


def sin(x):
    return _dd_sincos(x)[0] if _is_dd(x) else np.sin(x)


def cos(x):
    return _dd_sincos(x)[1] if _is_dd(x) else np.cos(x)


def sinh(x):
    return _dd_sinh(x) if _is_dd(x) else np.sinh(x)


def cosh(x):
    return _dd_cosh(x) if _is_dd(x) else np.cosh(x)


def tanh(x):
    return _dd_tanh(x) if _is_dd(x) else np.tanh(x)


def absolute(x):
    return abs(x) if _is_dd(x) else np.abs(x)


def power(x, p):
    if _is_dd(x):
        return _dd_power(x, p)
    if isinstance(p, numbers.Integral):
        return x ** int(p)
    return np.power(x, p)


def where(cond, a, b):
    if _is_dd(a) or _is_dd(b):
        if not _is_dd(a):
            a = DoubleDouble(np.asarray(a, dtype=np.float64))
        if not _is_dd(b):
            b = DoubleDouble(np.asarray(b, dtype=np.float64))
        return DoubleDouble(np.where(cond, a.hi, b.hi), np.where(cond, a.lo, b.lo))
    return np.where(cond, a, b)


def to_float64(x):
    """Collapse to float64 (exact for the native tier)."""
    if _is_dd(x):
        return np.asarray(x.hi + x.lo, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def abs_max(x) -> float:
    v = to_float64(x)
    return float(np.max(np.abs(v))) if v.size else 0.0


def all_finite(x) -> bool:
    if _is_dd(x):
        return bool(np.all(np.isfinite(x.hi)) and np.all(np.isfinite(x.lo)))
    return bool(np.all(np.isfinite(x)))


def total(x):
    """Sum of all elements, staying in the input's tier.

    The compensated reduction folds halves pairwise so the cost is
    O(n log n) vector operations instead of a python-level loop.
    """
    if not _is_dd(x):
        return float(np.sum(x))
    hi = np.asarray(x.hi, dtype=np.float64)
    lo = np.asarray(x.lo, dtype=np.float64)
    acc = DoubleDouble(hi, lo)
    n = acc.hi.size
    while n > 1:
        half = n // 2
        head = DoubleDouble(acc.hi[:half], acc.lo[:half])
        tail = DoubleDouble(acc.hi[half:2 * half], acc.lo[half:2 * half])
        folded = head + tail
        if n % 2:
            extra = DoubleDouble(acc.hi[2 * half:], acc.lo[2 * half:])
            folded = DoubleDouble(np.concatenate([folded.hi, extra.hi]),
                                  np.concatenate([folded.lo, extra.lo]))
        acc = folded
        n = acc.hi.size
    return DoubleDouble(np.float64(acc.hi[0]), np.float64(acc.lo[0]))


def concat(parts):
    if any(_is_dd(p) for p in parts):
        parts = [p if _is_dd(p) else DoubleDouble(np.asarray(p, dtype=np.float64))
                 for p in parts]
        return DoubleDouble(np.concatenate([np.atleast_1d(p.hi) for p in parts]),
                            np.concatenate([np.atleast_1d(p.lo) for p in parts]))
    return np.concatenate([np.atleast_1d(p) for p in parts])


def zeros_like_prefix(x, n: int):
    """A zero array of length n in the same tier as x."""
    if _is_dd(x):
        return DoubleDouble(np.zeros(n), np.zeros(n))
    return np.zeros(n)


# ---------------------------------------------------------------------------
# Precision tiers
# ---------------------------------------------------------------------------

class PrecisionTier:
    """Constructor bundle for one precision tier."""

    def __init__(self, name: str):
        self.name = name

    def scalar(self, value):
        if self.name == "native":
            return float(value)
        if isinstance(value, str):
            return DoubleDouble.from_string(value)
        if isinstance(value, DoubleDouble):
            return value
        return DoubleDouble.from_float(float(value))

    def array(self, values):
        if self.name == "native":
            return np.asarray(values, dtype=np.float64)
        if isinstance(values, DoubleDouble):
            return values
        return DoubleDouble.from_array(values)

    def __repr__(self):
        return f"PrecisionTier({self.name!r})"


NATIVE = PrecisionTier("native")
COMPENSATED = PrecisionTier("dd")


def tier_by_name(name: str) -> PrecisionTier:
    if name in ("native", "float64"):
        return NATIVE
    if name in ("dd", "compensated", "double-double"):
        return COMPENSATED
    raise ValueError(f"unknown precision tier {name!r} (use 'native' or 'dd')")


def tier_of(x) -> PrecisionTier:
    return COMPENSATED if _is_dd(x) else NATIVE
