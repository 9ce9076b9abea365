"""Gamma, zeta, Dirichlet L, Bessel evaluators and the averaged Bessel identity.

Integer-order J comes from scipy's cephes backend.  The purely imaginary
orders that the dual-cusp kernels need are not available there, so the two
real combinations are evaluated directly:

* ``Y_{2ir} + Y_{-2ir}``: power series of ``2 coth(pi r) Im J_{2ir}`` for
  small argument and the Hankel asymptotic expansion (whose P/Q coefficient
  ``mu = -16 r^2`` is real) for large argument;
* ``K_{2ir}``: the cosine transform ``int_0^inf exp(-x cosh t) cos(2rt) dt``,
  a positive-kernel quadrature that is stable for every x > 0.

Pure functions throughout; the module-level quadrature nodes are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.special as sp

from rsmoment.numerics import (
    DEFAULT_CTX,
    NonConvergence,
    PrecisionCtx,
    SmoothWindow,
    integrate_compact,
    window_transform,
)


class PoleAtS(ArithmeticError):
    """Evaluation requested at a pole."""


class PoleAtOne(PoleAtS):
    """zeta / trivial-character L-functions have their pole at s = 1."""


# --------------------------------------------------------------------------
# Gamma
# --------------------------------------------------------------------------

def gamma_complex(s: complex, ctx: PrecisionCtx = DEFAULT_CTX) -> complex:
    """Gamma(s) for complex s; raises :class:`PoleAtS` at nonpositive integers."""
    s = complex(s)
    if s.imag == 0 and s.real <= 0 and s.real == int(s.real):
        raise PoleAtS(f"Gamma has a pole at s={s}")
    return complex(sp.gamma(s))


def loggamma(s: complex) -> complex:
    """Principal branch of log Gamma (scipy backend, complex-capable)."""
    return complex(sp.loggamma(complex(s)))


# --------------------------------------------------------------------------
# Bernoulli numbers, digamma-expansion convention (B_1 = +1/2)
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _bernoulli_minus(n: int) -> Fraction:
    # recurrence with the B_1 = -1/2 convention
    if n == 0:
        return Fraction(1)
    s = Fraction(0)
    for j in range(n):
        s += Fraction(math.comb(n + 1, j)) * _bernoulli_minus(j)
    return -s / (n + 1)


def bernoulli(n: int) -> Fraction:
    """n-th Bernoulli number in the convention where
    psi(z) ~ log z - sum_{0<n<M} B_n / (n z^n), i.e. B_1 = +1/2."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 1:
        return Fraction(1, 2)
    return _bernoulli_minus(n)


# --------------------------------------------------------------------------
# Hurwitz / Riemann zeta via Euler-Maclaurin, vectorized over s
# --------------------------------------------------------------------------

_B2K = [float(bernoulli(2 * j)) for j in range(1, 16)]
_FACT2K = [math.factorial(2 * j) for j in range(1, 16)]


def hurwitz_array(s: np.ndarray, a: float = 1.0, terms: int = 48, J: int = 12) -> np.ndarray:
    """Euler-Maclaurin continuation of zeta(s, a) for an array of complex s.

    Accurate to ~1e-14 for |Im s| up to a few hundred with the default
    truncation; the caller is responsible for staying off s = 1.
    """
    s = np.asarray(s, dtype=complex)
    n0 = max(terms, int(np.max(np.abs(s.imag)) / 3) + 8 if s.size else terms)
    n = np.arange(n0, dtype=float)
    base = np.sum(np.power(n[None, :] + a, -s[..., None]), axis=-1)
    Na = n0 + a
    tail = Na ** (1 - s) / (s - 1) + 0.5 * Na ** (-s)
    corr = np.zeros_like(s)
    for j in range(1, J + 1):
        poch = np.ones_like(s)
        for i in range(2 * j - 1):
            poch = poch * (s + i)
        corr = corr + _B2K[j - 1] / _FACT2K[j - 1] * poch * Na ** (-s - 2 * j + 1)
    return base + tail + corr


def hurwitz(s: complex, a: float, ctx: PrecisionCtx = DEFAULT_CTX) -> complex:
    """Hurwitz zeta(s, a) for a in (0, 1]; hurwitz(s, 1) equals zeta(s)."""
    if not (0 < a <= 1):
        raise ValueError("a must lie in (0, 1]")
    s = complex(s)
    if abs(s - 1) < 1e-12:
        raise PoleAtOne("zeta(s, a) has its pole at s = 1")
    if ctx.working_digits > 16:
        import mpmath as mp

        with mp.workdps(ctx.working_digits + 5):
            return complex(mp.zeta(mp.mpc(s), mp.mpf(a)))
    return complex(hurwitz_array(np.array([s]), a)[0])


def zeta(s: complex, ctx: PrecisionCtx = DEFAULT_CTX) -> complex:
    """Riemann zeta with analytic continuation (Euler-Maclaurin)."""
    return hurwitz(s, 1.0, ctx)


# --------------------------------------------------------------------------
# Dirichlet L-functions
# --------------------------------------------------------------------------

def dirichlet_l(s: complex, chi, ctx: PrecisionCtx = DEFAULT_CTX) -> complex:
    """L(s, chi) = N^{-s} sum_a chi(a) zeta(s, a/N) over residues a mod N."""
    s = complex(s)
    N = chi.modulus
    if N == 1:
        return zeta(s, ctx)
    if abs(s - 1) < 1e-12 and chi.is_trivial:
        raise PoleAtOne("trivial character: pole at s = 1")
    total = 0.0 + 0.0j
    for a in range(1, N + 1):
        v = chi(a)
        if v != 0:
            total += v * hurwitz(s, a / N, ctx)
    return N ** (-s) * total


# --------------------------------------------------------------------------
# Bessel functions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BesselOrder:
    """Either a nonnegative integer order or the purely imaginary order 2ir
    (stored through the real number ``two_r`` = 2r)."""

    kind: str            # "integer" | "imaginary"
    n: int = 0
    two_r: float = 0.0

    def __post_init__(self):
        if self.kind == "integer":
            if self.n < 0:
                raise ValueError("integer order must be nonnegative")
        elif self.kind != "imaginary":
            raise ValueError(f"unknown order kind {self.kind!r}")


def integer_order(n: int) -> BesselOrder:
    return BesselOrder("integer", n=n)


def imaginary_order(two_r: float) -> BesselOrder:
    return BesselOrder("imaginary", two_r=float(two_r))


_YCOMB_CUT = 14.0
_KNODES, _KWEIGHTS = np.polynomial.legendre.leggauss(320)


def ycomb_array(r: float, x: np.ndarray) -> np.ndarray:
    """Y_{2ir}(x) + Y_{-2ir}(x) (real) for positive x, vectorized.

    r = 0 degenerates to 2 Y_0.  Supported envelope |r| <= 2.5, where the
    series/asymptotic crossover keeps the absolute error below ~1e-9.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("argument must be positive")
    if r == 0.0:
        return 2.0 * sp.y0(x)
    if abs(r) > 2.5:
        raise NonConvergence("imaginary-order Y supported for |r| <= 2.5")
    out = np.empty_like(x)
    small = x <= _YCOMB_CUT
    if np.any(small):
        out[small] = _ycomb_series(r, x[small])
    if np.any(~small):
        out[~small] = _ycomb_asymptotic(r, x[~small])
    return out


def _ycomb_series(r: float, x: np.ndarray, terms: int = 64) -> np.ndarray:
    # 2 coth(pi r) Im J_{2ir}(x); the series converges for every x but
    # cancellation limits it to moderate arguments (handled by the cut).
    nu = 2j * r
    logx2 = np.log(0.5 * x)
    m = np.arange(terms)
    lg = sp.loggamma(m + 1 + nu) + sp.loggamma(m + 1.0)
    acc = np.zeros(x.shape, dtype=complex)
    for mi in range(terms):
        acc += (-1) ** mi * np.exp((2 * mi + nu) * logx2 - lg[mi])
    return 2.0 / math.tanh(math.pi * r) * acc.imag


def _ycomb_asymptotic(r: float, x: np.ndarray) -> np.ndarray:
    # Hankel expansion of the symmetric combination: both orders share
    # mu = 4 (2ir)^2 = -16 r^2, and the phases combine into 2 cosh(pi r).
    if x.size == 0:
        return np.zeros_like(x)
    mu = -16.0 * r * r
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    term = np.ones_like(x)
    last = np.inf
    for k in range(1, 120):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k) / x
        size = float(np.max(np.abs(term)))
        if size > last:
            break
        if k % 2 == 1:
            Q += term * (-1) ** ((k - 1) // 2)
        else:
            P += term * (-1) ** (k // 2)
        last = size
    amp = np.sqrt(2.0 / (np.pi * x))
    ph = x - 0.25 * np.pi
    return 2.0 * math.cosh(math.pi * r) * amp * (np.sin(ph) * P + np.cos(ph) * Q)


def k2ir_array(r: float, x: np.ndarray) -> np.ndarray:
    """K_{2ir}(x) (real for real r) via the cosine transform, vectorized."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("argument must be positive")
    # one node layout sized for the smallest argument keeps this deterministic
    xmin = float(np.min(x))
    tmax = float(np.arccosh(max(50.0 / xmin, 2.0))) + 1.0
    t = 0.5 * (_KNODES + 1.0) * tmax
    w = 0.5 * _KWEIGHTS * tmax
    kernel = np.cos(2.0 * r * t) * w
    return np.exp(-np.outer(x, np.cosh(t))) @ kernel


def bessel_eval(kind: str, order: BesselOrder, x, ctx: PrecisionCtx = DEFAULT_CTX):
    """Bessel values J (integer order), and the real imaginary-order
    combinations: Y means Y_{2ir} + Y_{-2ir}, K means K_{2ir}.

    Scalar in, scalar out; arrays pass through vectorized.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if kind == "J":
        if order.kind != "integer":
            raise ValueError("J is evaluated for integer order only")
        out = sp.jv(order.n, arr)
    elif kind == "Y":
        if order.kind != "imaginary":
            raise ValueError("Y is evaluated as the imaginary-order combination")
        out = ycomb_array(0.5 * order.two_r, arr)
    elif kind == "K":
        if order.kind != "imaginary":
            raise ValueError("K is evaluated for imaginary order")
        out = k2ir_array(0.5 * order.two_r, arr)
    else:
        raise ValueError(f"unknown Bessel kind {kind!r}")
    if not np.all(np.isfinite(out)):
        raise NonConvergence(f"Bessel {kind} outside supported envelope")
    return out if np.ndim(x) else float(out[0])


# --------------------------------------------------------------------------
# Dual-cusp kernels of the twisted summation formula
# --------------------------------------------------------------------------

def voronoi_kernel(g, sign: int, x, ctx: PrecisionCtx = DEFAULT_CTX):
    """The plus/minus kernels attached to the fixed form g.

    Holomorphic weight k:   plus = 2 pi i^k J_{k-1}(x), minus = 0.
    Maass / Eisenstein (spectral parameter r, sign eps_g, eps_g = 1 for
    Eisenstein):  plus = -pi (Y_{2ir} + Y_{-2ir})(x) / cosh(pi r),
                  minus = eps_g * 4 cosh(pi r) K_{2ir}(x).
    Returned as a real float (i^k is +-1 for even k).
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    variant = g.variant
    if variant == "holomorphic":
        if sign < 0:
            out = np.zeros_like(arr)
        else:
            k = g.weight
            out = 2.0 * np.pi * (1j ** k).real * sp.jv(k - 1, arr)
    else:
        r = g.r
        eps = 1.0 if variant == "eisenstein" else float(g.eps)
        if sign > 0:
            out = -np.pi * ycomb_array(r, arr) / math.cosh(math.pi * r)
        else:
            out = eps * 4.0 * math.cosh(math.pi * r) * k2ir_array(r, arr)
    return out if np.ndim(x) else float(out[0])


# --------------------------------------------------------------------------
# Averaged Bessel identity over even weights
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BesselAverage:
    lhs: float
    main_term: float
    residual: float
    error_bound: float


def bessel_weight_average(
    h: SmoothWindow, K: float, xi: float, ctx: PrecisionCtx = DEFAULT_CTX
) -> BesselAverage:
    """Weighted average of i^{-k} J_{k-1}(xi) over even k against h((k-1)/K).

    lhs  = sum over even k of i^{-k} h((k-1)/K) J_{k-1}(xi)   (finite sum),
    main = -(K / 2 sqrt(xi)) Im( e(xi/2pi - 1/8) htilde(K^2 / 2 xi) ),
    and the residual carries the bound const * (xi / K^4) * int |hhat(t) t^4| dt
    with the constant measured empirically, not asserted.
    """
    if K <= 0 or xi <= 0:
        raise ValueError("K and xi must be positive")
    a, b = h.support
    ks = np.arange(2, int(b * K) + 4, 2)
    ks = ks[(ks - 1 >= a * K) & (ks - 1 <= b * K)]
    lhs = 0.0
    if len(ks):
        weights = h((ks - 1) / K)
        jvals = sp.jv(ks - 1, xi)
        signs = np.where(ks % 4 == 0, 1.0, -1.0)   # i^{-k} for even k
        lhs = float(np.sum(signs * weights * jvals))
    htil = window_transform(h, "tilde", K * K / (2.0 * xi), ctx)
    phase = np.exp(1j * (xi - 0.25 * np.pi))
    main = -K / (2.0 * math.sqrt(xi)) * float(np.imag(phase * htil))
    bound = xi / K ** 4 * _hat_moment4(h)
    return BesselAverage(lhs=lhs, main_term=main, residual=lhs - main, error_bound=bound)


def _hat_moment4(h: SmoothWindow) -> float:
    """integral over the real line of |hhat(t)| t^4, by dense trapezoid.

    |hhat| has corner points at its zeros, so a fine fixed grid is both
    simpler and more robust than adaptive panels; superpolynomial decay of
    the transform makes the truncation error negligible at the scale the
    residual bound is used (three significant digits).
    """
    a, b = h.support
    xg, wg = np.polynomial.legendre.leggauss(240)
    x = 0.5 * (b - a) * xg + 0.5 * (a + b)
    w = 0.5 * (b - a) * wg * h(x)
    t = np.arange(0.0, 120.0, 0.02)
    hat = np.abs(np.exp(2j * np.pi * np.outer(t, x)) @ w)
    integrand = hat * t ** 4
    # truncate once the envelope is persistently negligible
    peak = float(np.max(integrand))
    mask = integrand > 1e-13 * max(peak, 1e-30)
    last = int(np.max(np.nonzero(mask)[0])) if np.any(mask) else len(t) - 1
    return 2.0 * float(np.trapezoid(integrand[: last + 1], t[: last + 1]))
