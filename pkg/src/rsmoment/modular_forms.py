"""Level-one holomorphic Hecke eigenforms with exact integer q-expansions.

The basis of the weight-k space comes from monomials Delta^i E4^a E6^b
echelonised to f_i = q^i + O(q^{dim}); all pivots are 1, so the echelon
basis stays integral.  Series products use Kronecker substitution (pack
coefficients into one big integer, multiply with GMP, unpack), which makes
exact expansions to tens of thousands of terms take fractions of a second.
Floats appear only at the very end, when normalised eigenvalues
lambda(n) = a(n) / n^{(k-1)/2} are extracted.

Harmonic weights rho(f) are recovered from the trace identity itself:
solve sum_j rho_j lambda_j(m) lambda_j(n) = delta_{m,n} + Kloosterman side
on diagonal pairs, then verify on held-out pairs.  This keeps the module
closed (no independent Petersson-norm computation) while the held-out
residuals supply the independence of the check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
import numpy as np
import scipy.special as sp

from rsmoment.arithmetic import (
    PrimitiveCharacter,
    eisenstein_lambda_table,
    kloosterman,
    trivial_character,
)
from rsmoment.numerics import DEFAULT_CTX, PrecisionCtx


class EigenDecompositionFailure(ArithmeticError):
    """T2 spectrum not separated (and not split by T3)."""


class IllConditioned(ArithmeticError):
    """The eigenvalue design matrix for the weight solve is rank-deficient."""


class RangeExceedsEigenvalueTable(IndexError):
    """Requested eigenvalues beyond the tabulated range."""


# --------------------------------------------------------------------------
# exact series arithmetic via Kronecker substitution
# --------------------------------------------------------------------------

def _max_abs(coeffs) -> int:
    out = 0
    for c in coeffs:
        a = -c if c < 0 else c
        if a > out:
            out = a
    return out


def kron_mul(a: list, b: list, P: int) -> list:
    """Exact product of integer power series truncated to q^P (inclusive)."""
    la = min(len(a), P + 1)
    lb = min(len(b), P + 1)
    bound = (min(la, lb)) * _max_abs(a[:la]) * _max_abs(b[:lb]) + 1
    Bb = (bound.bit_length() + 9) // 8 + 1  # bytes per limb, sign headroom
    T = 1 << (8 * Bb)
    half = T >> 1
    enc_a = b"".join((c + half).to_bytes(Bb, "little") for c in a[:la])
    enc_b = b"".join((c + half).to_bytes(Bb, "little") for c in b[:lb])
    bias_a = int.from_bytes((half.to_bytes(Bb, "little")) * la, "little")
    bias_b = int.from_bytes((half.to_bytes(Bb, "little")) * lb, "little")
    A = gmpy2.mpz(int.from_bytes(enc_a, "little") - bias_a)
    B = gmpy2.mpz(int.from_bytes(enc_b, "little") - bias_b)
    prod = int(A * B)
    n_limbs = P + 1
    bias_p = int.from_bytes((half.to_bytes(Bb, "little")) * n_limbs, "little")
    raw = (prod + bias_p) & ((1 << (8 * Bb * n_limbs)) - 1)  # mask, not %: stays linear
    buf = raw.to_bytes(Bb * n_limbs, "little")
    return [int.from_bytes(buf[i * Bb : (i + 1) * Bb], "little") - half for i in range(n_limbs)]


def _sigma_series(P: int, power: int, scale: int, const: int = 1) -> list:
    """const + scale * sum_n sigma_power(n) q^n, exact."""
    out = [0] * (P + 1)
    out[0] = const
    for d in range(1, P + 1):
        dk = d ** power
        for n in range(d, P + 1, d):
            out[n] += dk
    for n in range(1, P + 1):
        out[n] *= scale
    return out


@lru_cache(maxsize=8)
def _eta3(P: int) -> tuple:
    out = [0] * (P + 1)
    j = 0
    while j * (j + 1) // 2 <= P:
        out[j * (j + 1) // 2] = (-1) ** j * (2 * j + 1)
        j += 1
    return tuple(out)


class _SeriesCache:
    """Per-precision cache of the generator series and their power ladder."""

    def __init__(self, P: int):
        self.P = P
        eta3 = list(_eta3(P))
        eta6 = kron_mul(eta3, eta3, P)
        eta12 = kron_mul(eta6, eta6, P)
        eta24 = kron_mul(eta12, eta12, P)
        self.delta = [0] + eta24[:P]
        self.e4 = _sigma_series(P, 3, 240)
        self.e6 = _sigma_series(P, 5, -504)
        self._pows: dict = {("E4", 0): [1] + [0] * P, ("E4", 1): self.e4,
                            ("E6", 0): [1] + [0] * P, ("E6", 1): self.e6,
                            ("D", 0): [1] + [0] * P, ("D", 1): self.delta}

    def power(self, base: str, n: int) -> list:
        key = (base, n)
        if key not in self._pows:
            self._pows[key] = kron_mul(self.power(base, n - 1), self.power(base, 1), self.P)
        return self._pows[key]

    def monomial(self, i: int, a: int, b: int) -> list:
        s = self.power("D", i)
        if a:
            s = kron_mul(s, self.power("E4", a), self.P)
        if b:
            s = kron_mul(s, self.power("E6", b), self.P)
        return s


_series_caches: dict = {}


def _series(P: int) -> _SeriesCache:
    if P not in _series_caches:
        _series_caches[P] = _SeriesCache(P)
    return _series_caches[P]


# --------------------------------------------------------------------------
# Miller-type echelon basis
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QExpansion:
    """Exact integer q-expansion of a weight-k modular form up to q^P."""

    weight: int
    coeffs: tuple

    @property
    def precision(self) -> int:
        return len(self.coeffs) - 1

    def is_cusp(self) -> bool:
        return self.coeffs[0] == 0

    def coefficient(self, n: int) -> int:
        if n > self.precision:
            raise RangeExceedsEigenvalueTable(f"series known to q^{self.precision}")
        return self.coeffs[n]


def dim_modular(k: int) -> int:
    if k < 0 or k % 2:
        return 0
    if k % 12 == 2:
        return k // 12
    return k // 12 + 1


def dim_cusp(k: int) -> int:
    return max(dim_modular(k) - 1, 0) if k >= 4 else 0


def miller_basis(k: int, P: int) -> list[QExpansion]:
    """Echelonised basis f_i = q^i + O(q^{dim}) of the full weight-k space
    at level one; f_0 is the Eisenstein-like vector, f_{i>=1} are cusp forms.
    """
    if k < 4 or k % 2:
        raise ValueError("weight must be even and at least 4")
    d = dim_modular(k)
    cache = _series(P)
    rows = []
    for i in range(d):
        w = k - 12 * i
        if w == 0:
            a = b = 0
        elif w % 4 == 0:
            a, b = w // 4, 0
        else:
            a, b = (w - 6) // 4, 1
        rows.append(cache.monomial(i, a, b))
    # monomial i starts q^i with coefficient 1: eliminate upward, all-integer
    for i in range(d - 1, -1, -1):
        for j in range(i + 1, d):
            c = rows[i][j]
            if c:
                rj = rows[j]
                rows[i] = [x - c * y for x, y in zip(rows[i], rj)]
    return [QExpansion(k, tuple(r)) for r in rows]


# --------------------------------------------------------------------------
# Hecke eigenforms
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HeckeEigenform:
    """Arithmetically normalised eigenform: lam[n] = a(n)/n^{(k-1)/2}."""

    weight: int
    lam: np.ndarray = field(repr=False)
    label: int = 0

    @property
    def precision(self) -> int:
        return len(self.lam) - 1

    def eigenvalue(self, n: int) -> float:
        if n > self.precision:
            raise RangeExceedsEigenvalueTable(f"eigenvalues known to {self.precision}")
        return float(self.lam[n])

    def lam_table(self, X: int) -> np.ndarray:
        if X > self.precision:
            raise RangeExceedsEigenvalueTable(f"eigenvalues known to {self.precision}")
        return self.lam[: X + 1]


def _hecke_matrix(basis: list[QExpansion], p: int, k: int, d: int) -> np.ndarray:
    """T_p on the cusp echelon basis, via coordinates = coefficients 1..d."""
    mat = np.zeros((d, d))
    for i, f in enumerate(basis):
        for n in range(1, d + 1):
            v = f.coefficient(p * n)
            if n % p == 0:
                v += p ** (k - 1) * f.coefficient(n // p)
            mat[n - 1, i] = float(v)
    return mat


def hecke_eigenforms(k: int, P: int) -> list[HeckeEigenform]:
    """Simultaneous T2-eigenforms (validated against T3) with normalised
    eigenvalue tables to precision P; empty when the cusp space is trivial.
    """
    if k % 2 or k < 4:
        raise ValueError("weight must be even and at least 4")
    d = dim_cusp(k)
    if d == 0:
        return []
    if k < 12:
        return []
    basis = miller_basis(k, max(P, 4 * (d + 2)))[1:]
    t2 = _hecke_matrix(basis, 2, k, d)
    evals, evecs = np.linalg.eig(t2)
    if np.max(np.abs(evals.imag)) > 1e-6 * np.max(np.abs(evals)):
        raise EigenDecompositionFailure("complex T2 spectrum")
    evals = evals.real
    evecs = evecs.real
    scale = np.max(np.abs(evals))
    gaps = np.abs(evals[:, None] - evals[None, :]) + np.eye(d) * scale
    if np.min(gaps) < 1e-8 * scale:
        # repeated T2 eigenvalue: try splitting with T3
        t3 = _hecke_matrix(basis, 3, k, d)
        evals2, evecs2 = np.linalg.eig(t2 + 0.37 * t3)
        gaps2 = np.abs(evals2[:, None] - evals2[None, :]) + np.eye(d) * np.max(np.abs(evals2))
        if np.min(gaps2) < 1e-8 * np.max(np.abs(evals2)):
            raise EigenDecompositionFailure(f"T2 (and T2+T3) spectrum not separated at k={k}")
        evecs = evecs2.real
        evals = np.array([(t2 @ v / v)[np.argmax(np.abs(v))] for v in evecs.T])
    # one inverse-iteration polish per eigenvector
    for j in range(d):
        A = t2 - evals[j] * np.eye(d)
        v = evecs[:, j]
        try:
            w = np.linalg.solve(A + 1e-9 * np.linalg.norm(t2) * np.eye(d), v)
            evecs[:, j] = w / np.linalg.norm(w)
        except np.linalg.LinAlgError:
            pass
    # T3 consistency
    t3 = _hecke_matrix(basis, 3, k, d)
    forms = []
    order = np.argsort(evals)
    for label, j in enumerate(order):
        v = evecs[:, j]
        tv = t3 @ v
        idx = int(np.argmax(np.abs(v)))
        mu3 = tv[idx] / v[idx]
        if np.linalg.norm(tv - mu3 * v) > 1e-6 * np.linalg.norm(tv):
            raise EigenDecompositionFailure(f"T3 does not commute on the T2 eigenvector at k={k}")
        # coefficients a(n) = sum_i v_i b_i(n), normalised to a(1) = 1
        a1 = sum(float(vi) * f.coefficient(1) for vi, f in zip(v, basis))
        lam = np.zeros(P + 1)
        logs = np.arange(P + 1, dtype=float)
        logs[0] = 1.0
        norm = np.exp(-0.5 * (k - 1) * np.log(logs))
        for vi, f in zip(v, basis):
            if vi == 0.0:
                continue
            contrib = np.fromiter((float(c) for c in f.coeffs[: P + 1]), dtype=float, count=P + 1)
            lam += (vi / a1) * contrib
        lam *= norm
        lam[0] = 0.0
        forms.append(HeckeEigenform(weight=k, lam=lam, label=label))
    return forms


_eigenform_cache: dict = {}


def eigenforms_cached(k: int, P: int) -> list[HeckeEigenform]:
    key = k
    cur = _eigenform_cache.get(key)
    if cur is None or cur[0] < P:
        _eigenform_cache[key] = (P, hecke_eigenforms(k, P))
    return _eigenform_cache[key][1]


def delta_form(P: int) -> HeckeEigenform:
    return eigenforms_cached(12, P)[0]


# --------------------------------------------------------------------------
# fixed form g
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedForm:
    """The fixed automorphic form: holomorphic eigenform, Maass form with
    user-supplied data, or Eisenstein series E_r (r = 0 allowed)."""

    variant: str                      # "holomorphic" | "maass" | "eisenstein"
    weight: int = 0                   # holomorphic only
    r: float = 0.0                    # maass / eisenstein spectral parameter
    eps: int = 1                      # maass sign
    form: HeckeEigenform | None = None
    table: tuple = field(default=None, repr=False)

    def lam_table(self, X: int) -> np.ndarray:
        if self.variant == "holomorphic":
            return self.form.lam_table(X)
        if self.variant == "eisenstein":
            return eisenstein_lambda_table(self.r, X)
        if self.table is None or len(self.table) <= X:
            raise RangeExceedsEigenvalueTable("supplied eigenvalue table too short")
        return np.asarray(self.table[: X + 1])

    def lam(self, n: int) -> float:
        return float(self.lam_table(n)[n])

    def describe(self) -> str:
        if self.variant == "holomorphic":
            return f"holomorphic weight {self.weight}"
        if self.variant == "maass":
            return f"maass r={self.r} eps={self.eps}"
        return f"eisenstein r={self.r}"


def holomorphic_form(k: int, P: int = 4096, label: int = 0) -> FixedForm:
    forms = eigenforms_cached(k, P)
    if not forms:
        raise ValueError(f"no cusp forms at weight {k}")
    return FixedForm(variant="holomorphic", weight=k, form=forms[label])


def eisenstein_form(r: float) -> FixedForm:
    return FixedForm(variant="eisenstein", r=float(r))


def load_eigenform_file(path: str) -> FixedForm:
    """Load a user-supplied eigenvalue table.

    Line-oriented text; comments start with '#'.  Header is either
    ``holomorphic <weight> <level> [character]`` or ``maass <r> <epsilon>``,
    followed by ``n lambda(n)`` pairs.  The loader checks lambda(1) = 1 and
    multiplicativity on the coprime pairs present in the table.  The sign
    convention for the Maass ``epsilon`` must match the dual-cusp kernels
    (see voronoi_kernel); the file format cannot express, and the loader
    cannot check, that choice.
    """
    header = None
    pairs = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if header is None:
                header = line.split()
                continue
            n_str, v_str = line.split()[:2]
            pairs[int(n_str)] = float(v_str)
    if header is None or not pairs:
        raise ValueError("empty eigenform file")
    if abs(pairs.get(1, 0.0) - 1.0) > 1e-10:
        raise ValueError("eigenvalue table must have lambda(1) = 1")
    X = max(pairs)
    table = np.zeros(X + 1)
    for n, v in pairs.items():
        table[n] = v
    # multiplicativity spot check on coprime pairs in range
    for m in range(2, min(X, 50)):
        for n in range(m + 1, min(X // m + 1, 50)):
            if math.gcd(m, n) == 1 and m in pairs and n in pairs and m * n in pairs:
                if abs(pairs[m] * pairs[n] - pairs[m * n]) > 1e-8 * (1 + abs(pairs[m * n])):
                    raise ValueError(f"multiplicativity fails at ({m},{n})")
    kind = header[0].lower()
    if kind.startswith("holo"):
        weight = int(header[1])
        level = int(header[2]) if len(header) > 2 else 1
        lamarr = table
        form = HeckeEigenform(weight=weight, lam=lamarr, label=-1)
        return FixedForm(variant="holomorphic", weight=weight, form=form)
    if kind.startswith("maass"):
        r = float(header[1])
        eps = int(header[2]) if len(header) > 2 else 1
        if eps not in (-1, 1):
            raise ValueError("epsilon must be +-1")
        return FixedForm(variant="maass", r=r, eps=eps, table=tuple(table))
    raise ValueError(f"unknown eigenform kind {header[0]!r}")


# --------------------------------------------------------------------------
# harmonic weights via the trace identity
# --------------------------------------------------------------------------

def _kloosterman_side(
    k: int, m: int, n: int, chi: PrimitiveCharacter, c_max: int | None = None
) -> float:
    """delta_{m,n} + 2 pi i^{-k} sum_{N|c} S_chi(m,n,c) J_{k-1}(4 pi sqrt(mn)/c) / c,
    truncated where the small-argument J bound puts the tail below 1e-15."""
    N = chi.modulus
    x0 = 4.0 * math.pi * math.sqrt(m * n)
    if c_max is None:
        c_max = int(x0) + 8
        while True:
            x = x0 / c_max
            # tail bound: sum_{c > c_max} (x0/2c)^{k-1}/Gamma(k)/c
            t = (x0 / (2 * c_max)) ** (k - 1) / math.gamma(k) / (k - 2)
            if t < 1e-16 or c_max > 100000:
                break
            c_max *= 2
    total = 0.0
    ikk = (-1.0) ** (k // 2)  # i^{-k} for even k
    for c in range(N, c_max + 1, N):
        S = kloosterman(chi, m, n, c)
        val = S.real  # the sum is real for the characters used here at level 1
        total += val / c * sp.jv(k - 1, x0 / c)
    side = 2.0 * math.pi * ikk * total
    if m == n:
        side += 1.0
    return side


def petersson_rho(
    k: int,
    ctx: PrecisionCtx = DEFAULT_CTX,
    P: int = 256,
    pairs: list[tuple[int, int]] | None = None,
) -> np.ndarray:
    """Harmonic weights rho(f_{j,k}) solved from the trace identity on
    diagonal pairs (least squares, residual checked against the tolerance)."""
    forms = eigenforms_cached(k, P)
    d = len(forms)
    if d == 0:
        return np.zeros(0)
    chi = trivial_character()
    if pairs is None:
        pairs = [(m, m) for m in range(1, d + 2)]
    A = np.zeros((len(pairs), d))
    b = np.zeros(len(pairs))
    for i, (m, n) in enumerate(pairs):
        for j, f in enumerate(forms):
            A[i, j] = f.eigenvalue(m) * f.eigenvalue(n)
        b[i] = _kloosterman_side(k, m, n, chi)
    if np.linalg.matrix_rank(A, tol=1e-10) < d:
        raise IllConditioned(f"eigenvalue design matrix rank-deficient at k={k}")
    rho, *_ = np.linalg.lstsq(A, b, rcond=None)
    resid = np.max(np.abs(A @ rho - b))
    if resid > 100 * ctx.target_tol:
        raise IllConditioned(f"weight solve residual {resid:g} at k={k}")
    if np.any(rho <= 0):
        raise IllConditioned(f"nonpositive harmonic weight at k={k}")
    return rho


def petersson_residual(
    k: int, m: int, n: int, ctx: PrecisionCtx = DEFAULT_CTX, P: int = 256
) -> float:
    """|sum_j rho_j lambda_j(m) lambda_j(n) - Kloosterman side| at a pair
    that may be held out of the weight solve."""
    forms = eigenforms_cached(k, P)
    rho = petersson_rho(k, ctx, P)
    lhs = sum(r * f.eigenvalue(m) * f.eigenvalue(n) for r, f in zip(rho, forms))
    return abs(lhs - _kloosterman_side(k, m, n, trivial_character()))
