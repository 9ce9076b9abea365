"""Dirichlet characters, twisted Kloosterman sums, divisor-type eigenvalues,
and the quadruple character-sum identity with its brute-force oracle.

Characters are stored as explicit value tables built from the CRT
decomposition of (Z/N)^x with a deterministic labelling, which is cheap at
the moduli this package ever sees.  All sums are enumerated directly; the
only twist is that the brute-force quadruple sum reuses one residue-class
enumeration per modulus through a unit-part reduction (an exact identity,
not an approximation) so the spec-scale truncation fits its runtime budget.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from rsmoment.numerics import DEFAULT_CTX, PrecisionCtx
from rsmoment.special_functions import PoleAtS, zeta


class ModulusNotDivisible(ValueError):
    """Kloosterman sums S_chi(m, n, c) require N | c."""


class ArgumentNotCoprime(ValueError):
    """The restricted character sum needs pairwise coprime d1, d2, g and N | gh."""


# --------------------------------------------------------------------------
# small factorization helpers
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Trial-division factorization, adequate for every modulus used here."""
    if n < 1:
        raise ValueError("n must be positive")
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def euler_phi(n: int) -> int:
    out = n
    for p, _ in factorize(n):
        out = out // p * (p - 1)
    return out


def divisors(n: int) -> list[int]:
    out = [1]
    for p, e in factorize(n):
        out = [d * p ** i for d in out for i in range(e + 1)]
    return sorted(out)


def _primitive_root(q: int) -> int:
    """Smallest primitive root modulo q = p^a (p odd) or q in {2, 4}."""
    phi = euler_phi(q)
    prime_factors = [p for p, _ in factorize(phi)]
    for g in range(2, q):
        if math.gcd(g, q) != 1:
            continue
        if all(pow(g, phi // p, q) != 1 for p in prime_factors):
            return g
    raise ArithmeticError(f"no primitive root mod {q}")


# --------------------------------------------------------------------------
# Dirichlet characters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimitiveCharacter:
    """An even primitive Dirichlet character, stored as its value table.

    ``values[a % N]`` is chi(a); zero off the unit group.  ``label`` is the
    deterministic index of the character within the construction order of
    the full character group mod N.
    """

    modulus: int
    label: int
    values: tuple = field(repr=False)

    def __call__(self, a: int) -> complex:
        return self.values[a % self.modulus]

    @property
    def is_trivial(self) -> bool:
        return self.modulus == 1

    def conj(self) -> "PrimitiveCharacter":
        return PrimitiveCharacter(self.modulus, self.label, tuple(np.conj(v) for v in self.values))

    def value_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=complex)


def _character_group(N: int) -> list[tuple]:
    """All character value tables mod N in a deterministic order."""
    if N == 1:
        return [(1.0 + 0.0j,)]
    comps = []  # per CRT factor: (q, list of (order, generator) cyclic parts)
    for p, e in factorize(N):
        q = p ** e
        if p == 2:
            if e == 1:
                comps.append((q, []))
            elif e == 2:
                comps.append((q, [(2, q - 1)]))
            else:
                comps.append((q, [(2, q - 1), (2 ** (e - 2), 5)]))
        else:
            comps.append((q, [(euler_phi(q), _primitive_root(q))]))
    # discrete logs per factor
    tables = []
    for q, parts in comps:
        logt = {}
        if not parts:
            logt = {1 % q: ()}
            if q > 1:
                logt = {a: () for a in range(q) if math.gcd(a, q) == 1}
            tables.append((q, parts, logt))
            continue
        exps = [range(order) for order, _ in parts]
        import itertools

        logt = {}
        for tup in itertools.product(*exps):
            a = 1
            for (order, gen), e in zip(parts, tup):
                a = a * pow(gen, e, q) % q
            logt[a] = tup
        tables.append((q, parts, logt))
    # enumerate characters as products over factors
    import itertools

    char_indices = [list(itertools.product(*[range(order) for order, _ in parts])) for q, parts, _ in tables]
    out = []
    for combo in itertools.product(*char_indices):
        vals = np.zeros(N, dtype=complex)
        for a in range(N):
            if math.gcd(a, N) != 1:
                continue
            v = 1.0 + 0.0j
            for (q, parts, logt), idx in zip(tables, combo):
                tup = logt[a % q]
                for (order, _), j, e in zip(parts, idx, tup):
                    v *= cmath.exp(2j * cmath.pi * j * e / order)
            vals[a] = v
        out.append(tuple(vals))
    return out


def _is_primitive(values: tuple, N: int) -> bool:
    if N == 1:
        return True
    for p, _ in factorize(N):
        M = N // p
        # chi is induced from mod M iff chi is trivial on units ≡ 1 (mod M)
        trivial_on_kernel = True
        for x in range(1, N, M if M > 0 else N):
            if math.gcd(x, N) == 1 and abs(values[x % N] - 1) > 1e-12:
                trivial_on_kernel = False
                break
        if trivial_on_kernel:
            return False
    return True


def primitive_even_characters(N: int) -> list[PrimitiveCharacter]:
    """All primitive even characters mod N, deterministically ordered.

    May be empty (e.g. N = 3, 4); always nonempty for N = 1.
    """
    if N < 1:
        raise ValueError("N must be positive")
    chars = _character_group(N)
    out = []
    for label, vals in enumerate(chars):
        if N > 1 and abs(vals[(N - 1) % N] - 1) > 1e-12:
            continue  # odd
        if not _is_primitive(vals, N):
            continue
        out.append(PrimitiveCharacter(N, label, vals))
    return out


def trivial_character() -> PrimitiveCharacter:
    return primitive_even_characters(1)[0]


# --------------------------------------------------------------------------
# Twisted Kloosterman sums
# --------------------------------------------------------------------------

def kloosterman(chi: PrimitiveCharacter, m: int, n: int, c: int) -> complex:
    """S_chi(m, n, c) = sum over units d mod c of chi(d) e((m dbar + n d)/c).

    Direct O(c) enumeration with modular inverses; no nontrivial bound is
    used anywhere downstream, so no fast path is needed.
    """
    if c < 1:
        raise ValueError("c must be positive")
    if c % chi.modulus != 0:
        raise ModulusNotDivisible(f"need {chi.modulus} | c, got c={c}")
    if c == 1:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    tw = 2j * math.pi / c
    for d in range(1, c):
        if math.gcd(d, c) != 1:
            continue
        dbar = pow(d, -1, c)
        total += chi(d) * cmath.exp(tw * ((m * dbar + n * d) % c))
    return total


# --------------------------------------------------------------------------
# Eisenstein Hecke eigenvalues
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EisensteinEigenvalues:
    """lambda(n) = sum_{ab=n} (a/b)^{ir}; real, multiplicative, lambda(1)=1."""

    r: float

    def __call__(self, n: int) -> float:
        return eisenstein_lambda(self.r, n)

    def table(self, X: int) -> np.ndarray:
        return eisenstein_lambda_table(self.r, X)


def eisenstein_lambda(r: float, n: int) -> float:
    if n < 1:
        raise ValueError("n must be positive")
    total = 0.0
    for a in divisors(n):
        b = n // a
        total += math.cos(r * (math.log(a) - math.log(b))) if r else 1.0
    # cos pairs a<->b; the loop already visits both orders
    return total


def eisenstein_lambda_table(r: float, X: int) -> np.ndarray:
    """Sieve of lambda(n) for n <= X (index 0 unused)."""
    lam = np.zeros(X + 1)
    for a in range(1, X + 1):
        b = np.arange(1, X // a + 1, dtype=float)
        if r:
            lam[a : a * (X // a) + 1 : a] += np.cos(r * (math.log(a) - np.log(b)))
        else:
            lam[a : a * (X // a) + 1 : a] += 1.0
    return lam


# --------------------------------------------------------------------------
# The quadruple character-sum identity
# --------------------------------------------------------------------------

def xi_closed(
    s: complex, r: float, chi: PrimitiveCharacter, sign: int = +1, ctx: PrecisionCtx = DEFAULT_CTX
) -> complex:
    """Closed form zeta(2s-2ir) zeta(1+2s+2ir) N^{-2s+2ir} prod_{p|N}(1-p^{-2-4ir}).

    The right-hand side carries no sign dependence; ``sign`` is accepted for
    interface symmetry with the brute-force route.
    """
    s = complex(s)
    N = chi.modulus
    for pole in (0.5 + 1j * r, -1j * r):
        if abs(s - pole) < 1e-10:
            raise PoleAtS(f"zeta factor pole at s={s}")
    value = zeta(2 * s - 2j * r, ctx) * zeta(1 + 2 * s + 2j * r, ctx) * N ** (-2 * s + 2j * r)
    for p, _ in factorize(N):
        value *= 1 - p ** complex(-2 - 4j * r)
    return value


def restricted_f_sum(
    d1: int, d2: int, g: int, h: int, m1: int, m2: int, chi: PrimitiveCharacter, sign: int = +1
) -> complex:
    """Direct enumeration of the restricted unit sum

    sum over f mod d1^2 d2 h, f a unit, gcd(g -+ d2 f, d1^2 d2 h) = d1,
    of chi((g fbar -+ d2)/d1) e((m1-m2) f/(d1 h)),

    where ``sign=+1`` selects the upper sign of -+ (i.e. minus).
    """
    N = chi.modulus
    if (g * h) % N != 0:
        raise ArgumentNotCoprime("need N | gh")
    if math.gcd(d1, d2) != 1 or math.gcd(d1, g) != 1 or math.gcd(d2, g) != 1:
        raise ArgumentNotCoprime("d1, d2, g must be pairwise coprime")
    mod = d1 * d1 * d2 * h
    sgn = -1 if sign > 0 else +1  # sign=+1 means the "-" branch of g -+ d2 f
    total = 0.0 + 0.0j
    tw = 2j * math.pi * (m1 - m2) / (d1 * h)
    for f in range(mod) if mod > 1 else [0]:
        if math.gcd(f, mod) != 1:
            continue
        if math.gcd(g + sgn * d2 * f, mod) != d1:
            continue
        fbar = pow(f, -1, mod)
        # chi-argument is the actual integer (g fbar -+ d2)/d1; do not reduce
        # the numerator mod the f-modulus, which would shift it by multiples
        # of d1 d2 h that are visible mod N
        val = g * fbar + sgn * d2
        total += chi((val // d1) % N) * cmath.exp(tw * f)
    return total


def _f_sums_for_tuple(
    d1: int, d2: int, h: int, sgn: int, chi: PrimitiveCharacter, reps: np.ndarray
) -> np.ndarray:
    """Vectorized (m1 = m2) f-sums, one value per residue class in ``reps``.

    The inverse-free shape (equal to the lemma's fbar-form after the unit
    bijection f -> fbar) is

        S(g) = sum over units f mod m with gcd(g f + sgn d2, m) = d1
               of chi((g f + sgn d2) / d1),

    and S(g) depends on g only through g mod L with L = lcm(m, d1 N): the
    f-set through g mod m, the character argument through
    g f + sgn d2 mod d1 N (N | gh makes the quotient well defined mod N).
    A value table indexed by w = g f mod L turns each class sum into a
    single gather.
    """
    N = chi.modulus
    m = d1 * d1 * d2 * h
    fs = np.arange(m, dtype=np.int64)
    fs = fs[np.gcd(fs, m) == 1]
    if N == 1:
        # pure count per representative; reps are gcd classes here
        out = np.empty(len(reps), dtype=complex)
        for i, rep in enumerate(reps.tolist()):
            out[i] = float(np.count_nonzero(np.gcd(rep * fs % m + sgn * d2, m) == d1))
        return out
    L = m // math.gcd(m, d1 * N) * (d1 * N)
    ws = np.arange(L, dtype=np.int64)
    nums = ws + sgn * d2        # representative of g f + sgn d2 mod L
    cond = np.gcd(nums % m, m) == d1
    chivals = chi.value_array()
    q = (np.mod(nums, L) // d1) % N
    val = np.zeros(L, dtype=complex)
    val[cond] = chivals[q[cond]]
    out = np.empty(len(reps), dtype=complex)
    block = max(1, 4_000_000 // max(len(fs), 1))
    for i in range(0, len(reps), block):
        sub = reps[i : i + block, None] * fs[None, :] % L
        out[i : i + block] = val[sub].sum(axis=1)
    return out


def tau(n: int) -> int:
    return len(divisors(n))


def xi_bruteforce(
    s: complex,
    r: float,
    chi: PrimitiveCharacter,
    sign: int = +1,
    cutoff: int = 100,
    skip_threshold: float = 1e-8,
) -> complex:
    """Brute-force quadruple sum truncated to delta, d1, d2, g, h <= cutoff.

    See :func:`xi_bruteforce_profile` for the underlying sweep; this returns
    the single-cutoff value.
    """
    return xi_bruteforce_profile(s, r, chi, sign, (cutoff,), skip_threshold)[cutoff]


def xi_bruteforce_profile(
    s: complex,
    r: float,
    chi: PrimitiveCharacter,
    sign: int = +1,
    cutoffs: tuple[int, ...] = (100,),
    skip_threshold: float = 1e-8,
) -> dict[int, complex]:
    """Quadruple sums truncated to delta, d1, d2, g, h <= X for each X in
    ``cutoffs``, in one sweep.

    lambda = 2+2s+2ir and mu = 2s-2ir weight the variables; the innermost
    f-sum is enumerated exactly over residues mod m = d1^2 d2 h under the
    gcd condition.  Two exact structural facts keep the spec-scale cutoff
    inside its runtime budget without changing the value:

    * the f-sum depends on g only through g mod lcm(m, d1 N) (the gcd
      condition through g mod m, the character argument through
      g f + sgn d2 mod d1 N), so one enumeration per residue class
      serves every g in it -- see :func:`_f_sums_for_tuple`;
    * since (g, d1 d2) = 1 is enforced, the totient ratio
      phi(gh)/phi(d1 d2 g h) = 1 / (d1 d2 prod_{p | d1 d2, p nmid h} (1 - 1/p))
      does not depend on g and factors out of the g-sum.

    Tuples whose bound (the smaller of the trivial phi(m) bound and the
    N d1 d2 tau(h)^2 h bound on the f-sum) contributes less than
    ``skip_threshold`` are dropped, which perturbs the truncated sums far
    below the tolerances they are compared at.
    """
    s = complex(s)
    if s.real <= 0.5:
        raise ValueError("the defining sum needs Re s > 1/2")
    N = chi.modulus
    lam = 2 + 2 * s + 2j * r
    mu = 2 * s - 2j * r
    rl = lam.real
    rm = mu.real
    sgn = -1 if sign > 0 else +1
    cutoffs = tuple(sorted(cutoffs))
    X = cutoffs[-1]
    g_tail = sum(g ** -rm for g in range(1, 1000)) + 1.0

    # delta-sum is an independent factor of the quadruple sum
    delta_partial = {}
    acc = 0.0 + 0.0j
    i = 0
    for dlt in range(1, X + 1):
        while i < len(cutoffs) and dlt > cutoffs[i]:
            delta_partial[cutoffs[i]] = acc
            i += 1
        if math.gcd(dlt, N) == 1:
            acc += dlt ** -(lam + mu)
    for c in cutoffs[i:]:
        delta_partial[c] = acc

    gs = np.arange(1, X + 1, dtype=np.int64)
    g_pow = np.exp(-mu * np.log(gs.astype(float)))

    def fsum_bound(d1, d2, h):
        m = d1 * d1 * d2 * h
        return min(m, N * d1 * d2 * tau(h) ** 2 * h)

    totals = {c: 0.0 + 0.0j for c in cutoffs}
    for d1 in range(1, X + 1):
        if d1 ** -rl * fsum_bound(d1, 1, 1) * g_tail < skip_threshold:
            break
        chi_d1 = chi(d1)
        if chi_d1 == 0:
            continue
        for d2 in range(1, X + 1):
            if math.gcd(d1, d2) != 1:
                continue
            if (d1 * d2) ** -rl * fsum_bound(d1, d2, 1) * g_tail < skip_threshold:
                break
            chi_dd = chi_d1 * np.conj(chi(d2))
            if chi_dd == 0:
                continue
            d1d2 = d1 * d2
            g_cop = np.gcd(gs, d1d2) == 1
            for h in range(1, X + 1):
                if (d1d2 * h) ** -rl * fsum_bound(d1, d2, h) * g_tail < skip_threshold:
                    break
                m = d1 * d1 * d2 * h
                need = N // math.gcd(N, h)
                mask = g_cop if need == 1 else (g_cop & (gs % need == 0))
                if not mask.any():
                    continue
                g_sel = gs[mask]
                gp_sel = g_pow[mask]
                if N == 1:
                    # trivial character: the f-sum is a pure count, invariant
                    # under the unit action that normalises g to gcd(g, m)
                    classes = np.gcd(g_sel, m)
                else:
                    L = m // math.gcd(m, d1 * N) * (d1 * N)
                    classes = g_sel % L
                uniq, inv = np.unique(classes, return_inverse=True)
                svals = _f_sums_for_tuple(d1, d2, h, sgn, chi, uniq)
                phi_ratio = 1.0 / d1d2
                for p, _ in factorize(d1d2):
                    if h % p != 0:
                        phi_ratio /= 1.0 - 1.0 / p
                front = chi_dd * d1d2 ** (-lam) * h ** (-lam) * phi_ratio
                gw = gp_sel * svals[inv]
                for c in cutoffs:
                    if max(d1, d2, h) > c:
                        continue
                    hi = int(np.searchsorted(g_sel, c, side="right"))
                    if hi:
                        totals[c] += front * complex(np.sum(gw[:hi]))
    return {c: delta_partial[c] * totals[c] for c in cutoffs}
