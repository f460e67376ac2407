"""Spectral certification: dominant eigenvalue, second eigenmodulus, strong
Perron-Frobenius and Pisot verdicts, primitivity of nonnegative matrices.

Root finding runs the Aberth-Ehrlich simultaneous iteration in mpmath
arithmetic at twice the requested precision, after an exact square-free
decomposition so multiple roots cannot stall the iteration.  Verdicts
carry a tolerance: anything within the tolerance band is reported as
"indeterminate" rather than guessed.

The environment variable RMC_PRECISION_BITS overrides the default
working precision (bits of mantissa) for every operation here.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from mpmath import mp, mpc, mpf, workprec

from . import exactmat
from .exactmat import IntPolynomial, poly_degree, poly_trim
from .recurrence import Recurrence, standard_seed

DEFAULT_PRECISION_BITS = 128
PRECISION_ENV = "RMC_PRECISION_BITS"
DEFAULT_TOLERANCE = 1e-9

VERDICT_YES = "yes"
VERDICT_NO = "no"
VERDICT_INDETERMINATE = "indeterminate"


class RootFindingError(ArithmeticError):
    """Simultaneous iteration failed to converge; carries the best iterate."""

    def __init__(self, message: str, best: Optional[list] = None):
        super().__init__(message)
        self.best = best or []


class DominantRootError(ArithmeticError):
    """No simple positive dominant root (the matrix is not strong Perron-Frobenius)."""


def resolve_precision(bits: Optional[int] = None) -> int:
    if bits is not None:
        if bits < 16:
            raise ValueError("precision must be at least 16 bits")
        return int(bits)
    env = os.environ.get(PRECISION_ENV)
    if env:
        return max(16, int(env))
    return DEFAULT_PRECISION_BITS


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------

@dataclass
class RootSet:
    """All complex roots of a polynomial with multiplicities and residuals."""

    roots: list
    multiplicities: list[int]
    residuals: list
    degree: int
    precision_bits: int

    @property
    def residual_bound(self):
        return max(self.residuals) if self.residuals else mpf(0)

    def moduli(self) -> list:
        """Root moduli repeated by multiplicity, descending."""
        out = []
        for r, m in zip(self.roots, self.multiplicities):
            out.extend([abs(r)] * m)
        out.sort(reverse=True)
        return out


def _to_mp_coeffs(f: Sequence) -> list:
    out = []
    for c in poly_trim(list(f)):
        if isinstance(c, Fraction):
            out.append(mpf(c.numerator) / mpf(c.denominator))
        else:
            out.append(mpf(c))
    return out


def _horner(coeffs: Sequence, z):
    acc = mpc(0)
    for c in coeffs:
        acc = acc * z + c
    return acc


def _aberth(coeffs: list, max_steps: int = 200) -> list:
    """Aberth-Ehrlich iteration for a square-free polynomial (mp coefficients)."""
    deg = len(coeffs) - 1
    if deg == 1:
        return [mpc(-coeffs[1] / coeffs[0])]
    dcoeffs = [c * (deg - i) for i, c in enumerate(coeffs[:-1])]
    radius = 1 + max(abs(c) for c in coeffs[1:]) / abs(coeffs[0])
    # Asymmetric start angles keep the iteration off the real axis traps.
    z = [
        radius * mp.exp(mpc(0, 2 * mp.pi * (j + mpf(3) / 8) / deg + mpf(1) / (2 * deg)))
        for j in range(deg)
    ]
    eps = mpf(2) ** (-(mp.prec - 8))
    best = z
    for _ in range(max_steps):
        new = list(z)
        max_step = mpf(0)
        for j in range(deg):
            pj = _horner(coeffs, z[j])
            dpj = _horner(dcoeffs, z[j])
            if dpj == 0:
                new[j] = z[j] + eps * (1 + abs(z[j]))
                max_step = max(max_step, abs(new[j] - z[j]))
                continue
            w = pj / dpj
            s = mpc(0)
            for l in range(deg):
                if l != j:
                    diff = z[j] - z[l]
                    if diff == 0:
                        diff = eps * (1 + abs(z[j]))
                    s += 1 / diff
            denom = 1 - w * s
            if denom == 0:
                corr = w
            else:
                corr = w / denom
            new[j] = z[j] - corr
            max_step = max(max_step, abs(corr))
        z = new
        best = z
        scale = max(mpf(1), max(abs(x) for x in z))
        if max_step <= eps * scale:
            return z
    raise RootFindingError("Aberth iteration did not converge", best=best)


def _snap_real(roots: list) -> list:
    thr = mpf(2) ** (-(mp.prec // 2))
    out = []
    for r in roots:
        if abs(r.imag) <= thr * (1 + abs(r)):
            out.append(mpc(r.real, 0))
        else:
            out.append(r)
    return out


def all_roots(f: Sequence, precision: Optional[int] = None) -> RootSet:
    """All complex roots of a monic polynomial, with multiplicities.

    The polynomial is first split into exact square-free factors, each of
    which is solved by Aberth-Ehrlich at twice the requested precision.
    On persistent non-convergence the error carries the best iterate.
    """
    bits = resolve_precision(precision)
    f = poly_trim(list(f))
    if poly_degree(f) < 1:
        raise ValueError("polynomial must have degree at least 1")
    factors = exactmat.squarefree_factors(f)
    roots: list = []
    mults: list[int] = []
    with workprec(2 * bits):
        for factor, mult in factors:
            found = _aberth(_to_mp_coeffs(factor))
            for r in _snap_real(found):
                roots.append(r)
                mults.append(mult)
        full = _to_mp_coeffs(f)
        residuals = [abs(_horner(full, r)) for r in roots]
    return RootSet(roots=roots, multiplicities=mults, residuals=residuals,
                   degree=poly_degree(f), precision_bits=bits)


# ---------------------------------------------------------------------------
# dominant root analysis
# ---------------------------------------------------------------------------

@dataclass
class _Dominance:
    verdict: str                 # yes / no / indeterminate (about "simple positive dominant")
    tau: Optional[object] = None
    index: Optional[int] = None
    reason: str = ""


def _dominance(rootset: RootSet, tol: float) -> _Dominance:
    with workprec(2 * rootset.precision_bits):
        return _dominance_inner(rootset, tol)


def _dominance_inner(rootset: RootSet, tol: float) -> _Dominance:
    pairs = sorted(
        ((abs(r), i) for i, r in enumerate(rootset.roots)),
        key=lambda t: t[0],
        reverse=True,
    )
    top_mod, top_i = pairs[0]
    top = rootset.roots[top_i]
    if rootset.multiplicities[top_i] > 1:
        return _Dominance(VERDICT_NO, reason="dominant root is not simple")
    if len(pairs) > 1:
        second_mod = pairs[1][0]
        margin = (top_mod - second_mod) / top_mod if top_mod > 0 else mpf(0)
        if margin <= tol:
            second = rootset.roots[pairs[1][1]]
            conj_gap = abs(second - mp.conj(top))
            if abs(top.imag) > tol * top_mod and conj_gap <= tol * top_mod:
                # A complex conjugate pair shares its modulus exactly: no
                # single eigenvalue dominates.
                return _Dominance(VERDICT_NO, reason="dominant modulus is a conjugate pair")
            return _Dominance(VERDICT_INDETERMINATE, reason="dominance margin within tolerance")
    if abs(top.imag) > tol * max(top_mod, mpf(1)):
        return _Dominance(VERDICT_NO, reason="dominant root is not real")
    tau = top.real
    if tau <= tol:
        if tau < -tol:
            return _Dominance(VERDICT_NO, reason="dominant root is negative")
        return _Dominance(VERDICT_INDETERMINATE, reason="dominant root too close to zero")
    return _Dominance(VERDICT_YES, tau=tau, index=top_i)


def second_eigenmodulus(f: Sequence, precision: Optional[int] = None):
    """Largest modulus among the non-dominant roots of a monic polynomial."""
    bits = resolve_precision(precision)
    rootset = all_roots(f, bits)
    with workprec(2 * bits):
        moduli = rootset.moduli()
        if len(moduli) < 2:
            raise ValueError("polynomial must have degree at least 2")
        sigma = moduli[1]
    with workprec(bits):
        return +sigma


def transition_ratio(rec: Recurrence, precision: Optional[int] = None):
    """Dominant eigenvalue of the recurrence, via its standard sequence.

    The starting guess is the first consecutive-term ratio of the
    standard sequence stable to six digits; Newton refinement on the
    characteristic polynomial then polishes it to working precision.
    The result is cross-checked against the full root set and an error
    is raised when no simple positive dominant root exists.
    """
    if rec.a0 == 0:
        raise ValueError("transition ratio requires an invertible recurrence (a_0 != 0)")
    bits = resolve_precision(precision)
    f = rec.char_poly()
    rootset = all_roots(f, bits)
    dom = _dominance(rootset, DEFAULT_TOLERANCE)
    if dom.verdict != VERDICT_YES:
        raise DominantRootError(f"no simple positive dominant root: {dom.reason}")

    guess = _standard_ratio_guess(rec)
    with workprec(2 * bits):
        z = mpf(guess) if guess is not None else mpf(dom.tau)
        df = [c * (len(f) - 1 - i) for i, c in enumerate(f[:-1])]
        eps = mpf(2) ** (-(2 * bits - 6))
        for _ in range(120):
            fz = _horner(f, z).real
            dfz = _horner(df, z).real
            if dfz == 0:
                break
            step = fz / dfz
            z -= step
            if abs(step) <= eps * max(mpf(1), abs(z)):
                break
        tau = z
        if abs(tau - dom.tau) > mpf(2) ** (-(bits // 2)) * max(mpf(1), abs(tau)):
            # Newton wandered to a different root; trust the certified one.
            tau = mpf(dom.tau)
    with workprec(bits):
        return +tau


def _standard_ratio_guess(rec: Recurrence, limit: int = 2000) -> Optional[float]:
    window = list(reversed(standard_seed(rec.order)))
    prev_ratio = None
    for _ in range(limit):
        nxt = sum(a * x for a, x in zip(rec.coeffs, window))
        last = window[-1]
        if last != 0:
            ratio = nxt / last
            if prev_ratio is not None and ratio != 0 and abs(ratio - prev_ratio) <= 1e-6 * max(1.0, abs(ratio)):
                return ratio
            prev_ratio = ratio
        window = window[1:] + [nxt]
    return None


# ---------------------------------------------------------------------------
# strong Perron-Frobenius
# ---------------------------------------------------------------------------

@dataclass
class SpfResult:
    verdict: str
    tau: Optional[object] = None
    vector: Optional[list] = None
    tolerance: float = DEFAULT_TOLERANCE
    reason: str = ""


def _is_left_companion(a: Sequence[Sequence[int]]) -> bool:
    k = len(a)
    if k < 2:
        return False
    for i in range(1, k):
        for j in range(k):
            expect = 1 if j == i - 1 else 0
            if a[i][j] != expect:
                return False
    return True


def _companion_vector(tau, k: int) -> list:
    return [tau ** (k - 1 - j) for j in range(k)]


def _eigenvector(a: Sequence[Sequence[int]], lam, bits: int) -> list:
    """Eigenvector for a simple eigenvalue by shifted inverse iteration."""
    k = len(a)
    with workprec(2 * bits):
        shift = lam * (1 + mpf(2) ** (-bits)) + mpf(2) ** (-bits)
        m = mp.matrix(k, k)
        for i in range(k):
            for j in range(k):
                m[i, j] = mpf(a[i][j]) - (shift if i == j else 0)
        v = mp.matrix([mpf(1)] * k)
        for _ in range(4):
            try:
                v = mp.lu_solve(m, v)
            except ZeroDivisionError:
                break
            norm = max(abs(x) for x in v)
            if norm == 0:
                break
            v = v / norm
        pivot = max(range(k), key=lambda i: abs(v[i]))
        if v[pivot] != 0:
            v = v / v[pivot]
        return [v[i] for i in range(k)]


def is_strong_perron_frobenius(
    a: Sequence[Sequence[int]],
    precision: Optional[int] = None,
    tol: float = DEFAULT_TOLERANCE,
) -> SpfResult:
    """Verdict on the strong Perron-Frobenius property of a square matrix.

    Yes means: simple positive dominant eigenvalue whose eigenvector can
    be oriented strictly positive.  Verdicts inside the tolerance band
    come back indeterminate instead of guessed.  Companion-form matrices
    take the closed-form eigenvector (tau**(k-1), ..., tau, 1).
    """
    bits = resolve_precision(precision)
    k = exactmat.dim(a)
    f = exactmat.char_poly(a)
    rootset = all_roots(f, bits)
    dom = _dominance(rootset, tol)
    if dom.verdict != VERDICT_YES:
        return SpfResult(dom.verdict, reason=dom.reason, tolerance=tol)
    tau = dom.tau
    if _is_left_companion(a):
        with workprec(2 * bits):
            vec = _companion_vector(tau, k)
        return SpfResult(VERDICT_YES, tau=tau, vector=vec, tolerance=tol)
    vec = _eigenvector(a, tau, bits)
    with workprec(2 * bits):
        vmax = max(abs(x) for x in vec)
        if vmax == 0:
            return SpfResult(VERDICT_INDETERMINATE, tau=tau,
                             reason="eigenvector collapsed", tolerance=tol)
        # Orient so the largest component is positive.
        pivot = max(range(k), key=lambda i: abs(vec[i]))
        if vec[pivot] < 0:
            vec = [-x for x in vec]
        if any(x < -tol * vmax for x in vec):
            return SpfResult(VERDICT_NO, tau=tau, vector=vec,
                             reason="dominant eigenvector changes sign", tolerance=tol)
        if any(x <= tol * vmax for x in vec):
            return SpfResult(VERDICT_INDETERMINATE, tau=tau, vector=vec,
                             reason="eigenvector entry within tolerance of zero", tolerance=tol)
    return SpfResult(VERDICT_YES, tau=tau, vector=vec, tolerance=tol)


# ---------------------------------------------------------------------------
# Pisot
# ---------------------------------------------------------------------------

def is_pisot(f: Sequence[int], precision: Optional[int] = None,
             tol: float = DEFAULT_TOLERANCE) -> str:
    """Pisot verdict for a monic integer polynomial.

    Yes means a simple positive dominant root with every other root
    strictly inside the unit disk.  Roots whose modulus falls within the
    tolerance band around 1 trigger an exact boundary test: a nontrivial
    gcd of f(z) and its coefficient reversal certifies a unit-circle or
    reciprocal root pair (definite no); otherwise the verdict is
    indeterminate rather than guessed.
    """
    f = poly_trim(list(f))
    if f[0] != 1:
        raise ValueError("Pisot test requires a monic polynomial")
    if f[-1] == 0:
        raise ValueError("Pisot test requires a nonzero free term")
    bits = resolve_precision(precision)
    rootset = all_roots(f, bits)
    dom = _dominance(rootset, tol)
    if dom.verdict != VERDICT_YES:
        return dom.verdict if dom.verdict == VERDICT_INDETERMINATE else VERDICT_NO
    others = [r for i, r in enumerate(rootset.roots) if i != dom.index
              for _ in range(rootset.multiplicities[i])]
    if not others:
        return VERDICT_YES
    with workprec(2 * bits):
        moduli = [abs(r) for r in others]
        if all(m < 1 - tol for m in moduli):
            return VERDICT_YES
        if any(m > 1 + tol for m in moduli):
            return VERDICT_NO
        # Boundary band: decide exactly where possible.
        band = [r for r, m in zip(others, moduli) if 1 - tol <= m <= 1 + tol]
    if exactmat.poly_eval(f, 1) == 0 or exactmat.poly_eval(f, -1) == 0:
        return VERDICT_NO
    g = exactmat.poly_gcd(f, exactmat.poly_reverse(f))
    if poly_degree(g) >= 1:
        with workprec(2 * bits):
            coeffs = _to_mp_coeffs(g)
            scale = max(abs(c) for c in coeffs)
            thr = mpf(2) ** (-bits) * scale
            for r in band:
                if abs(_horner(coeffs, r)) <= thr * (1 + abs(r)) ** poly_degree(g):
                    return VERDICT_NO
    return VERDICT_INDETERMINATE


# ---------------------------------------------------------------------------
# primitivity
# ---------------------------------------------------------------------------

def is_primitive(a: Sequence[Sequence[int]]) -> bool:
    """Primitivity of a nonnegative matrix by the graph test.

    True iff the directed graph on nonzero entries is strongly connected
    and the gcd of its directed cycle lengths is 1 (BFS level-difference
    gcd from an arbitrary root).
    """
    k = exactmat.dim(a)
    if any(x < 0 for row in a for x in row):
        raise ValueError("primitivity is defined for nonnegative matrices only")
    succ = [[j for j in range(k) if a[i][j] != 0] for i in range(k)]
    pred = [[i for i in range(k) if a[i][j] != 0] for j in range(k)]

    def reaches_all(adj: list[list[int]]) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == k

    if not (reaches_all(succ) and reaches_all(pred)):
        return False
    level = {0: 0}
    queue = [0]
    while queue:
        u = queue.pop(0)
        for v in succ[u]:
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u in range(k):
        for v in succ[u]:
            g = math.gcd(g, abs(level[u] + 1 - level[v]))
    return g == 1


# ---------------------------------------------------------------------------
# aggregate report
# ---------------------------------------------------------------------------

@dataclass
class SpectralReport:
    """Spectral certificate for a transition matrix or recurrence."""

    tau: Optional[object]
    sigma: Optional[object]
    dominant_vector: Optional[list]
    is_spf: str
    is_pisot: str
    is_primitive: Optional[bool]
    tolerance: float
    precision_bits: int
    char_poly: IntPolynomial = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tau": mp.nstr(self.tau, 17) if self.tau is not None else None,
            "sigma": mp.nstr(self.sigma, 17) if self.sigma is not None else None,
            "dominant_vector": [mp.nstr(x, 17) for x in self.dominant_vector]
            if self.dominant_vector is not None else None,
            "spf": self.is_spf,
            "pisot": self.is_pisot,
            "primitive": self.is_primitive,
            "tolerance": self.tolerance,
            "precision_bits": self.precision_bits,
            "char_poly": [str(c) for c in self.char_poly],
        }


def analyze_matrix(a: Sequence[Sequence[int]], precision: Optional[int] = None,
                   tol: float = DEFAULT_TOLERANCE) -> SpectralReport:
    bits = resolve_precision(precision)
    f = exactmat.char_poly(a)
    rootset = all_roots(f, bits)
    with workprec(2 * bits):
        moduli = rootset.moduli()
    spf = is_strong_perron_frobenius(a, bits, tol)
    try:
        pisot = is_pisot(f, bits, tol)
    except ValueError:
        pisot = VERDICT_NO
    primitive = None
    if all(x >= 0 for row in a for x in row):
        primitive = is_primitive(a)
    sigma = moduli[1] if len(moduli) > 1 else None
    return SpectralReport(
        tau=spf.tau,
        sigma=sigma,
        dominant_vector=spf.vector,
        is_spf=spf.verdict,
        is_pisot=pisot,
        is_primitive=primitive,
        tolerance=tol,
        precision_bits=bits,
        char_poly=f,
    )


def analyze_recurrence(rec: Recurrence, precision: Optional[int] = None,
                       tol: float = DEFAULT_TOLERANCE) -> SpectralReport:
    from .coding import left_companion  # local import avoids a cycle
    return analyze_matrix(left_companion(rec), precision, tol)
