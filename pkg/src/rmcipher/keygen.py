"""Randomized and structured generation of feasible coding keys.

Four routes:

* sieve_companion   - draw recurrence coefficients at random and keep
                      those whose companion matrix has a small simple
                      positive dominant root (optionally Pisot),
* abt_family        - the classical two-parameter families of Pisot
                      polynomials near the multinacci limit points,
* primitive_growth  - grow a primitive 0/1 seed matrix by random
                      increments, keeping the dominant root capped,
* right_form_keygen - pair a strong-Perron-Frobenius right companion
                      matrix with a random nonnegative invertible
                      initial matrix.

Every emitted key is re-validated.  Streams are deterministic in the
configured seed: each candidate draws from its own sub-seeded generator
(derive_seed), so streams can be reproduced and split across workers.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import exactmat, spectral
from .coding import (CodingKey, KeyReport, general_key, is_cyclic, left_companion,
                     right_companion, right_form_key, symmetric_key, validate_key)
from .exactmat import IntMatrix, IntPolynomial
from .recurrence import Recurrence
from .spectral import SpectralReport, VERDICT_YES


def derive_seed(master: int, label: str, index: int) -> int:
    """Documented split function: child seeds are the first 8 bytes of
    blake2b over "master:label:index"."""
    digest = hashlib.blake2b(f"{master}:{label}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class GenConfig:
    order: int
    coeff_range: tuple[int, int] = (-2, 2)
    tau_cap: float = 3.0
    require_pisot: bool = False
    seed: int = 0
    budget: int = 1000
    vector_range: tuple[int, int] = (0, 9)
    index_range: tuple[int, int] = (16, 48)
    precision: Optional[int] = None

    def __post_init__(self) -> None:
        if self.order < 2:
            raise ValueError("order must be at least 2")
        if self.coeff_range[0] > self.coeff_range[1]:
            raise ValueError("coefficient range is empty")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")


@dataclass
class GenStats:
    tried: int = 0
    emitted: int = 0
    rejected: dict[str, int] = field(default_factory=dict)

    def reject(self, reason: str) -> None:
        self.rejected[reason] = self.rejected.get(reason, 0) + 1

    def to_dict(self) -> dict:
        return {"tried": self.tried, "emitted": self.emitted, "rejected": dict(self.rejected)}


@dataclass
class GeneratedKey:
    key: CodingKey
    report: SpectralReport
    provenance: str
    validation: KeyReport


class CyclicVectorError(RuntimeError):
    """Rejection sampling found no cyclic vector; the matrix may be derogatory."""


def random_cyclic_vector(left: IntMatrix, lo: int, hi: int, rng: random.Random,
                         retries: int = 256) -> tuple[int, ...]:
    """Rejection-sample an integer vector from [lo, hi] until it is cyclic."""
    k = len(left)
    for _ in range(retries):
        vec = tuple(rng.randint(lo, hi) for _ in range(k))
        if any(vec) and is_cyclic(left, vec):
            return vec
    raise CyclicVectorError(
        f"no cyclic vector found in {retries} draws; the matrix may be derogatory")


def _draw_index(cfg: GenConfig, rng: random.Random) -> int:
    lo, hi = cfg.index_range
    return rng.randint(lo, hi)


def _passes_spectrum(report: SpectralReport, cfg: GenConfig, stats: GenStats) -> bool:
    if report.is_spf != VERDICT_YES:
        stats.reject("not_spf")
        return False
    if float(report.tau) > cfg.tau_cap:
        stats.reject("tau_above_cap")
        return False
    if cfg.require_pisot and report.is_pisot != VERDICT_YES:
        stats.reject("not_pisot")
        return False
    return True


def sieve_companion(cfg: GenConfig, stats: Optional[GenStats] = None) -> Iterator[GeneratedKey]:
    """Draw coefficient vectors uniformly (a_0 forced nonzero) and keep
    the spectrally feasible ones, paired with a random cyclic vector."""
    stats = stats if stats is not None else GenStats()
    lo, hi = cfg.coeff_range
    for i in range(cfg.budget):
        rng = random.Random(derive_seed(cfg.seed, "sieve", i))
        stats.tried += 1
        coeffs = [rng.randint(lo, hi) for _ in range(cfg.order)]
        if coeffs[0] == 0:
            nonzero = [v for v in range(lo, hi + 1) if v != 0]
            if not nonzero:
                stats.reject("a0_zero")
                continue
            coeffs[0] = rng.choice(nonzero)
        rec = Recurrence(tuple(coeffs))
        report = spectral.analyze_recurrence(rec, cfg.precision)
        if not _passes_spectrum(report, cfg, stats):
            continue
        companion = left_companion(rec)
        try:
            x0 = random_cyclic_vector(companion, *cfg.vector_range, rng)
        except CyclicVectorError:
            stats.reject("no_cyclic_vector")
            continue
        key = symmetric_key(coeffs, x0, _draw_index(cfg, rng))
        validation = validate_key(key, cfg.precision, cfg.tau_cap)
        if not validation.ok:
            stats.reject("validation")
            continue
        stats.emitted += 1
        yield GeneratedKey(key, report, "sieve", validation)


# ---------------------------------------------------------------------------
# multinacci-limit Pisot families
# ---------------------------------------------------------------------------

VARIANT_BINOMIAL = "binomial"     # perturbation z**(r+1) - 1
VARIANT_GEOMETRIC = "geometric"   # perturbation 1 + z + ... + z**(r-1)


@dataclass
class AbtFamilyResult:
    poly: IntPolynomial
    report: SpectralReport
    removed_factors: list[str]
    tau_warning: bool    # dominant root above 2 (small m does that)


def multinacci_poly(r: int) -> IntPolynomial:
    """z**(r+1) - z**r - ... - z - 1, the (r+1)-step multinacci polynomial."""
    return [1] + [-1] * (r + 1)


def abt_family(r: int, m: int, sign: int = -1,
               variant: str = VARIANT_BINOMIAL,
               precision: Optional[int] = None) -> AbtFamilyResult:
    """Pisot-family polynomial z**m * Psi_r(z) +/- q(z), trivial factors removed.

    q(z) is z**(r+1) - 1 for the binomial variant and the geometric sum
    1 + z + ... + z**(r-1) otherwise.  Factors (z - 1) and (z + 1) are
    divided out while they divide exactly; any other non-Pisot outcome
    is reported in the spectral verdict, not repaired.
    """
    if r < 1 or m < 1:
        raise ValueError("family parameters r and m must be positive")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if variant == VARIANT_BINOMIAL:
        q = [1] + [0] * r + [-1]
    elif variant == VARIANT_GEOMETRIC:
        q = [1] * r
    else:
        raise ValueError(f"unknown variant {variant!r}")
    base = exactmat.poly_mul(multinacci_poly(r), [1] + [0] * m)
    poly = exactmat.poly_add(base, exactmat.poly_scale(q, sign))
    removed: list[str] = []
    for factor, label in (([1, -1], "z-1"), ([1, 1], "z+1")):
        while exactmat.poly_degree(poly) > 2:
            quot, rem = exactmat.poly_divide(poly, factor)
            if rem == [0] and all(isinstance(c, int) for c in quot):
                poly = quot
                removed.append(label)
            else:
                break
    companion = left_companion(Recurrence.from_char_poly(poly))
    report = spectral.analyze_matrix(companion, precision)
    warning = report.tau is not None and float(report.tau) > 2
    return AbtFamilyResult(poly=poly, report=report, removed_factors=removed,
                           tau_warning=warning)


# ---------------------------------------------------------------------------
# primitive growth
# ---------------------------------------------------------------------------

def primitive_growth(seed01: IntMatrix, cfg: GenConfig,
                     stats: Optional[GenStats] = None) -> Iterator[GeneratedKey]:
    """Grow a primitive 0/1 seed by sparse random increments.

    Increments hit an entry with probability proportional to
    1/(1 + value), keeping the matrices sparse; candidates whose row-sum
    and column-sum bounds both blow past twice the cap are discarded
    early, and the exact dominant root decides acceptance.  Larger
    entries never break primitivity, so the seed's certificate carries
    over (and is re-checked).
    """
    if not spectral.is_primitive(seed01):
        raise ValueError("seed matrix must be primitive")
    stats = stats if stats is not None else GenStats()
    k = len(seed01)
    hi_entry = max(1, cfg.coeff_range[1])
    base_rate = 0.3
    for i in range(cfg.budget):
        rng = random.Random(derive_seed(cfg.seed, "primitive", i))
        stats.tried += 1
        m = [row[:] for row in seed01]
        for _ in range(rng.randint(1, 3)):
            for r in range(k):
                for c in range(k):
                    if m[r][c] < hi_entry and rng.random() < base_rate / (1 + m[r][c]):
                        m[r][c] += 1
        max_row = max(sum(row) for row in m)
        max_col = max(sum(col) for col in zip(*m))
        if min(max_row, max_col) > 2 * cfg.tau_cap:
            stats.reject("sum_bound")
            continue
        if exactmat.det_exact(m) == 0:
            stats.reject("singular")
            continue
        if not spectral.is_primitive(m):
            stats.reject("not_primitive")
            continue
        report = spectral.analyze_matrix(m, cfg.precision)
        if not _passes_spectrum(report, cfg, stats):
            continue
        try:
            x0 = random_cyclic_vector(m, *cfg.vector_range, rng)
        except CyclicVectorError:
            stats.reject("no_cyclic_vector")
            continue
        key = general_key(m, x0, _draw_index(cfg, rng))
        validation = validate_key(key, cfg.precision, cfg.tau_cap)
        if not validation.ok:
            stats.reject("validation")
            continue
        stats.emitted += 1
        yield GeneratedKey(key, report, "primitive_growth", validation)


# ---------------------------------------------------------------------------
# right companion form
# ---------------------------------------------------------------------------

def right_form_keygen(rec: Recurrence, cfg: GenConfig,
                      retries: int = 256) -> GeneratedKey:
    """Key from a strong-Perron-Frobenius right companion matrix and a
    random nonnegative invertible initial matrix."""
    if rec.a0 == 0:
        raise ValueError("right companion matrix is singular (a_0 = 0)")
    r_matrix = right_companion(rec)
    spf = spectral.is_strong_perron_frobenius(r_matrix, cfg.precision)
    if spf.verdict != VERDICT_YES:
        raise spectral.DominantRootError(
            f"right companion matrix lacks the strong Perron-Frobenius property: {spf.reason}")
    rng = random.Random(derive_seed(cfg.seed, "right_form", 0))
    lo, hi = cfg.vector_range
    lo = max(0, lo)
    for _ in range(retries):
        m0 = [[rng.randint(lo, hi) for _ in range(rec.order)] for _ in range(rec.order)]
        if exactmat.det_exact(m0) != 0:
            break
    else:
        raise RuntimeError(f"no invertible nonnegative initial matrix in {retries} draws")
    key = right_form_key(rec.coeffs, m0, _draw_index(cfg, rng))
    report = spectral.analyze_matrix(r_matrix, cfg.precision)
    validation = validate_key(key, cfg.precision, cfg.tau_cap)
    return GeneratedKey(key, report, "right_form", validation)
