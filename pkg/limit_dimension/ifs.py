"""
Conformal iterated function systems on real intervals.

A system is graph directed: every letter carries a Möbius branch, the base
intervals it may act on (sources) and the base interval its images land in
(target). Circle systems built from Schottky data are moved to a real chart
first, so all geometry here is one-dimensional.

Countable alphabets are an explicit head of letters plus a TailLaw: an
analytic envelope for the norms of all remaining branches, which enters
partition sums and transfer operators as a single weight-only letter.
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special, stats

from .errors import (
    DepthOutOfRange,
    InadmissibleWord,
    InsufficientData,
    InvalidTailLaw,
    NotContracting,
    NumericalFailure,
    PoleInDomain,
    SeparationViolated,
)
from .group import GroupPresentation
from .moebius import (
    MoebiusMap,
    apply,
    cayley_to_disk,
    compose,
    compose_all,
    conjugate,
)
from .results import DimensionResult

logger = logging.getLogger(__name__)

Word = Tuple[int, ...]

DEFAULT_HEAD = 20
MARKOV_TOL = 1e-9
OSC_TOL = 1e-10
POLE_RATIO = 1e-14
MAX_CONTRACTION_LEVEL = 4
MAX_WORDS = 5_000_000
# explicit terms of a log-weighted tail before the integral-test remainder
EXPLICIT_TAIL_TERMS = 10_000
# finest default box scale: spread * 2^-MAX_BOX_LEVEL
MAX_BOX_LEVEL = 40


class OpenSetConditionWarning(UserWarning):
    """Images of two letters overlap in more than a point"""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def overlap(self, other: "Interval") -> float:
        return min(self.hi, other.hi) - max(self.lo, other.lo)


@dataclass(frozen=True)
class Letter:
    """One branch: map applied on the source intervals, landing in target"""
    map: MoebiusMap
    sources: Tuple[int, ...]
    target: int
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(int(s) for s in self.sources))
        if not self.sources:
            raise ValueError("a letter needs at least one source interval")


def derivative_bounds(f: MoebiusMap, interval: Interval) -> Tuple[float, float]:
    """
    (inf, sup) of |f'| on the interval.

    |f'(x)| = 1/|cx + d|^2 and |cx + d|^2 is a quadratic in x, so both
    extremes are exact: the minimum of the quadratic sits at its vertex or at
    an endpoint.

    Raises:
        PoleInDomain: the pole of f lies in the interval
    """
    inf, sup = _derivative_bounds_array(
        np.array([f.c]), np.array([f.d]), interval.lo, interval.hi
    )
    return float(inf[0]), float(sup[0])


def _derivative_bounds_array(c: np.ndarray, d: np.ndarray, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    cc = np.abs(c) ** 2
    cross = np.real(c * np.conj(d))
    dd = np.abs(d) ** 2

    def quad(x):
        return cc * x * x + 2.0 * cross * x + dd

    safe_cc = np.where(cc > 0, cc, 1.0)
    vertex = np.where(cc > 0, -cross / safe_cc, lo)
    q_min = quad(np.clip(vertex, lo, hi))
    q_max = np.maximum(quad(lo), quad(hi))
    if np.any(q_min <= POLE_RATIO * q_max):
        raise PoleInDomain(f"branch pole inside [{lo}, {hi}]")
    return 1.0 / q_max, 1.0 / q_min


def image_interval(f: MoebiusMap, interval: Interval) -> Interval:
    """Image of an interval avoiding the pole (endpoints map to endpoints)"""
    a = apply(f, interval.lo).real
    b = apply(f, interval.hi).real
    return Interval(min(a, b), max(a, b))


@dataclass(frozen=True)
class TailLaw:
    """
    Norm envelope of the branches beyond the head.

    Tail indices are (n, k). With n_sides = 0 there is no n index and the
    branches are k = head+1, head+2, ... With n_sides = 1 or 2 the index n
    runs over 1, 2, ... on one or both sides. Norm bounds:

        B * 2^(-|n| beta) * w(k) <= ||phi'_(n,k)|| <= A * 2^(-|n| alpha) * w(k)
        w(k) = k^(-p) * log(k + 1)^(-q)

    k_sides = 2 counts +k and -k; with an empty head and k_sides = 2 the
    index k = 0 is included and weighted like k = 1.
    """
    upper_constant: float = 1.0
    upper_exponent: float = 1.0
    lower_constant: float = 1.0
    lower_exponent: float = 1.0
    k_power: float = 2.0
    log_power: float = 0.0
    n_sides: int = 0
    k_sides: int = 1
    head: int = DEFAULT_HEAD
    sources: Tuple[int, ...] = (0,)
    target: int = 0
    anchor: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(int(s) for s in self.sources))
        if not (self.upper_constant > 0 and self.lower_constant > 0):
            raise InvalidTailLaw("tail constants must be positive")
        for name in ("upper_exponent", "lower_exponent"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise InvalidTailLaw(f"{name} must lie in (0, 1], got {value}")
        if not self.k_power > 0:
            raise InvalidTailLaw("k_power must be positive")
        if self.log_power < 0:
            raise InvalidTailLaw("log_power must be nonnegative")
        if self.n_sides not in (0, 1, 2) or self.k_sides not in (1, 2):
            raise InvalidTailLaw("n_sides must be 0, 1 or 2 and k_sides 1 or 2")
        if self.head < 0:
            raise InvalidTailLaw("head size must be nonnegative")
        if not self.sources:
            raise InvalidTailLaw("tail needs at least one source interval")

        if self.n_sides == 0:
            consistent = self.lower_constant <= self.upper_constant
        else:
            # B 2^(-n beta) <= A 2^(-n alpha) for every n >= 1
            consistent = self.upper_exponent <= self.lower_exponent and (
                self.lower_constant * 2.0 ** -self.lower_exponent
                <= self.upper_constant * 2.0 ** -self.upper_exponent
            )
        if not consistent:
            raise InvalidTailLaw("lower envelope exceeds the upper envelope")

    @property
    def theta(self) -> float:
        """Finiteness threshold of the k-series"""
        return 1.0 / self.k_power

    @property
    def is_regular(self) -> bool:
        """The k-series diverges at theta (Bertrand series with q/p <= 1)"""
        return self.log_power / self.k_power <= 1.0

    @property
    def first_k(self) -> int:
        return self.head + 1

    def weight(self, k: int) -> float:
        k = max(1, abs(int(k)))
        return k ** -self.k_power * math.log(k + 1.0) ** -self.log_power

    def max_norm(self) -> float:
        """Largest upper bound over single tail branches"""
        k = 1 if self.head == 0 else self.first_k
        n_factor = 2.0 ** -self.upper_exponent if self.n_sides else 1.0
        return self.upper_constant * n_factor * self.weight(k)

    def k_sum(self, sigma: float) -> Tuple[float, float]:
        """
        Lower and upper estimates of sum_k w(k)^sigma over the tail indices
        (both +inf when the series diverges).
        """
        s = self.k_power * sigma
        r = self.log_power * sigma
        if s < 1.0 - 1e-12 or (abs(s - 1.0) <= 1e-12 and r <= 1.0):
            return math.inf, math.inf

        start = self.first_k
        zero_term = 0.0
        if self.head == 0 and self.k_sides == 2:
            zero_term = self.weight(1) ** sigma

        if self.log_power == 0:
            value = float(special.zeta(s, start))
            low = high = value
        else:
            ks = np.arange(start, start + EXPLICIT_TAIL_TERMS, dtype=float)
            explicit = math.fsum((ks ** -s * np.log(ks + 1.0) ** -r).tolist())
            edge = start + EXPLICIT_TAIL_TERMS
            low = explicit + _log_tail_integral(s, r, edge)
            high = explicit + _log_tail_integral(s, r, edge - 1)

        return zero_term + self.k_sides * low, zero_term + self.k_sides * high

    def n_factor(self, sigma: float, exponent: float) -> float:
        if self.n_sides == 0:
            return 1.0
        if sigma <= 0:
            return math.inf
        x = 2.0 ** (-exponent * sigma)
        return self.n_sides * x / (1.0 - x)

    def tail_sum(self, sigma: float, bound: str = "upper") -> float:
        """Envelope sum of ||phi'||^sigma over all tail branches"""
        low, high = self.k_sum(sigma)
        if bound == "upper":
            n_part = self.n_factor(sigma, self.upper_exponent)
            total = self.upper_constant ** sigma * n_part * high
        elif bound == "lower":
            n_part = self.n_factor(sigma, self.lower_exponent)
            total = self.lower_constant ** sigma * n_part * low
        else:
            raise ValueError(f"bound must be 'upper' or 'lower', got {bound!r}")
        return total if math.isfinite(total) else math.inf


def _log_tail_integral(s: float, r: float, a: float) -> float:
    """integral over [a, inf) of x^(-s) log(x + 1)^(-r), in the variable u = log x"""
    def integrand(u):
        # log(e^u + 1) without forming e^u
        return math.exp((1.0 - s) * u) * (u + math.log1p(math.exp(-u))) ** -r

    try:
        value, _ = integrate.quad(integrand, math.log(a), math.inf, limit=200)
    except (OverflowError, ZeroDivisionError, FloatingPointError) as e:
        raise NumericalFailure(f"tail remainder integral failed (s={s}, r={r}): {e}") from e
    if not math.isfinite(value):
        raise NumericalFailure(f"tail remainder integral is not finite (s={s}, r={r})")
    return value


def _gauss_branch(k: int) -> MoebiusMap:
    return MoebiusMap(0, 1, 1, k)


@dataclass(frozen=True)
class IfsSystem:
    """
    Graph-directed conformal IFS on real base intervals.

    Construction validates the Markov property, poles and contraction;
    open-set-condition failures only warn.
    """
    intervals: Tuple[Interval, ...]
    letters: Tuple[Letter, ...]
    tail: Optional[TailLaw] = None
    tail_branch: Optional[Callable[[int], MoebiusMap]] = field(default=None, compare=False)
    chart: Optional[MoebiusMap] = None
    name: str = field(default="", compare=False)
    contraction: float = field(default=math.nan, init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        object.__setattr__(self, "letters", tuple(self.letters))
        self._validate()
        object.__setattr__(self, "contraction", self._contraction_bound())
        self._check_open_set_condition()

    @property
    def is_finite(self) -> bool:
        return self.tail is None

    @property
    def alphabet_size(self) -> int:
        """Head letters plus the tail pseudo-letter"""
        return len(self.letters) + (0 if self.tail is None else 1)

    def _validate(self) -> None:
        count = len(self.intervals)
        if count == 0:
            raise ValueError("system needs at least one base interval")
        if not self.letters and self.tail is None:
            raise ValueError("system needs at least one letter")

        for idx, letter in enumerate(self.letters):
            if not 0 <= letter.target < count or any(not 0 <= s < count for s in letter.sources):
                raise ValueError(f"letter {idx} refers to an unknown interval")
            target = self.intervals[letter.target]
            tol = MARKOV_TOL * max(1.0, target.length)
            for s in letter.sources:
                try:
                    derivative_bounds(letter.map, self.intervals[s])
                except PoleInDomain as e:
                    raise PoleInDomain(f"letter {idx}: {e}") from e
                image = image_interval(letter.map, self.intervals[s])
                if image.lo < target.lo - tol or image.hi > target.hi + tol:
                    raise SeparationViolated(
                        f"letter {idx} maps interval {s} outside its target interval {letter.target}"
                    )

        if self.tail is not None:
            tail = self.tail
            if not 0 <= tail.target < count or any(not 0 <= s < count for s in tail.sources):
                raise InvalidTailLaw("tail refers to an unknown interval")
            if not self.intervals[tail.target].contains(tail.anchor, MARKOV_TOL):
                raise InvalidTailLaw("tail anchor lies outside the tail target interval")

    def _contraction_bound(self) -> float:
        """
        s = min over n <= 4 of (max norm over length-n head words)^(1/n), and
        no smaller than the largest tail branch norm.
        """
        tail_norm = self.tail.max_norm() if self.tail is not None else 0.0
        best = math.inf
        if self.letters:
            table = WordNormTable(self, MAX_CONTRACTION_LEVEL, include_tail=False, lazy=True)
            for n in range(1, MAX_CONTRACTION_LEVEL + 1):
                level = table.level(n)
                worst = float(np.max(level.log_sup))
                best = min(best, math.exp(worst / n))
                if best < 1.0:
                    break
        bound = max(best if self.letters else 0.0, tail_norm)
        if not bound < 1.0:
            raise NotContracting(f"no iterate up to length {MAX_CONTRACTION_LEVEL} contracts (bound {bound:.6g})")
        logger.debug("contraction bound %.6g for %s", bound, self.name or "system")
        return bound

    def _check_open_set_condition(self) -> None:
        images = []
        for idx, letter in enumerate(self.letters):
            for s in letter.sources:
                images.append((idx, letter.target, image_interval(letter.map, self.intervals[s])))
        for i, (a_idx, a_target, a_img) in enumerate(images):
            for b_idx, b_target, b_img in images[i + 1:]:
                if a_idx == b_idx or a_target != b_target:
                    continue
                if a_img.overlap(b_img) > OSC_TOL:
                    warnings.warn(
                        f"images of letters {a_idx} and {b_idx} overlap",
                        OpenSetConditionWarning,
                        stacklevel=3,
                    )
                    return

    def admissibility(self) -> np.ndarray:
        """
        adm[l, m] is True when pseudo-letter m may follow l (target of m is a
        source of l). The tail pseudo-letter, if present, has the last index.
        """
        sources, targets = self._pseudo_letters()
        size = len(targets)
        adm = np.zeros((size, size), dtype=bool)
        for l in range(size):
            for m in range(size):
                adm[l, m] = targets[m] in sources[l]
        return adm

    def _pseudo_letters(self) -> Tuple[List[Tuple[int, ...]], List[int]]:
        sources = [letter.sources for letter in self.letters]
        targets = [letter.target for letter in self.letters]
        if self.tail is not None:
            sources.append(self.tail.sources)
            targets.append(self.tail.target)
        return sources, targets


# System constructors

def similarity_system(
    ratios: Sequence[float],
    offsets: Sequence[float],
    interval: Tuple[float, float] = (0.0, 1.0),
    name: str = "",
) -> IfsSystem:
    """Affine letters x -> r_i * x + o_i on one base interval"""
    if len(ratios) != len(offsets):
        raise ValueError("ratios and offsets must have equal length")
    letters = tuple(
        Letter(MoebiusMap(r, o, 0, 1), (0,), 0, label=f"{r:g}x+{o:g}") for r, o in zip(ratios, offsets)
    )
    return IfsSystem((Interval(*interval),), letters, name=name)


def moebius_system(
    maps: Sequence[MoebiusMap],
    interval: Tuple[float, float] = (0.0, 1.0),
    name: str = "",
) -> IfsSystem:
    letters = tuple(Letter(m, (0,), 0, label=f"branch{i}") for i, m in enumerate(maps))
    return IfsSystem((Interval(*interval),), letters, name=name)


def continued_fraction_system(digits: Sequence[int], name: str = "") -> IfsSystem:
    """Inverse Gauss branches x -> 1/(k + x), k in digits, on [0, 1]"""
    letters = tuple(Letter(_gauss_branch(k), (0,), 0, label=f"1/({k}+x)") for k in digits)
    return IfsSystem((Interval(0.0, 1.0),), letters, name=name or "continued-fraction")


def gauss_parabolic_model(head: int = DEFAULT_HEAD) -> IfsSystem:
    """
    All Gauss branches: 1/(k + x) explicit for k <= head, the rest as a tail
    with 1/(k+1)^2 <= ||phi'_k|| <= 1/k^2. The limit set is [0, 1] minus the
    rationals, so the dimension is 1; theta = 1/2 and the system is regular.
    """
    if head < 1:
        raise ValueError("head must contain at least one branch")
    letters = tuple(Letter(_gauss_branch(k), (0,), 0, label=f"1/({k}+x)") for k in range(1, head + 1))
    tail = TailLaw(
        upper_constant=1.0,
        lower_constant=((head + 1.0) / (head + 2.0)) ** 2,
        k_power=2.0,
        head=head,
        sources=(0,),
        target=0,
        anchor=0.0,
    )
    return IfsSystem(
        (Interval(0.0, 1.0),), letters, tail=tail, tail_branch=_gauss_branch, name=f"gauss-tail-h{head}"
    )


def section5_tail_model(
    upper_constant: float = 0.05,
    upper_exponent: float = 1.0,
    lower_constant: float = 0.05,
    lower_exponent: float = 1.0,
    k_power: float = 2.0,
    log_power: float = 0.0,
) -> IfsSystem:
    """
    Envelope-only model of the double-index tail: branches (n, k) with
    n != 0, k in Z and norms comparable to 2^(-|n| exponent) / max(1, |k|)^2.
    """
    tail = TailLaw(
        upper_constant=upper_constant,
        upper_exponent=upper_exponent,
        lower_constant=lower_constant,
        lower_exponent=lower_exponent,
        k_power=k_power,
        log_power=log_power,
        n_sides=2,
        k_sides=2,
        head=0,
        sources=(0,),
        target=0,
        anchor=0.5,
    )
    return IfsSystem((Interval(0.0, 1.0),), (), tail=tail, name="section5-tail")


def _gap_point(arcs: Sequence[Tuple[float, float]]) -> complex:
    """Midpoint of the largest gap between arcs on the unit circle"""
    two_pi = 2.0 * math.pi
    normalized = sorted(((a % two_pi), (a % two_pi) + (b - a)) for a, b in arcs)
    best_width, best_mid = -math.inf, 0.0
    for i, (_, end) in enumerate(normalized):
        next_start = normalized[(i + 1) % len(normalized)][0]
        if i + 1 == len(normalized):
            next_start += two_pi
        width = next_start - end
        if width > best_width:
            best_width, best_mid = width, 0.5 * (end + next_start)
    if best_width <= 0:
        raise SeparationViolated("arcs cover the whole circle")
    return complex(math.cos(best_mid), math.sin(best_mid))


def ifs_from_schottky(group: GroupPresentation) -> IfsSystem:
    """
    Finite IFS of the inverse branches of the ping-pong expansion.

    Letter i acts on the arcs of every circle except its source circle and
    lands in the arc of its target circle. Arcs are carried to the real line by
    a Cayley-type chart that sends a gap point of the circle to infinity.
    """
    group.check_separation()
    if not group.circles:
        raise SeparationViolated("group has no ping-pong circles")
    arcs = [c.unit_circle_arc() for c in group.circles]
    gap = _gap_point(arcs)

    to_disk = compose(MoebiusMap(gap / 1j, 0, 0, 1), cayley_to_disk())
    to_chart = to_disk.inverse()

    intervals = []
    for start, end in arcs:
        ends = [apply(to_chart, complex(math.cos(a), math.sin(a))).real for a in (start, end)]
        intervals.append(Interval(min(ends), max(ends)))

    letters = []
    for idx, (source, target) in enumerate(group.pairing):
        branch = conjugate(group.generators[idx], to_chart)
        domain = tuple(j for j in range(len(group.circles)) if j != source)
        letters.append(Letter(branch, domain, target, label=f"g{idx}"))

    return IfsSystem(tuple(intervals), tuple(letters), chart=to_disk, name=group.name)


# Words

@dataclass(frozen=True, eq=False)
class WordLevel:
    """
    Norm data for all admissible words of one length.

    log_sup[w, j] / log_inf[w, j] are log sup / inf of |phi_w'| over base
    interval j (-inf where j is not a source of the last letter); words
    through the tail pseudo-letter also pick up tail_count envelope factors.
    """
    words: np.ndarray
    first_target: np.ndarray
    tail_count: np.ndarray
    log_sup: np.ndarray
    log_inf: np.ndarray


class WordNormTable:
    """
    Admissible words up to n_max, enumerated breadth first.

    Word maps compose on the right (phi_w = phi_w1 ∘ ... ∘ phi_wn). A tail
    pseudo-letter closes the current segment: the segment's norm is bounded on
    the tail target interval and multiplied by the tail envelope sum.
    """

    def __init__(self, system: IfsSystem, n_max: int, include_tail: bool = True, lazy: bool = False):
        if n_max < 1:
            raise DepthOutOfRange(f"word length must be at least 1, got {n_max}")
        self.system = system
        self.n_max = n_max
        self.include_tail = include_tail and system.tail is not None
        self._levels: List[WordLevel] = []
        self._iterator = self._generate()
        if not lazy:
            for n in range(1, n_max + 1):
                self.level(n)

    def level(self, n: int) -> WordLevel:
        if not 1 <= n <= self.n_max:
            raise DepthOutOfRange(f"level {n} outside 1..{self.n_max}")
        while len(self._levels) < n:
            self._levels.append(next(self._iterator))
        return self._levels[n - 1]

    def _generate(self) -> Iterator[WordLevel]:
        system = self.system
        head = len(system.letters)
        sources, targets = system._pseudo_letters()
        if not self.include_tail and system.tail is not None:
            sources, targets = sources[:head], targets[:head]
        size = len(targets)
        adm = system.admissibility()[:size, :size]

        gen = np.array([l.map.matrix for l in system.letters], dtype=complex).reshape(-1, 2, 2)
        gen_anti = np.array([l.map.anticonformal for l in system.letters], dtype=bool)
        tail_idx = head if self.include_tail else -1

        # state of the open (rightmost) segment
        words = np.zeros((1, 0), dtype=np.int64)
        mats = np.eye(2, dtype=complex)[None, :, :]
        anti = np.zeros(1, dtype=bool)
        closed_sup = np.zeros(1)
        closed_inf = np.zeros(1)
        tails = np.zeros(1, dtype=np.int64)
        last = np.full(1, -1, dtype=np.int64)

        for n in range(1, self.n_max + 1):
            parts = []
            for m in range(size):
                allowed = np.ones(last.size, dtype=bool) if n == 1 else adm[last, m]
                if not allowed.any():
                    continue
                p_words = np.column_stack([words[allowed], np.full(int(allowed.sum()), m, dtype=np.int64)])
                p_mats = mats[allowed]
                p_anti = anti[allowed]
                p_sup = closed_sup[allowed].copy()
                p_inf = closed_inf[allowed].copy()
                p_tails = tails[allowed].copy()
                if m == tail_idx:
                    lo_d, hi_d = _segment_bounds(p_mats, system.intervals[targets[m]])
                    p_sup += np.log(hi_d)
                    p_inf += np.log(lo_d)
                    p_tails += 1
                    p_mats = np.broadcast_to(np.eye(2, dtype=complex), p_mats.shape).copy()
                    p_anti = np.zeros_like(p_anti)
                else:
                    rhs = np.where(p_anti[:, None, None], np.conj(gen[m]), gen[m])
                    p_mats = p_mats @ rhs
                    p_anti = p_anti ^ gen_anti[m]
                parts.append((p_words, p_mats, p_anti, p_sup, p_inf, p_tails, np.full(p_words.shape[0], m)))

            words = np.concatenate([p[0] for p in parts])
            if words.shape[0] > MAX_WORDS:
                raise DepthOutOfRange(f"{words.shape[0]} words at length {n} exceed the table limit")
            mats = np.concatenate([p[1] for p in parts])
            anti = np.concatenate([p[2] for p in parts])
            closed_sup = np.concatenate([p[3] for p in parts])
            closed_inf = np.concatenate([p[4] for p in parts])
            tails = np.concatenate([p[5] for p in parts])
            last = np.concatenate([p[6] for p in parts]).astype(np.int64)

            order = np.lexsort(words.T[::-1])
            words, mats, anti = words[order], mats[order], anti[order]
            closed_sup, closed_inf, tails, last = closed_sup[order], closed_inf[order], tails[order], last[order]

            log_sup = np.full((words.shape[0], len(system.intervals)), -np.inf)
            log_inf = np.full_like(log_sup, -np.inf)
            for m in range(size):
                rows = last == m
                if not rows.any():
                    continue
                for j in sources[m]:
                    lo_d, hi_d = _segment_bounds(mats[rows], system.intervals[j])
                    log_sup[rows, j] = closed_sup[rows] + np.log(hi_d)
                    log_inf[rows, j] = closed_inf[rows] + np.log(lo_d)

            first = np.asarray(targets, dtype=np.int64)[words[:, 0]]
            logger.debug("word level %d: %d words", n, words.shape[0])
            yield WordLevel(words, first, tails, log_sup, log_inf)

    def psi(self, sigma: float, n: int, bound: str = "upper") -> float:
        """sum over length-n words of ||phi_w'||^sigma (sup norm over the word's domain)"""
        level = self.level(n)
        logs = level.log_sup if bound == "upper" else level.log_inf
        tail_factor = self._tail_factor(sigma, bound, level)
        if tail_factor is None:
            return math.inf
        finite = np.isfinite(logs)
        scaled = np.where(finite, sigma * np.where(finite, logs, 0.0), -np.inf)
        exponents = scaled.max(axis=1)
        return math.fsum((np.exp(exponents) * tail_factor).tolist())

    def state_matrix(self, sigma: float, n: int, bound: str = "upper") -> Optional[np.ndarray]:
        """
        Psi[i, j]: sum of sup (or inf) norms^sigma over words from base
        interval j into base interval i. None when a tail sum diverges.
        """
        level = self.level(n)
        logs = level.log_sup if bound == "upper" else level.log_inf
        tail_factor = self._tail_factor(sigma, bound, level)
        if tail_factor is None:
            return None
        count = len(self.system.intervals)
        weights = np.where(np.isfinite(logs), np.exp(sigma * np.where(np.isfinite(logs), logs, 0.0)), 0.0)
        weights = weights * tail_factor[:, None]
        matrix = np.zeros((count, count))
        np.add.at(matrix, level.first_target, weights)
        return matrix

    def distortion(self, n: int) -> float:
        """max over words and domains of sup/inf of |phi_w'|"""
        level = self.level(n)
        mask = np.isfinite(level.log_sup)
        return float(np.exp(np.max(level.log_sup[mask] - level.log_inf[mask])))

    def _tail_factor(self, sigma: float, bound: str, level: WordLevel) -> Optional[np.ndarray]:
        if not level.tail_count.any():
            return np.ones(level.tail_count.size)
        total = self.system.tail.tail_sum(sigma, bound)
        if not math.isfinite(total):
            return None
        return total ** level.tail_count.astype(float)


def _segment_bounds(mats: np.ndarray, interval: Interval) -> Tuple[np.ndarray, np.ndarray]:
    return _derivative_bounds_array(mats[:, 1, 0], mats[:, 1, 1], interval.lo, interval.hi)


def check_word(system: IfsSystem, word: Sequence[int]) -> Word:
    """Validate letters and the Markov rule; returns the word as a tuple"""
    word = tuple(int(x) for x in word)
    if not word:
        raise InadmissibleWord("empty word")
    for pos, x in enumerate(word):
        if not 0 <= x < len(system.letters):
            raise InadmissibleWord(f"unknown letter {x} at position {pos}")
    for pos in range(len(word) - 1):
        outer, inner = system.letters[word[pos]], system.letters[word[pos + 1]]
        if inner.target not in outer.sources:
            raise InadmissibleWord(f"letter {word[pos + 1]} cannot follow letter {word[pos]}")
    return word


def shift(word: Sequence[int]) -> Word:
    """Left shift: drop the first letter"""
    return tuple(word[1:])


def cylinder_map(system: IfsSystem, word: Sequence[int]) -> MoebiusMap:
    """phi_w1 ∘ phi_w2 ∘ ... ∘ phi_wn"""
    word = check_word(system, word)
    return compose_all(system.letters[x].map for x in word)


def cylinder_domain(system: IfsSystem, word: Sequence[int]) -> Tuple[Tuple[int, ...], int]:
    """(source intervals, target interval) of a cylinder map"""
    word = check_word(system, word)
    return system.letters[word[-1]].sources, system.letters[word[0]].target


def derivative_norm(system: IfsSystem, word: Sequence[int]) -> float:
    """sup of |phi_w'| over the domain of the word (exact endpoint/vertex evaluation)"""
    f = cylinder_map(system, word)
    sources, _ = cylinder_domain(system, word)
    return max(derivative_bounds(f, system.intervals[j])[1] for j in sources)


def theta_number(system: IfsSystem) -> float:
    """inf of sigma with psi(sigma) finite (-inf for finite alphabets)"""
    if system.tail is None:
        return -math.inf
    return system.tail.theta


def psi_n(system: IfsSystem, sigma: float, n: int, bound: str = "upper") -> float:
    """
    Partition sum over length-n words; +inf when the tail diverges.

    For countable alphabets the tail contributes its envelope sum; 'upper'
    uses sup norms with the upper envelope, 'lower' inf norms with the lower.
    """
    return WordNormTable(system, n, lazy=True).psi(sigma, n, bound)


def _extended_letters(system: IfsSystem, tail_cut: Optional[int]) -> List[Letter]:
    letters = list(system.letters)
    if system.tail is not None and tail_cut is not None and system.tail_branch is not None:
        for k in range(system.tail.first_k, tail_cut + 1):
            letters.append(Letter(system.tail_branch(k), system.tail.sources, system.tail.target, label=f"tail{k}"))
    return letters


@dataclass(frozen=True, eq=False)
class CylinderSample:
    """
    Depth-n cylinders phi_w(X): centers and diameter bounds, one per word.

    X is the first source interval of the word's last letter. Diameters are
    sup |phi_w'| times the length of X (times the chart stretch on the circle).
    """
    centers: np.ndarray
    diameters: np.ndarray
    depth: int

    def __len__(self) -> int:
        return self.centers.size


def limit_set_cylinders(
    system: IfsSystem,
    depth: int,
    tail_cut: Optional[int] = None,
    on_circle: bool = False,
) -> CylinderSample:
    """
    All admissible words of length depth as cylinder images.

    Tail branches k = head+1..tail_cut join the alphabet when the system has a
    branch factory. on_circle maps chart points back to the plane.

    Raises:
        DepthOutOfRange: depth < 1 or too many words
        InsufficientData: no concrete branches to compose
    """
    if depth < 1:
        raise DepthOutOfRange(f"depth must be at least 1, got {depth}")
    letters = _extended_letters(system, tail_cut)
    if not letters:
        raise InsufficientData("system has no concrete branches to sample")

    gen = np.array([l.map.matrix for l in letters], dtype=complex)
    gen_anti = np.array([l.map.anticonformal for l in letters], dtype=bool)
    count = len(letters)
    adm = np.array([[letters[m].target in letters[l].sources for m in range(count)] for l in range(count)])

    # letter matrices have determinant 1, so the products do as well
    mats = gen.copy()
    anti = gen_anti.copy()
    last = np.arange(count)
    for _ in range(depth - 1):
        rows, cols = np.nonzero(adm[last])
        if rows.size > MAX_WORDS:
            raise DepthOutOfRange(f"{rows.size} words exceed the sample limit")
        rhs = np.where(anti[rows][:, None, None], np.conj(gen[cols]), gen[cols])
        mats = mats[rows] @ rhs
        anti = anti[rows] ^ gen_anti[cols]
        last = cols

    first_source = np.array([letters[m].sources[0] for m in range(count)])[last]
    lo = np.array([iv.lo for iv in system.intervals])[first_source]
    hi = np.array([iv.hi for iv in system.intervals])[first_source]

    def image(x):
        return ((mats[:, 0, 0] * x + mats[:, 0, 1]) / (mats[:, 1, 0] * x + mats[:, 1, 1])).real

    centers = 0.5 * (image(lo) + image(hi))
    sup = np.empty(centers.size)
    for j in np.unique(first_source):
        rows = first_source == j
        _, sup[rows] = _segment_bounds(mats[rows], system.intervals[j])
    diameters = sup * (hi - lo)

    if on_circle:
        if system.chart is None:
            return CylinderSample(centers.astype(complex), diameters, depth)
        c = system.chart
        stretch = 1.0 / np.abs(c.c * centers + c.d) ** 2
        return CylinderSample((c.a * centers + c.b) / (c.c * centers + c.d), diameters * stretch, depth)
    return CylinderSample(centers, diameters, depth)


def limit_set_sample(
    system: IfsSystem,
    depth: int,
    tail_cut: Optional[int] = None,
    on_circle: bool = False,
) -> np.ndarray:
    """One point per admissible word of length depth: the center of phi_w(X)"""
    return limit_set_cylinders(system, depth, tail_cut, on_circle).centers


def _count_boxes(pts: np.ndarray, eps: float) -> int:
    if np.iscomplexobj(pts):
        cells = np.column_stack([np.floor(pts.real / eps), np.floor(pts.imag / eps)])
        return int(np.unique(cells, axis=0).shape[0])
    return int(np.unique(np.floor(pts / eps)).size)


def box_dimension_estimate(
    points,
    scales: Optional[Sequence[float]] = None,
    finest: Optional[float] = None,
) -> DimensionResult:
    """
    Slope of log N(eps) against log(1/eps), N the number of occupied boxes.

    Complex points are boxed on a square grid. Without explicit scales the
    dyadic grid starts at a quarter of the largest power of two not above the
    spread and halves down to finest (for a cylinder sample: its largest
    diameter), stopping early once the boxes outnumber 1/16 of the points.

    Raises:
        InsufficientData: fewer than 100 points or 4 scales
    """
    if isinstance(points, CylinderSample):
        if finest is None:
            finest = float(points.diameters.max())
        points = points.centers
    pts = np.asarray(points)
    if pts.size < 100:
        raise InsufficientData(f"need at least 100 points, got {pts.size}")

    if scales is None:
        spread = float(np.ptp(pts.real) + (np.ptp(pts.imag) if np.iscomplexobj(pts) else 0.0))
        spread = spread if spread > 0 else 1.0
        floor = max(finest or 0.0, spread * 2.0 ** -MAX_BOX_LEVEL)
        chosen, counts = [], []
        eps = 2.0 ** math.floor(math.log2(spread)) / 4.0
        while eps >= floor:
            n_boxes = _count_boxes(pts, eps)
            if n_boxes > pts.size / 16 and len(chosen) >= 4:
                break
            chosen.append(eps)
            counts.append(n_boxes)
            eps /= 2.0
        scales = np.asarray(chosen, dtype=float)
    else:
        scales = np.asarray(sorted(scales, reverse=True), dtype=float)
        counts = [_count_boxes(pts, eps) for eps in scales]
    if scales.size < 4:
        raise InsufficientData(f"need at least 4 scales, got {scales.size}")

    fit = stats.linregress(np.log(1.0 / scales), np.log(np.asarray(counts, dtype=float)))
    slope = float(fit.slope)
    stderr = float(fit.stderr) if math.isfinite(fit.stderr) else 0.0
    return DimensionResult(
        value=slope,
        lower=slope - stderr,
        upper=slope + stderr,
        method="box-counting",
        error=stderr,
        details={"scales": scales.tolist(), "counts": [int(c) for c in counts]},
    )
