"""
Schottky and reflection groups acting on the unit disk.

Presentations carry their ping-pong circles, so reduced words are canonical
and orbit balls can be enumerated level by level without deduplication.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DepthOutOfRange, InsufficientData, NotAnIsometry, SeparationViolated
from .moebius import (
    Circle,
    MoebiusKind,
    MoebiusMap,
    apply,
    cayley_to_disk,
    classify,
    compose,
    conjugate,
    hyperbolic_distance,
    is_infinite,
    reflect,
    reflect_line,
    scaling,
)
from .results import DimensionResult

logger = logging.getLogger(__name__)

SEPARATION_TOL = 1e-9
SEPARATION_SAMPLES = 32
MAX_SECTION5_DEPTH = 30

# Shell ratio thresholds for the convergence-type heuristic
DIVERGENT_RATIO = 0.9
CONVERGENT_RATIO = 0.6
PROBE_WINDOW = 5


class GroupKind(str, Enum):
    SCHOTTKY = "schottky-free"
    REFLECTION = "reflection"


class ConvergenceVerdict(str, Enum):
    CONVERGENT = "appears-convergent"
    DIVERGENT = "appears-divergent"
    INCONCLUSIVE = "inconclusive"


class Section5Convention(str, Enum):
    # first disk has diameter [0, 2]; tau∘sigma_1 is parabolic
    TANGENT = "tangent"
    # first disk has diameter [1, 2]; every generator hyperbolic
    DYADIC = "dyadic"


@dataclass(frozen=True)
class GroupPresentation:
    """
    Generators (letters) of a Schottky or reflection group with ping-pong data.

    Letter i maps the exterior of circles[pairing[i][0]] into the interior of
    circles[pairing[i][1]]. inverse_table[i] is the letter of the inverse
    generator (i itself for reflections).
    """
    generators: Tuple[MoebiusMap, ...]
    inverse_table: Tuple[int, ...]
    kind: GroupKind
    circles: Tuple[Circle, ...] = ()
    pairing: Tuple[Tuple[int, int], ...] = ()
    basepoint: complex = 0j
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "inverse_table", tuple(int(i) for i in self.inverse_table))
        object.__setattr__(self, "circles", tuple(self.circles))
        object.__setattr__(self, "pairing", tuple(tuple(p) for p in self.pairing))
        object.__setattr__(self, "kind", GroupKind(self.kind))

        count = len(self.generators)
        if len(self.inverse_table) != count:
            raise ValueError("inverse table must list one entry per generator")
        for i, j in enumerate(self.inverse_table):
            if not 0 <= j < count or self.inverse_table[j] != i:
                raise ValueError(f"inverse table is not an involution at letter {i}")
            if self.kind is GroupKind.REFLECTION and i != j:
                raise ValueError("reflection generators must be their own inverses")
        if self.pairing and len(self.pairing) != count:
            raise ValueError("pairing must list one (source, target) pair per generator")
        for source, target in self.pairing:
            if not (0 <= source < len(self.circles) and 0 <= target < len(self.circles)):
                raise ValueError("pairing refers to an unknown circle")
        for g in self.generators:
            _check_disk_automorphism(g)

    @property
    def letter_count(self) -> int:
        return len(self.generators)

    def check_separation(self, samples: int = SEPARATION_SAMPLES, tol: float = SEPARATION_TOL) -> None:
        """
        Ping-pong check: disjoint circle interiors, each letter sends its source
        circle onto its target circle and the source interior outside the target.
        """
        for i, c1 in enumerate(self.circles):
            for j in range(i + 1, len(self.circles)):
                if not c1.interiors_disjoint(self.circles[j], tol):
                    raise SeparationViolated(f"circles {i} and {j} overlap")

        for letter, (source_idx, target_idx) in enumerate(self.pairing):
            g = self.generators[letter]
            source = self.circles[source_idx]
            target = self.circles[target_idx]
            for p in source.boundary_points(samples):
                image = apply(g, p)
                if is_infinite(image) or abs(abs(image - target.center) - target.radius) > tol * max(1.0, target.radius):
                    raise SeparationViolated(
                        f"letter {letter} does not map circle {source_idx} onto circle {target_idx}"
                    )
            inner = apply(g, source.center)
            if target.contains(inner, -tol * max(1.0, target.radius)):
                raise SeparationViolated(
                    f"letter {letter} sends the inside of circle {source_idx} into circle {target_idx}"
                )

    def classify_generators(self) -> List[Optional[MoebiusKind]]:
        """Kind of each conformal generator (None for reflections)"""
        return [None if g.anticonformal else classify(g) for g in self.generators]


def _check_disk_automorphism(g: MoebiusMap, tol: float = 1e-8) -> None:
    for p in (1.0, 1j, -1.0, -1j):
        image = apply(g, p)
        if is_infinite(image) or abs(abs(image) - 1.0) > tol:
            raise NotAnIsometry("generator does not preserve the unit circle")
    if abs(apply(g, 0.0)) >= 1.0:
        raise NotAnIsometry("generator swaps the disk with its exterior")


def _orthogonal_circle(angle: float, radius: float) -> Circle:
    """Circle orthogonal to the unit circle, centred on the ray at angle"""
    return Circle(math.sqrt(1.0 + radius ** 2) * complex(math.cos(angle), math.sin(angle)), radius)


def schottky_group(
    generators: Sequence[MoebiusMap],
    circles: Sequence[Circle],
    pairing: Sequence[Tuple[int, int]],
    name: str = "",
) -> GroupPresentation:
    """
    Free Schottky group from generators g_1..g_r; inverses are appended as
    letters r..2r-1 with the swapped circle pairs.
    """
    rank = len(generators)
    letters = list(generators) + [g.inverse() for g in generators]
    full_pairing = list(pairing) + [(t, s) for s, t in pairing]
    inverse_table = [i + rank for i in range(rank)] + list(range(rank))
    group = GroupPresentation(
        tuple(letters), tuple(inverse_table), GroupKind.SCHOTTKY, tuple(circles), tuple(full_pairing), name=name
    )
    group.check_separation()
    return group


def symmetric_schottky(rank: int, radius: float) -> GroupPresentation:
    """
    2*rank circles orthogonal to the unit circle at angles j*pi/rank; the
    generator g_j swaps circle j with circle j+rank through the reflection in
    the perpendicular diameter followed by the reflection in circle j+rank.
    """
    if rank < 1:
        raise ValueError("rank must be at least 1")
    circles = [_orthogonal_circle(j * math.pi / rank, radius) for j in range(2 * rank)]
    generators = []
    for j in range(rank):
        mirror = reflect_line(j * math.pi / rank + math.pi / 2)
        generators.append(compose(reflect(circles[j + rank]), mirror))
    pairing = [(j, j + rank) for j in range(rank)]
    return schottky_group(generators, circles, pairing, name=f"schottky-rank{rank}-r{radius:g}")


def two_circle_schottky(radius: float) -> GroupPresentation:
    """Circles of the given radius orthogonal to the unit circle at ±1"""
    return symmetric_schottky(1, radius)


def cyclic_hyperbolic(multiplier: float) -> GroupPresentation:
    """<z -> multiplier*z> on the half-plane, conjugated to the disk"""
    if multiplier <= 1.0:
        raise ValueError("multiplier must exceed 1")
    eta = cayley_to_disk()
    g = conjugate(scaling(multiplier), eta)
    inner = Circle(0.0, multiplier ** -0.5).image(eta)
    outer = Circle(0.0, multiplier ** 0.5).image(eta)
    return schottky_group([g], [inner, outer], [(0, 1)], name=f"cyclic-{multiplier:g}")


def reflection_group(circles: Sequence[Circle], name: str = "") -> GroupPresentation:
    """Group generated by reflections in disjoint circles orthogonal to the unit circle"""
    for idx, c in enumerate(circles):
        if not c.is_orthogonal_to_unit_circle(1e-8):
            raise SeparationViolated(f"circle {idx} is not orthogonal to the unit circle")
    generators = [reflect(c) for c in circles]
    count = len(circles)
    group = GroupPresentation(
        tuple(generators),
        tuple(range(count)),
        GroupKind.REFLECTION,
        tuple(circles),
        tuple((i, i) for i in range(count)),
        name=name,
    )
    group.check_separation()
    return group


def symmetric_reflection_group(count: int, radius: float) -> GroupPresentation:
    circles = [_orthogonal_circle(2.0 * math.pi * j / count, radius) for j in range(count)]
    return reflection_group(circles, name=f"reflection-{count}-r{radius:g}")


def section5_half_plane_disks(
    depth: int,
    convention: Section5Convention = Section5Convention.TANGENT,
    shrink: float = 0.0,
) -> List[Circle]:
    """Disks D*_n with diameter [2^(n-1), 2^n] on the real axis (n = 1..depth)"""
    convention = Section5Convention(convention)
    if not 0.0 <= shrink < 1.0:
        raise ValueError("shrink must lie in [0, 1)")
    disks = []
    for n in range(1, depth + 1):
        left, right = 2.0 ** (n - 1), 2.0 ** n
        if n == 1 and convention is Section5Convention.TANGENT:
            left = 0.0
        disks.append(Circle(0.5 * (left + right), 0.5 * (right - left) * (1.0 - shrink)))
    return disks


def build_section5_group(
    depth: int,
    convention: Section5Convention = Section5Convention.TANGENT,
    shrink: float = 0.0,
) -> GroupPresentation:
    """
    Generators tau∘sigma_n, n = 1..depth, conjugated to the disk by the Cayley map.

    sigma_n is the reflection in D*_n and tau(z) = -conj(z). The image circles
    accumulate at i. shrink > 0 scales every radius by (1 - shrink), which
    separates the tangent disks.
    """
    if not 1 <= depth <= MAX_SECTION5_DEPTH:
        raise DepthOutOfRange(f"depth must lie in 1..{MAX_SECTION5_DEPTH}, got {depth}")
    convention = Section5Convention(convention)
    eta = cayley_to_disk()
    tau = reflect_line(math.pi / 2)

    disks = section5_half_plane_disks(depth, convention, shrink)
    mirrors = [Circle(-d.center.conjugate(), d.radius) for d in disks]
    circles = [d.image(eta) for d in disks] + [m.image(eta) for m in mirrors]

    generators = [conjugate(compose(tau, reflect(d)), eta) for d in disks]
    pairing = [(n, n + depth) for n in range(depth)]
    group = schottky_group(generators, circles, pairing, name=f"section5-{convention.value}-d{depth}")
    logger.debug("built section-5 group: depth=%d convention=%s", depth, convention.value)
    return group


@dataclass(frozen=True, eq=False)
class OrbitBall:
    """
    Group elements of word length <= max_len, level by level.

    Element 0 is the identity; every other element stores its parent (the word
    without its last letter) and last letter, so reduced words are unique.
    """
    matrices: np.ndarray
    anticonformal: np.ndarray
    parents: np.ndarray
    letters: np.ndarray
    lengths: np.ndarray
    points: np.ndarray
    distances: np.ndarray
    log_boundary_gap: np.ndarray
    max_len: int

    def __len__(self) -> int:
        return int(self.lengths.size)

    def word(self, index: int) -> Tuple[int, ...]:
        letters = []
        while index > 0:
            letters.append(int(self.letters[index]))
            index = int(self.parents[index])
        return tuple(reversed(letters))

    @property
    def words(self) -> List[Tuple[int, ...]]:
        return [self.word(i) for i in range(len(self))]

    def element(self, index: int) -> MoebiusMap:
        return MoebiusMap.from_unimodular(self.matrices[index], bool(self.anticonformal[index]))

    def elements(self) -> Iterator[Tuple[Tuple[int, ...], MoebiusMap]]:
        for i in range(len(self)):
            yield self.word(i), self.element(i)

    def truncate(self, max_len: int) -> "OrbitBall":
        """The ball of smaller radius (a prefix of the level ordering)"""
        count = int(np.searchsorted(self.lengths, max_len, side="right"))
        return OrbitBall(
            self.matrices[:count],
            self.anticonformal[:count],
            self.parents[:count],
            self.letters[:count],
            self.lengths[:count],
            self.points[:count],
            self.distances[:count],
            self.log_boundary_gap[:count],
            min(max_len, self.max_len),
        )


def enumerate_orbit(group: GroupPresentation, max_len: int, check: bool = True) -> OrbitBall:
    """
    All reduced words up to max_len with their maps, orbit points g(0) and
    hyperbolic distances from 0.

    Raises:
        DepthOutOfRange: max_len < 1
        SeparationViolated: ping-pong check failed
    """
    if max_len < 1:
        raise DepthOutOfRange(f"max_len must be at least 1, got {max_len}")
    if check:
        group.check_separation()

    gens = np.array([g.matrix for g in group.generators], dtype=complex).reshape(-1, 2, 2)
    gen_anti = np.array([g.anticonformal for g in group.generators], dtype=bool)
    inverse = np.array(group.inverse_table, dtype=np.int64)

    mats = [np.eye(2, dtype=complex)[None, :, :]]
    anti = [np.zeros(1, dtype=bool)]
    parents = [np.array([-1], dtype=np.int64)]
    letters = [np.array([-1], dtype=np.int64)]
    lengths = [np.array([0], dtype=np.int64)]

    front_idx = np.array([0], dtype=np.int64)
    front_mats, front_anti, front_letters = mats[0], anti[0], letters[0]
    total = 1

    for length in range(1, max_len + 1):
        if len(gens) == 0 or front_idx.size == 0:
            break
        new_parents, new_letters, new_mats, new_anti = [], [], [], []
        for j in range(len(gens)):
            allowed = front_letters != inverse[j]
            if not allowed.any():
                continue
            fa = front_anti[allowed]
            rhs = np.where(fa[:, None, None], np.conj(gens[j]), gens[j])
            new_mats.append(front_mats[allowed] @ rhs)
            new_anti.append(fa ^ gen_anti[j])
            new_parents.append(front_idx[allowed])
            new_letters.append(np.full(int(allowed.sum()), j, dtype=np.int64))
        if not new_parents:
            break

        level_parents = np.concatenate(new_parents)
        level_letters = np.concatenate(new_letters)
        order = np.lexsort((level_letters, level_parents))
        level_parents = level_parents[order]
        level_letters = level_letters[order]
        level_anti = np.concatenate(new_anti)[order]
        level_mats = np.concatenate(new_mats)[order]

        mats.append(level_mats)
        anti.append(level_anti)
        parents.append(level_parents)
        letters.append(level_letters)
        lengths.append(np.full(level_letters.size, length, dtype=np.int64))

        front_idx = np.arange(total, total + level_letters.size, dtype=np.int64)
        front_mats, front_anti, front_letters = level_mats, level_anti, level_letters
        total += level_letters.size
        logger.debug("orbit level %d: %d words", length, level_letters.size)

    matrices = np.concatenate(mats)
    b = matrices[:, 0, 1]
    d = matrices[:, 1, 1]

    if group.basepoint == 0:
        points = b / d
        modulus = np.abs(points)
        log_d = np.log(np.abs(d))
        distances = 2.0 * np.log1p(modulus) + 2.0 * log_d
        log_gap = -2.0 * log_d - np.log1p(modulus)
    else:
        base = complex(group.basepoint)
        points = np.array([
            apply(MoebiusMap.from_unimodular(m, a), base) for m, a in zip(matrices, np.concatenate(anti))
        ])
        modulus = np.abs(points)
        distances = np.array([hyperbolic_distance(base, p) for p in points])
        log_gap = np.log1p(-modulus)

    return OrbitBall(
        matrices=matrices,
        anticonformal=np.concatenate(anti),
        parents=np.concatenate(parents),
        letters=np.concatenate(letters),
        lengths=np.concatenate(lengths),
        points=points,
        distances=np.maximum(distances, 0.0),
        log_boundary_gap=log_gap,
        max_len=max_len,
    )


def _kernel_terms(orbit: OrbitBall, t: float, kernel: str) -> np.ndarray:
    if t < 0:
        raise ValueError(f"exponent must be nonnegative, got {t}")
    if kernel == "boundary":
        return np.exp(t * orbit.log_boundary_gap)
    if kernel == "exponential":
        return np.exp(-t * orbit.distances)
    raise ValueError(f"unknown kernel {kernel!r} (use 'boundary' or 'exponential')")


def poincare_partial_sum(orbit: OrbitBall, t: float, kernel: str = "boundary") -> float:
    """
    Sum over the ball of (1 - |g(0)|)^t, or of exp(-t*rho(0, g(0))) for
    kernel='exponential'.
    """
    return math.fsum(_kernel_terms(orbit, t, kernel).tolist())


def shell_sums(orbit: OrbitBall, t: float = 1.0, kernel: str = "boundary") -> np.ndarray:
    """Kernel sums per word length 0..max_len"""
    terms = _kernel_terms(orbit, t, kernel)
    return np.bincount(orbit.lengths, weights=terms, minlength=orbit.max_len + 1)


def counting_function(orbit: OrbitBall, radii) -> np.ndarray:
    """N(R): orbit points within hyperbolic distance R of the basepoint"""
    ordered = np.sort(orbit.distances)
    return np.searchsorted(ordered, np.asarray(radii, dtype=float) + 1e-9, side="right")


def critical_exponent_estimate(orbit: OrbitBall, max_points: int = 256) -> DimensionResult:
    """
    Growth rate of N(R).

    Fits the three-term model log N(R) = delta*R + gamma*log R + c by least
    squares over R between the first shell and the inner radius of the
    outermost shell (where the ball is complete). The returned value is the
    R coefficient delta alone; gamma goes to details["log_radius_coefficient"]
    and absorbs the polynomial growth of elementary groups, so a lattice-like
    N(R) ~ R^k reports delta near 0 rather than a spurious positive slope. The
    stderr is that of delta in the joint fit.

    Raises:
        InsufficientData: fewer than 4 distinct radii in the fitting window
    """
    top = int(orbit.lengths.max()) if len(orbit) else 0
    if top < 1:
        raise InsufficientData("orbit ball has no nontrivial elements")
    first = float(orbit.distances[orbit.lengths == 1].min())
    outer = float(orbit.distances[orbit.lengths == top].min())

    radii = np.unique(np.round(orbit.distances, 9))
    radii = radii[(radii >= first - 1e-9) & (radii <= outer + 1e-9) & (radii > 0)]
    if radii.size < 4:
        raise InsufficientData(f"only {radii.size} distinct shells in the fitting window")
    if radii.size > max_points:
        radii = radii[np.unique(np.linspace(0, radii.size - 1, max_points).round().astype(int))]

    counts = counting_function(orbit, radii).astype(float)
    design = np.column_stack([radii, np.log(radii), np.ones_like(radii)])
    target = np.log(counts)
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)

    dof = radii.size - design.shape[1]
    residual = target - design @ coef
    if dof > 0 and rank == design.shape[1]:
        scale = float(residual @ residual) / dof
        cov = scale * np.linalg.inv(design.T @ design)
        stderr = math.sqrt(max(cov[0, 0], 0.0))
    else:
        stderr = 0.0

    slope = float(coef[0])
    value = max(slope, 0.0)
    logger.debug("critical exponent fit: slope=%.6f stderr=%.2e points=%d", slope, stderr, radii.size)
    return DimensionResult(
        value=value,
        lower=max(0.0, slope - stderr),
        upper=max(value, slope + stderr),
        method="orbit-counting",
        error=stderr,
        details={"points": int(radii.size), "log_radius_coefficient": float(coef[1]), "max_len": orbit.max_len},
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Partial sums of the Poincaré series at exponent 1 by word length"""
    lengths: Tuple[int, ...]
    shell_sums: Tuple[float, ...]
    partial_sums: Tuple[float, ...]
    ratios: Tuple[float, ...]
    verdict: ConvergenceVerdict

    def rows(self) -> List[Tuple[int, float, float]]:
        return list(zip(self.lengths, self.shell_sums, self.partial_sums))


def convergence_type_probe(group: GroupPresentation, max_len: int) -> ConvergenceReport:
    """
    Ratio test on the shell sums of sum (1 - |g(0)|).

    The verdict is a heuristic on a finite ball and never a proof.
    """
    if max_len < 4:
        raise DepthOutOfRange(f"max_len must be at least 4, got {max_len}")
    orbit = enumerate_orbit(group, max_len)
    shells = shell_sums(orbit, 1.0)[1:]
    partial = np.cumsum(shells) + 1.0

    ratios = []
    for prev, cur in zip(shells[:-1], shells[1:]):
        ratios.append(float(cur / prev) if prev > 0 else math.nan)
    window = ratios[-PROBE_WINDOW:]

    if not window or any(not math.isfinite(r) for r in window):
        verdict = ConvergenceVerdict.INCONCLUSIVE
    elif all(r > DIVERGENT_RATIO for r in window):
        verdict = ConvergenceVerdict.DIVERGENT
    elif all(r < CONVERGENT_RATIO for r in window):
        verdict = ConvergenceVerdict.CONVERGENT
    else:
        verdict = ConvergenceVerdict.INCONCLUSIVE

    logger.info("convergence probe on %s: %s", group.name or "group", verdict.value)
    return ConvergenceReport(
        lengths=tuple(range(1, max_len + 1)),
        shell_sums=tuple(float(s) for s in shells),
        partial_sums=tuple(float(p) for p in partial),
        ratios=tuple(ratios),
        verdict=verdict,
    )
