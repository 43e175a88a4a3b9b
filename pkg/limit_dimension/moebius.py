"""
Möbius and anti-Möbius maps of the extended plane.

Maps are stored as normalized 2x2 complex matrices (determinant 1) with an
orientation flag. An anticonformal map acts by z -> (a*conj(z) + b) / (c*conj(z) + d),
so products of reflections stay inside the same type and normalize automatically.
"""
import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import DegenerateMap, InvalidCircle, NotAnIsometry, PoleHit

logger = logging.getLogger(__name__)

POINT_AT_INFINITY = complex(math.inf, 0.0)

# Below this modulus the denominator counts as a pole
POLE_EPS = 1e-300
# Above this modulus the map is evaluated in the chart u = 1/z
CHART_SWAP_THRESHOLD = 1e12
CLASSIFY_TOL = 1e-9


def is_infinite(z: complex) -> bool:
    """True for the point-at-infinity sentinel (or any non-finite value)"""
    return cmath.isinf(z)


class Orientation(str, Enum):
    CONFORMAL = "conformal"
    ANTICONFORMAL = "anticonformal"


class MoebiusKind(str, Enum):
    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class MoebiusMap:
    """
    Fractional-linear map with orientation flag.

    Coefficients are renormalized on construction so that ad - bc = 1.
    Products and inverses of normalized maps keep determinant 1 and are not
    renormalized.
    """
    a: complex
    b: complex
    c: complex
    d: complex
    orientation: Orientation = Orientation.CONFORMAL

    def __post_init__(self):
        a, b, c, d = (complex(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if not cmath.isfinite(det) or abs(det) < POLE_EPS:
            raise DegenerateMap(f"degenerate coefficients (det={det})")
        root = cmath.sqrt(det)
        object.__setattr__(self, "a", a / root)
        object.__setattr__(self, "b", b / root)
        object.__setattr__(self, "c", c / root)
        object.__setattr__(self, "d", d / root)
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    @classmethod
    def from_matrix(cls, matrix, anticonformal: bool = False) -> "MoebiusMap":
        m = np.asarray(matrix, dtype=complex)
        orientation = Orientation.ANTICONFORMAL if anticonformal else Orientation.CONFORMAL
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1], orientation)

    @classmethod
    def from_unimodular(cls, matrix, anticonformal: bool = False) -> "MoebiusMap":
        """Wrap a matrix whose determinant is already 1"""
        m = np.asarray(matrix, dtype=complex)
        if not np.isfinite(m).all():
            raise DegenerateMap("non-finite coefficients in a product of maps")
        f = object.__new__(cls)
        for name, value in zip("abcd", (m[0, 0], m[0, 1], m[1, 0], m[1, 1])):
            object.__setattr__(f, name, complex(value))
        orientation = Orientation.ANTICONFORMAL if anticonformal else Orientation.CONFORMAL
        object.__setattr__(f, "orientation", orientation)
        return f

    @property
    def anticonformal(self) -> bool:
        return self.orientation is Orientation.ANTICONFORMAL

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def determinant(self) -> complex:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> complex:
        return self.a + self.d

    @property
    def pole(self) -> complex:
        """Preimage of infinity (the sentinel when c == 0)"""
        if abs(self.c) < POLE_EPS:
            return POINT_AT_INFINITY
        p = -self.d / self.c
        return p.conjugate() if self.anticonformal else p

    def inverse(self) -> "MoebiusMap":
        inv = np.array([[self.d, -self.b], [-self.c, self.a]], dtype=complex)
        if self.anticonformal:
            inv = np.conj(inv)
        return MoebiusMap.from_unimodular(inv, self.anticonformal)

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """self ∘ other"""
        return compose(self, other)

    def isclose(self, other: "MoebiusMap", tol: float = 1e-12) -> bool:
        """Same map up to the sign ambiguity of the normalization"""
        if self.orientation is not other.orientation:
            return False
        diff = np.abs(self.matrix - other.matrix).max()
        flip = np.abs(self.matrix + other.matrix).max()
        return min(diff, flip) <= tol

    def __call__(self, z: complex) -> complex:
        return apply(self, z)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return compose(self, other)


def identity() -> MoebiusMap:
    return MoebiusMap(1, 0, 0, 1)


def translation(b: complex) -> MoebiusMap:
    return MoebiusMap(1, b, 0, 1)


def scaling(k: complex) -> MoebiusMap:
    return MoebiusMap(k, 0, 0, 1)


def affine(ratio: float, offset: float) -> MoebiusMap:
    """x -> ratio * x + offset"""
    return MoebiusMap(ratio, offset, 0, 1)


def rotation(theta: float) -> MoebiusMap:
    return MoebiusMap(cmath.exp(1j * theta), 0, 0, 1)


def compose(f: MoebiusMap, g: MoebiusMap) -> MoebiusMap:
    """
    Composition f ∘ g.

    An anticonformal outer map sees the conjugated inner matrix; the
    orientation of the product is the parity sum of the factors.
    """
    inner = np.conj(g.matrix) if f.anticonformal else g.matrix
    product = f.matrix @ inner
    return MoebiusMap.from_unimodular(product, f.anticonformal != g.anticonformal)


def compose_all(maps: Iterable[MoebiusMap]) -> MoebiusMap:
    """m1 ∘ m2 ∘ ... ∘ mk (identity for an empty sequence)"""
    result = identity()
    for m in maps:
        result = compose(result, m)
    return result


def conjugate(f: MoebiusMap, h: MoebiusMap) -> MoebiusMap:
    """h ∘ f ∘ h^-1"""
    return compose(compose(h, f), h.inverse())


def apply(f: MoebiusMap, z: complex, extended: bool = True) -> complex:
    """
    Image of z under f.

    Args:
        f: Map to apply
        z: Point (POINT_AT_INFINITY allowed)
        extended: Return POINT_AT_INFINITY at the pole instead of raising PoleHit

    Returns:
        The image point.
    """
    if is_infinite(z):
        if abs(f.c) < POLE_EPS:
            return POINT_AT_INFINITY
        return f.a / f.c

    w = complex(z).conjugate() if f.anticonformal else complex(z)
    if abs(w) > CHART_SWAP_THRESHOLD:
        u = 1.0 / w
        num = f.a + f.b * u
        den = f.c + f.d * u
    else:
        num = f.a * w + f.b
        den = f.c * w + f.d

    if abs(den) < POLE_EPS:
        if extended:
            return POINT_AT_INFINITY
        raise PoleHit(f"{z} is the pole of the map")
    return num / den


def apply_array(f: MoebiusMap, z) -> np.ndarray:
    """Vectorized apply for finite points away from the pole"""
    w = np.asarray(z, dtype=complex)
    if f.anticonformal:
        w = np.conj(w)
    return (f.a * w + f.b) / (f.c * w + f.d)


def derivative_modulus(f: MoebiusMap, z: complex) -> float:
    """|f'(z)| = 1/|cz + d|^2 (with conj(z) for anticonformal maps)"""
    if is_infinite(z):
        raise PoleHit("derivative modulus is not defined at infinity")
    w = complex(z).conjugate() if f.anticonformal else complex(z)
    if abs(w) > CHART_SWAP_THRESHOLD:
        u = 1.0 / w
        den = f.c + f.d * u
        if abs(den) < POLE_EPS:
            raise PoleHit(f"{z} is the pole of the map")
        return abs(u) ** 2 / abs(den) ** 2
    den = f.c * w + f.d
    if abs(den) < POLE_EPS:
        raise PoleHit(f"{z} is the pole of the map")
    return 1.0 / abs(den) ** 2


def classify(f: MoebiusMap) -> MoebiusKind:
    """Elliptic / parabolic / hyperbolic by |trace| against 2"""
    if f.anticonformal:
        raise NotAnIsometry("only orientation-preserving maps can be classified")
    tr = f.trace
    if abs(tr.imag) > CLASSIFY_TOL:
        raise NotAnIsometry(f"trace {tr} is not real")

    if abs(f.b) < CLASSIFY_TOL and abs(f.c) < CLASSIFY_TOL and abs(f.a - f.d) < CLASSIFY_TOL:
        return MoebiusKind.IDENTITY

    gap = abs(tr.real) - 2.0
    if gap < -CLASSIFY_TOL:
        return MoebiusKind.ELLIPTIC
    if gap > CLASSIFY_TOL:
        return MoebiusKind.HYPERBOLIC
    return MoebiusKind.PARABOLIC


def hyperbolic_distance(z: complex, w: complex) -> float:
    """Distance in the Poincaré disk (curvature -1)"""
    q = abs((z - w) / (1 - w.conjugate() * z))
    if q >= 1.0:
        return math.inf
    return 2.0 * math.atanh(q)


@dataclass(frozen=True)
class Circle:
    """Euclidean circle; the disk it bounds is the closed interior"""
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0 or not math.isfinite(self.radius):
            raise InvalidCircle(f"radius must be positive, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def point_at(self, angle: float) -> complex:
        return self.center + self.radius * cmath.exp(1j * angle)

    def boundary_points(self, count: int = 16) -> List[complex]:
        return [self.point_at(2.0 * math.pi * k / count) for k in range(count)]

    def contains(self, z: complex, tol: float = 0.0) -> bool:
        if is_infinite(z):
            return False
        return abs(z - self.center) <= self.radius + tol

    def interiors_disjoint(self, other: "Circle", tol: float = 1e-9) -> bool:
        """Closed disks meet at most in a tangency point"""
        return abs(self.center - other.center) >= self.radius + other.radius - tol

    def is_orthogonal_to_unit_circle(self, tol: float = 1e-9) -> bool:
        return abs(abs(self.center) ** 2 - 1.0 - self.radius ** 2) <= tol

    def unit_circle_arc(self) -> Tuple[float, float]:
        """
        Angles (start, end), counterclockwise, of the arc of the unit circle
        inside this disk.
        """
        r0 = abs(self.center)
        if r0 == 0.0:
            raise InvalidCircle("concentric circle has no arc on the unit circle")
        cos_half = (1.0 + r0 ** 2 - self.radius ** 2) / (2.0 * r0)
        if not -1.0 < cos_half < 1.0:
            raise InvalidCircle(f"{self} does not cross the unit circle")
        half = math.acos(cos_half)
        mid = cmath.phase(self.center)
        return mid - half, mid + half

    def image(self, f: MoebiusMap) -> "Circle":
        """Image circle under f (raises InvalidCircle if it becomes a line)"""
        pts = [apply(f, p) for p in self.boundary_points(3)]
        if any(is_infinite(p) for p in pts):
            raise InvalidCircle("circle passes through the pole of the map")
        return circle_through(*pts)

    def reflection(self) -> MoebiusMap:
        return reflect(self)


def circle_through(z1: complex, z2: complex, z3: complex) -> Circle:
    """Circumcircle of three points"""
    w = (z3 - z1) / (z2 - z1)
    if abs(w.imag) < 1e-15 * max(1.0, abs(w)):
        raise InvalidCircle("points are collinear")
    center = (z2 - z1) * (w - abs(w) ** 2) / (2j * w.imag) + z1
    return Circle(center, abs(z1 - center))


UNIT_CIRCLE = Circle(0.0, 1.0)


def reflect(circle: Circle) -> MoebiusMap:
    """Inversion z -> c + r^2 / (conj(z) - conj(c))"""
    c0 = circle.center
    r2 = circle.radius ** 2
    return MoebiusMap(c0, r2 - abs(c0) ** 2, 1, -c0.conjugate(), Orientation.ANTICONFORMAL)


def reflect_line(angle: float) -> MoebiusMap:
    """Reflection in the line through 0 at the given angle"""
    return MoebiusMap(cmath.exp(2j * angle), 0, 0, 1, Orientation.ANTICONFORMAL)


def _to_zero_one_infinity(z1: complex, z2: complex, z3: complex) -> MoebiusMap:
    """Map sending z1 -> 0, z2 -> 1, z3 -> infinity"""
    if is_infinite(z1):
        return MoebiusMap(0, z3 - z2, -1, z3)
    if is_infinite(z2):
        return MoebiusMap(1, -z1, 1, -z3)
    if is_infinite(z3):
        return MoebiusMap(-1, z1, 0, z1 - z2)
    return MoebiusMap(z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1))


def three_point_map(source: Sequence[complex], target: Sequence[complex]) -> MoebiusMap:
    """Unique Möbius map with source[i] -> target[i], i = 0, 1, 2"""
    to_std = _to_zero_one_infinity(*source)
    from_std = _to_zero_one_infinity(*target).inverse()
    return compose(from_std, to_std)


def cayley_to_disk() -> MoebiusMap:
    """Upper half-plane to unit disk with ∞ -> i, 1 -> 1, 0 -> -i"""
    return three_point_map((POINT_AT_INFINITY, 1.0, 0.0), (1j, 1.0, -1j))


def cayley_to_disk_at(boundary_point: complex) -> MoebiusMap:
    """Half-plane to disk sending ∞ to the given point of the unit circle"""
    p = boundary_point / abs(boundary_point)
    return compose(MoebiusMap(p / 1j, 0, 0, 1), cayley_to_disk())
