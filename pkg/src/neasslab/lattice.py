"""Finite lattice boxes with open or periodic boundary metrics.

Centered boxes {-k,...,+k}^d are the primary geometry.  A one-dimensional
``chain`` constructor with arbitrary length is provided for small test
fixtures (dimerized / SSH-type chains with an even number of sites).
All site orderings are lexicographic; every other module derives its
fermionic mode indexing from this single canonical order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

from .errors import DimensionTooLarge, SiteOutOfRange

#: Hard cap on the number of fermionic modes 2^m handled by dense ED.
DEFAULT_MODE_CAP = 14


class Boundary(Enum):
    OPEN = "open"
    TORUS = "torus"


Site = tuple[int, ...]


@dataclass(frozen=True)
class Lattice:
    """Finite set of integer sites with a metric.

    ``sites`` are lexicographically ordered and duplicate-free.  For boxes,
    ``radius`` is the half-width k and the torus metric wraps each
    coordinate with period 2k+1.
    """

    dimension: int
    sites: tuple[Site, ...]
    boundary: Boundary
    radius: int | None = None
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._index.update({s: i for i, s in enumerate(self.sites)})

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def site_index(self, x: Site) -> int:
        try:
            return self._index[tuple(x)]
        except KeyError:
            raise SiteOutOfRange(f"site {x} not in lattice") from None

    def contains(self, x: Site) -> bool:
        return tuple(x) in self._index

    def metric(self, x: Site, y: Site) -> int:
        """Distance between two lattice sites (wrapped on the torus)."""
        x, y = tuple(x), tuple(y)
        if x not in self._index:
            raise SiteOutOfRange(f"site {x} not in lattice")
        if y not in self._index:
            raise SiteOutOfRange(f"site {y} not in lattice")
        if self.boundary is Boundary.TORUS:
            period = 2 * self.radius + 1
            return sum(min(abs(a - b), period - abs(a - b)) for a, b in zip(x, y))
        return sum(abs(a - b) for a, b in zip(x, y))

    def l1(self, x: Site, y: Site) -> int:
        """Plain l1 distance, independent of the boundary condition."""
        return sum(abs(a - b) for a, b in zip(x, y))

    def displacement(self, x: Site, y: Site) -> Site:
        """x - y, wrapped to the minimal representative on the torus."""
        d = [a - b for a, b in zip(x, y)]
        if self.boundary is Boundary.TORUS:
            period = 2 * self.radius + 1
            d = [((c + self.radius) % period) - self.radius for c in d]
        return tuple(d)

    def diameter(self, X, use_l1: bool = False) -> int:
        """Max pairwise distance within a site set; 0 for singletons."""
        X = list(X)
        dist = self.l1 if use_l1 else self.metric
        return max((dist(a, b) for a, b in itertools.combinations(X, 2)), default=0)

    def sub_box(self, l: int) -> tuple[Site, ...]:
        """Sites of the centered sub-box of radius ``l`` (1-d chains: the
        ``2l+1`` central sites)."""
        if self.radius is not None:
            return tuple(s for s in self.sites if max(abs(c) for c in s) <= l)
        # centered window on a chain fixture
        coords = sorted(s[0] for s in self.sites)
        mid = (coords[0] + coords[-1]) / 2
        return tuple(s for s in self.sites if abs(s[0] - mid) <= l + 0.5)


def build_lattice(d: int, k: int, boundary: Boundary | str,
                  r: int = 1, mode_cap: int = DEFAULT_MODE_CAP) -> Lattice:
    """Construct the centered box {-k,...,+k}^d.

    Raises DimensionTooLarge when r*(2k+1)^d modes would exceed the dense
    exact-diagonalization cap.
    """
    if d not in (1, 2):
        raise ValueError(f"only d in {{1, 2}} supported, got {d}")
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(boundary, str):
        boundary = Boundary(boundary.lower())
    n = (2 * k + 1) ** d
    if r * n > mode_cap:
        raise DimensionTooLarge(
            f"{r}*(2k+1)^{d} = {r * n} modes exceeds cap {mode_cap}")
    sites = tuple(itertools.product(range(-k, k + 1), repeat=d))
    return Lattice(dimension=d, sites=sites, boundary=boundary, radius=k)


def build_chain(n_sites: int, boundary: Boundary | str = Boundary.OPEN,
                r: int = 1, mode_cap: int = DEFAULT_MODE_CAP) -> Lattice:
    """One-dimensional chain of arbitrary length (test-fixture geometry).

    Sites are 0..n-1.  Periodic chains require an odd length so the wrap
    metric stays compatible with the box convention; open chains may have
    any length.
    """
    if isinstance(boundary, str):
        boundary = Boundary(boundary.lower())
    if n_sites < 1:
        raise ValueError("need at least one site")
    if r * n_sites > mode_cap:
        raise DimensionTooLarge(f"{r * n_sites} modes exceeds cap {mode_cap}")
    if boundary is Boundary.TORUS:
        if n_sites % 2 == 0:
            raise ValueError("periodic chains must have odd length")
        k = (n_sites - 1) // 2
        sites = tuple((x,) for x in range(-k, k + 1))
        return Lattice(dimension=1, sites=sites, boundary=boundary, radius=k)
    sites = tuple((x,) for x in range(n_sites))
    return Lattice(dimension=1, sites=sites, boundary=boundary, radius=None)


def check_bulk_compatibility(lat: Lattice, metric=None) -> tuple[bool, list]:
    """Verify d(x,y) <= l1(x,y) with equality whenever l1(x,y) <= k.

    An alternative ``metric(x, y)`` callable may be supplied to audit a
    corrupted table.  Returns (ok, violating_pairs).
    """
    dist = metric if metric is not None else lat.metric
    k = lat.radius if lat.radius is not None else lat.n_sites
    bad = []
    for x, y in itertools.combinations_with_replacement(lat.sites, 2):
        m, l1 = dist(x, y), lat.l1(x, y)
        if m > l1 or (l1 <= k and m != l1):
            bad.append((x, y))
    return (not bad, bad)
