"""Deterministic synthetic concrete-like surfaces with labelled damage.

A surface is a height field over ``[0, width] x [0, height]`` sampled on a
jittered grid. Intact areas are a flat base plane with small, smooth value
noise. Cracks (polyline grooves) and spalls (disk-shaped craters) are
depressed and carry strong short-wavelength roughness; points inside them are
labelled damaged. Lengths are in millimetres by convention.
"""

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from ._types import DAMAGED, UNDAMAGED

# Where default datasets sit: raw scans are not re-centred, so coordinates keep
# a scanner-frame offset. At this offset every coordinate prints as
# "-ddd.dddddd", i.e. 38 bytes per "x y z label" line at 6 decimals.
SCANNER_ORIGIN = (-600.0, -600.0, -600.0)


@dataclass
class CrackSpec:
    path: list
    width: float
    depth: float
    roughness: float


@dataclass
class SpallSpec:
    center: tuple
    radius: float
    depth: float
    roughness: float


@dataclass
class SurfaceSpec:
    """Parameters of one synthetic surface.

    ``roughness`` bounds the height deviation of intact points from the base
    plane. ``origin`` translates the finished cloud, e.g. to mimic scanner
    coordinates; it does not affect labels or geometry.
    """

    width: float = 314.16
    height: float = 200.0
    density: float = 7.5
    roughness: float = 0.03
    roughness_wavelength: float = 12.0
    damage_wavelength: float = 0.8
    cracks: list = field(default_factory=list)
    spalls: list = field(default_factory=list)
    seed: int = 0
    origin: tuple = (0.0, 0.0, 0.0)

    def validate(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError("surface extent must be positive")
        if not self.density > 0:
            raise ValueError("point density must be positive")
        if self.roughness < 0 or self.roughness_wavelength <= 0 or self.damage_wavelength <= 0:
            raise ValueError("roughness must be >= 0 and wavelengths > 0")
        for c in self.cracks:
            if c.width <= 0 or c.depth <= 0:
                raise ValueError("crack width and depth must be positive")
            if len(c.path) < 2:
                raise ValueError("crack path needs at least two vertices")
            for x, y in c.path:
                if not (0 <= x <= self.width and 0 <= y <= self.height):
                    raise ValueError("crack path leaves the surface extent")
        for s in self.spalls:
            if s.radius <= 0 or s.depth <= 0:
                raise ValueError("spall radius and depth must be positive")
            cx, cy = s.center
            if not (0 <= cx <= self.width and 0 <= cy <= self.height):
                raise ValueError("spall centre lies outside the surface extent")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["cracks"] = [CrackSpec(**c) for c in d.get("cracks", [])]
        d["spalls"] = [SpallSpec(**s) for s in d.get("spalls", [])]
        d["origin"] = tuple(d.get("origin", (0.0, 0.0, 0.0)))
        return cls(**d)


def value_noise(x, y, wavelength, rng, extent):
    """Smooth lattice noise in [-1, 1] (smoothstep-blended random lattice values)."""
    w, h = extent
    nx = int(math.ceil(w / wavelength)) + 2
    ny = int(math.ceil(h / wavelength)) + 2
    lattice = rng.uniform(-1.0, 1.0, size=(nx, ny))
    gx = x / wavelength
    gy = y / wavelength
    ix = np.clip(np.floor(gx).astype(np.int64), 0, nx - 2)
    iy = np.clip(np.floor(gy).astype(np.int64), 0, ny - 2)
    fx = gx - ix
    fy = gy - iy
    sx = fx * fx * (3.0 - 2.0 * fx)
    sy = fy * fy * (3.0 - 2.0 * fy)
    v00 = lattice[ix, iy]
    v10 = lattice[ix + 1, iy]
    v01 = lattice[ix, iy + 1]
    v11 = lattice[ix + 1, iy + 1]
    top = v00 + sx * (v10 - v00)
    bot = v01 + sx * (v11 - v01)
    return top + sy * (bot - top)


def distance_to_polyline(x, y, path):
    path = np.asarray(path, dtype=np.float64)
    best = np.full(x.shape, np.inf)
    for (ax, ay), (bx, by) in zip(path[:-1], path[1:]):
        dx, dy = bx - ax, by - ay
        seg2 = dx * dx + dy * dy
        if seg2 == 0.0:
            t = np.zeros_like(x)
        else:
            t = np.clip(((x - ax) * dx + (y - ay) * dy) / seg2, 0.0, 1.0)
        px = ax + t * dx - x
        py = ay + t * dy - y
        np.minimum(best, np.sqrt(px * px + py * py), out=best)
    return best


def jittered_grid(width, height, density, rng):
    step = 1.0 / math.sqrt(density)
    nx = max(1, int(round(width / step)))
    ny = max(1, int(round(height / step)))
    sx, sy = width / nx, height / ny
    gy, gx = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    jx, jy = rng.random((2, ny, nx))
    x = ((gx + jx) * sx).ravel()
    y = ((gy + jy) * sy).ravel()
    return x, y


def damage_mask(spec, x, y):
    mask = np.zeros(x.shape, dtype=bool)
    for c in spec.cracks:
        mask |= distance_to_polyline(x, y, c.path) <= 0.5 * c.width
    for s in spec.spalls:
        mask |= np.hypot(x - s.center[0], y - s.center[1]) <= s.radius
    return mask


def generate(spec):
    """Sample ``spec``; returns ``(points (N, 3), labels (N,))``. Deterministic per seed."""
    spec.validate()
    n_streams = 2 + len(spec.cracks) + len(spec.spalls)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(n_streams)]
    extent = (spec.width, spec.height)
    x, y = jittered_grid(spec.width, spec.height, spec.density, streams[0])
    z = spec.roughness * value_noise(x, y, spec.roughness_wavelength, streams[1], extent)

    damage = np.full(x.shape, np.inf)
    labels = np.full(x.shape, UNDAMAGED, dtype=np.int8)
    regions = [(c, "crack") for c in spec.cracks] + [(s, "spall") for s in spec.spalls]
    for (region, kind), rng in zip(regions, streams[2:]):
        if kind == "crack":
            d = distance_to_polyline(x, y, region.path)
            half = 0.5 * region.width
        else:
            d = np.hypot(x - region.center[0], y - region.center[1])
            half = region.radius
        inside = d <= half
        if not inside.any():
            continue
        u = d[inside] / half
        profile = -region.depth * (1.0 - u * u)
        rough = region.roughness * value_noise(x[inside], y[inside], spec.damage_wavelength, rng, extent)
        # rough floor never rises above the intact plane
        depth = np.minimum(profile + rough, 0.0) - 0.5 * region.roughness
        damage[inside] = np.minimum(damage[inside], depth)
        labels[inside] = DAMAGED
    hit = labels == DAMAGED
    z[hit] = z[hit] + damage[hit]

    pts = np.column_stack([x, y, z]) + np.asarray(spec.origin, dtype=np.float64)
    return pts, labels


def _random_walk(rng, width, height, length, step=4.0, turn=0.35):
    x = rng.uniform(0.1 * width, 0.9 * width)
    y = rng.uniform(0.1 * height, 0.9 * height)
    heading = rng.uniform(0.0, 2.0 * math.pi)
    path = [(x, y)]
    for _ in range(max(1, int(length / step))):
        heading += rng.normal(0.0, turn)
        nx_, ny_ = x + step * math.cos(heading), y + step * math.sin(heading)
        if not (0 <= nx_ <= width and 0 <= ny_ <= height):
            heading += math.pi
            continue
        x, y = nx_, ny_
        path.append((x, y))
    if len(path) < 2:
        path.append((min(width, x + 1.0), y))
    return path


def default_spec(seed=0, width=314.16, height=200.0, density=7.5, target_fraction=0.28, origin=SCANNER_ORIGIN):
    """A randomised crack-and-spall layout whose damaged area is close to ``target_fraction``.

    Defaults mirror an unfolded 100 x 200 mm cylinder side surface at the
    point density of a dense handheld scan, placed at :data:`SCANNER_ORIGIN`.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    spec = SurfaceSpec(width=width, height=height, density=density, seed=seed, origin=tuple(origin))
    gx, gy = np.meshgrid(np.linspace(0, width, 200), np.linspace(0, height, 140))
    gx, gy = gx.ravel(), gy.ravel()
    scale = math.sqrt(width * height / (314.16 * 200.0))
    covered = np.zeros(gx.shape, dtype=bool)
    for i in range(200):
        if i:
            last = SurfaceSpec(width=width, height=height, cracks=spec.cracks[-1:], spalls=spec.spalls[-1:])
            covered |= damage_mask(last, gx, gy)
        if covered.mean() >= target_fraction:
            break
        if i % 3 == 2:
            r = rng.uniform(8.0, 18.0) * max(scale, 0.5)
            cx = rng.uniform(r, width - r) if width > 2 * r else 0.5 * width
            cy = rng.uniform(r, height - r) if height > 2 * r else 0.5 * height
            spec.spalls.append(SpallSpec((cx, cy), r, depth=rng.uniform(2.0, 4.0), roughness=rng.uniform(1.2, 2.0)))
        else:
            length = rng.uniform(80.0, 160.0) * max(scale, 0.4)
            spec.cracks.append(
                CrackSpec(
                    _random_walk(rng, width, height, length),
                    width=rng.uniform(4.0, 8.0),
                    depth=rng.uniform(1.5, 3.0),
                    roughness=rng.uniform(1.0, 1.6),
                )
            )
    return spec
