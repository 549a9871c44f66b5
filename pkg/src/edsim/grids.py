"""Configuration-space grids, lattice fields, and discrete calculus.

The grid is a uniform rectangular lattice in configuration space (up to three
axes, so one particle in 1D/2D/3D or up to three particles on a line).  Axis
conventions:

* periodic axis: nodes at ``origin + k*h`` for ``k = 0..N-1`` with
  ``h = extent/N`` (the node at ``origin + extent`` is identified with the
  first one);
* non-periodic axis: nodes at ``origin + (k+1)*h`` with ``h = extent/(N+1)``,
  i.e. the N nodes are interior points of a box whose walls sit at ``origin``
  and ``origin + extent``.  Wave evolution treats the walls as hard
  (homogeneous Dirichlet), which makes the discrete sine modes exact
  eigenvectors of the second-difference Laplacian.

Field values are stored C-contiguous (row-major in axis order) and are frozen
after construction; every operation returns a new field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_AXES = 3
MAX_POINTS_PER_AXIS = 512


def _as_tuple(x, n: int, kind=float) -> tuple:
    if np.isscalar(x):
        return tuple(kind(x) for _ in range(n))
    t = tuple(kind(v) for v in x)
    if len(t) != n:
        raise ValueError(f"expected {n} per-axis entries, got {len(t)}")
    return t


@dataclass(frozen=True)
class ConfigGrid:
    """Uniform rectangular lattice over configuration space."""

    points: tuple[int, ...]
    extents: tuple[float, ...]
    periodic: tuple[bool, ...]
    origin: tuple[float, ...] = ()

    def __post_init__(self):
        points = tuple(int(p) for p in self.points)
        dim = len(points)
        if not 1 <= dim <= MAX_AXES:
            raise ValueError(f"grid must have 1..{MAX_AXES} axes, got {dim}")
        extents = _as_tuple(self.extents, dim)
        periodic = _as_tuple(self.periodic, dim, bool)
        origin = _as_tuple(self.origin, dim) if self.origin else (0.0,) * dim
        for n in points:
            if not 2 <= n <= MAX_POINTS_PER_AXIS:
                raise ValueError(
                    f"points per axis must be in [2, {MAX_POINTS_PER_AXIS}], got {n}")
        for L in extents:
            if L <= 0:
                raise ValueError(f"extent must be positive, got {L}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "periodic", periodic)
        object.__setattr__(self, "origin", origin)

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            L / n if per else L / (n + 1)
            for n, L, per in zip(self.points, self.extents, self.periodic))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axis_coords(self, axis: int) -> np.ndarray:
        """Node coordinates along one axis."""
        n = self.points[axis]
        h = self.spacing[axis]
        if self.periodic[axis]:
            return self.origin[axis] + h * np.arange(n)
        return self.origin[axis] + h * (1.0 + np.arange(n))

    def coordinate_array(self, axis: int) -> np.ndarray:
        """Coordinate of every node along `axis`, broadcast to grid shape."""
        c = self.axis_coords(axis)
        shape = [1] * self.dim
        shape[axis] = self.points[axis]
        return np.broadcast_to(c.reshape(shape), self.shape).copy()

    def meshgrid(self) -> list[np.ndarray]:
        return [self.coordinate_array(a) for a in range(self.dim)]

    def wrap(self, x: np.ndarray) -> np.ndarray:
        """Map positions back into the domain on periodic axes."""
        x = np.array(x, dtype=float, copy=True)
        for a in range(self.dim):
            if self.periodic[a]:
                lo = self.origin[a]
                x[..., a] = lo + np.mod(x[..., a] - lo, self.extents[a])
        return x

    def describe(self) -> dict:
        return {
            "points": list(self.points),
            "extents": list(self.extents),
            "periodic": list(self.periodic),
            "origin": list(self.origin),
        }


def _check_values(values: np.ndarray, grid: ConfigGrid, expect_shape) -> np.ndarray:
    values = np.ascontiguousarray(values)
    if values.shape != expect_shape:
        raise ValueError(f"field shape {values.shape} != expected {expect_shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("field contains non-finite entries")
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class ScalarField:
    grid: ConfigGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", _check_values(v, self.grid, self.grid.shape))


@dataclass(frozen=True)
class ComplexField:
    grid: ConfigGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        object.__setattr__(self, "values", _check_values(v, self.grid, self.grid.shape))


@dataclass(frozen=True)
class VectorField:
    """Per-axis component fields.  ``on_bonds=True`` means component ``a`` at
    index ``i`` lives on the link from node ``i`` to node ``i + e_a`` (the
    natural home of an exact lattice gradient)."""

    grid: ConfigGrid
    values: np.ndarray
    on_bonds: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        expect = (self.grid.dim,) + self.grid.shape
        object.__setattr__(self, "values", _check_values(v, self.grid, expect))

    def component(self, axis: int) -> np.ndarray:
        return self.values[axis]


def scalar_field(grid: ConfigGrid, values) -> ScalarField:
    return ScalarField(grid, values)


def _shift(values: np.ndarray, axis: int, offset: int, periodic: bool) -> np.ndarray:
    """values evaluated at index + offset; zero fill outside a hard wall."""
    if periodic:
        return np.roll(values, -offset, axis=axis)
    out = np.zeros_like(values)
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if offset > 0:
        src[axis] = slice(offset, None)
        dst[axis] = slice(None, -offset)
    elif offset < 0:
        src[axis] = slice(None, offset)
        dst[axis] = slice(-offset, None)
    out[tuple(dst)] = values[tuple(src)]
    return out


def gradient(f: ScalarField | ComplexField, axis: int):
    """Second-order central difference along one axis.

    Periodic axes wrap.  On non-periodic axes the interior is central and the
    two boundary slabs fall back to one-sided differences; the returned field
    carries ``meta['boundary_one_sided'] = True`` in that case.
    """
    grid = f.grid
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} out of range for {grid.dim}-d grid")
    h = grid.spacing[axis]
    v = f.values
    if grid.periodic[axis]:
        out = (np.roll(v, -1, axis=axis) - np.roll(v, 1, axis=axis)) / (2 * h)
        meta = {"boundary_one_sided": False}
    else:
        out = np.empty_like(v)
        sl = [slice(None)] * v.ndim

        def ax(s):
            t = list(sl)
            t[axis] = s
            return tuple(t)

        out[ax(slice(1, -1))] = (v[ax(slice(2, None))] - v[ax(slice(None, -2))]) / (2 * h)
        out[ax(slice(0, 1))] = (v[ax(slice(1, 2))] - v[ax(slice(0, 1))]) / h
        out[ax(slice(-1, None))] = (v[ax(slice(-1, None))] - v[ax(slice(-2, -1))]) / h
        meta = {"boundary_one_sided": True}
    cls = type(f)
    return cls(grid, out, meta=meta)


def full_gradient(f: ScalarField) -> VectorField:
    comps = [gradient(f, a).values for a in range(f.grid.dim)]
    flags = any(not f.grid.periodic[a] for a in range(f.grid.dim))
    return VectorField(f.grid, np.stack(comps), meta={"boundary_one_sided": flags})


def bond_gradient(f: ScalarField | ComplexField) -> VectorField:
    """Exact lattice gradient on links: ``(f[i+e_a] - f[i]) / h_a``.

    Loop integrals of this field around closed lattice loops telescope to
    zero at machine precision (on non-periodic axes the trailing link, which
    has no far node, is set to zero and must not be crossed by loops).
    """
    grid = f.grid
    comps = []
    for a in range(grid.dim):
        h = grid.spacing[a]
        d = (_shift(f.values, a, +1, grid.periodic[a]) - f.values) / h
        if not grid.periodic[a]:
            sl = [slice(None)] * grid.dim
            sl[a] = slice(-1, None)
            d[tuple(sl)] = 0.0
        comps.append(d)
    out = np.stack(comps)
    if np.iscomplexobj(out):
        raise ValueError("bond_gradient expects a real field")
    return VectorField(grid, out, on_bonds=True)


def laplacian(f: ScalarField | ComplexField) -> ScalarField | ComplexField:
    """Second-difference Laplacian; hard walls (ghost zeros) off non-periodic
    axes, matching the kinetic stencil used for wave evolution."""
    grid = f.grid
    out = np.zeros_like(np.asarray(f.values, dtype=f.values.dtype))
    for a in range(grid.dim):
        h = grid.spacing[a]
        per = grid.periodic[a]
        out += (_shift(f.values, a, +1, per) - 2 * f.values
                + _shift(f.values, a, -1, per)) / h**2
    return type(f)(grid, out)


def integrate(f: ScalarField | ComplexField) -> float | complex:
    """Riemann sum: sum of node values times the cell volume."""
    total = f.values.sum() * f.grid.cell_volume
    if np.iscomplexobj(f.values):
        return complex(total)
    return float(total)


def inner_product(f: ComplexField, g: ComplexField) -> complex:
    if f.grid is not g.grid and f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return complex(np.vdot(f.values, g.values) * f.grid.cell_volume)


def _loop_steps(grid: ConfigGrid, loop: Sequence[tuple]) -> list[tuple[tuple, int, int]]:
    """Validate a lattice loop; yield (node, axis, direction) per segment."""
    nodes = [tuple(int(i) for i in p) for p in loop]
    if len(nodes) < 2:
        raise ValueError("loop needs at least two nodes")
    if nodes[0] != nodes[-1]:
        raise ValueError("loop is not closed (first node != last node)")
    steps = []
    for p, q in zip(nodes[:-1], nodes[1:]):
        diffs = []
        for a in range(grid.dim):
            d = q[a] - p[a]
            if grid.periodic[a]:
                n = grid.points[a]
                d = (d + n // 2) % n - n // 2
            if d != 0:
                diffs.append((a, d))
        if len(diffs) != 1 or abs(diffs[0][1]) != 1:
            raise ValueError(f"loop segment {p} -> {q} is not a single lattice step")
        steps.append((p, diffs[0][0], diffs[0][1]))
    return steps


def loop_integral(v: VectorField, loop: Sequence[tuple]) -> float:
    """Line integral of a vector field along a closed lattice loop.

    Node-based fields use the trapezoid value (mean of the two endpoint
    components) per link; bond-based fields use the link value directly.
    """
    grid = v.grid
    total = 0.0
    for node, axis, sense in _loop_steps(grid, loop):
        h = grid.spacing[axis]
        n = grid.points[axis]
        nxt = list(node)
        nxt[axis] = (node[axis] + sense) % n if grid.periodic[axis] else node[axis] + sense
        if not grid.periodic[axis] and not 0 <= nxt[axis] < n:
            raise ValueError(f"loop leaves the grid at {node} along axis {axis}")
        nxt = tuple(nxt)
        comp = v.values[axis]
        if v.on_bonds:
            bond = node if sense > 0 else nxt
            val = comp[tuple(bond)]
        else:
            val = 0.5 * (comp[node] + comp[nxt])
        total += sense * h * val
    return float(total)


def ring_loop(grid: ConfigGrid, axis: int = 0, fixed: dict | None = None) -> list[tuple]:
    """Closed loop winding once around a periodic axis."""
    if not grid.periodic[axis]:
        raise ValueError(f"axis {axis} is not periodic")
    fixed = fixed or {}
    base = [fixed.get(a, 0) for a in range(grid.dim)]
    loop = []
    for k in range(grid.points[axis]):
        p = list(base)
        p[axis] = k
        loop.append(tuple(p))
    loop.append(tuple(base))
    return loop


def rectangle_loop(lo: tuple[int, int], hi: tuple[int, int],
                   axes: tuple[int, int] = (0, 1), dim: int = 2,
                   fixed: dict | None = None) -> list[tuple]:
    """Axis-aligned rectangular loop (counter-clockwise) in an index plane."""
    a, b = axes
    i0, j0 = lo
    i1, j1 = hi
    if i1 <= i0 or j1 <= j0:
        raise ValueError("rectangle must have positive index extent")
    fixed = fixed or {}
    base = [fixed.get(k, 0) for k in range(dim)]

    def mk(i, j):
        p = list(base)
        p[a] = i
        p[b] = j
        return tuple(p)

    loop = []
    loop += [mk(i, j0) for i in range(i0, i1)]
    loop += [mk(i1, j) for j in range(j0, j1)]
    loop += [mk(i, j1) for i in range(i1, i0, -1)]
    loop += [mk(i0, j) for j in range(j1, j0 - 1, -1)]
    return loop


@dataclass(frozen=True)
class ParticleSystem:
    """Particle content and the constants of the transition law.

    ``axis_map[A] = (n, a)`` sends grid axis ``A`` to spatial direction ``a``
    of particle ``n``; masses and coupling constants per grid axis follow it.
    ``beta = q / (hbar * c)`` per particle.  ``eta`` and ``gamma_exponent``
    set the per-step fluctuation scale ``eta * dt**gamma / m``.
    """

    masses: tuple[float, ...]
    charges: tuple[float, ...]
    axis_map: tuple[tuple[int, int], ...]
    hbar: float = 1.0
    light_speed: float = 1.0
    eta: float = 1.0
    gamma_exponent: float = 3.0

    def __post_init__(self):
        masses = tuple(float(m) for m in self.masses)
        charges = tuple(float(q) for q in self.charges)
        if len(charges) != len(masses):
            raise ValueError("masses and charges must have equal length")
        if any(m <= 0 for m in masses):
            raise ValueError("masses must be positive")
        if self.hbar <= 0 or self.light_speed <= 0:
            raise ValueError("hbar and light_speed must be positive")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.gamma_exponent <= 0:
            raise ValueError("gamma_exponent must be positive")
        amap = tuple((int(n), int(a)) for n, a in self.axis_map)
        for n, a in amap:
            if not 0 <= n < len(masses):
                raise ValueError(f"axis_map particle index {n} out of range")
            if not 0 <= a < 3:
                raise ValueError(f"axis_map direction index {a} out of range")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "charges", charges)
        object.__setattr__(self, "axis_map", amap)

    @property
    def n_particles(self) -> int:
        return len(self.masses)

    @property
    def beta(self) -> tuple[float, ...]:
        return tuple(q / (self.hbar * self.light_speed) for q in self.charges)

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses))

    @property
    def mass_per_axis(self) -> np.ndarray:
        return np.array([self.masses[n] for n, _ in self.axis_map])

    @property
    def beta_per_axis(self) -> np.ndarray:
        b = self.beta
        return np.array([b[n] for n, _ in self.axis_map])

    @property
    def process_label(self) -> str:
        g = self.gamma_exponent
        if g == 1.0:
            return "ES"
        if g == 3.0:
            return "OU"
        return "fractional"

    def describe(self) -> dict:
        return {
            "masses": list(self.masses),
            "charges": list(self.charges),
            "axis_map": [list(x) for x in self.axis_map],
            "hbar": self.hbar,
            "light_speed": self.light_speed,
            "eta": self.eta,
            "gamma_exponent": self.gamma_exponent,
        }


def single_particle(dim: int = 1, mass: float = 1.0, charge: float = 0.0,
                    **kw) -> ParticleSystem:
    axis_map = tuple((0, a) for a in range(dim))
    return ParticleSystem((mass,), (charge,), axis_map, **kw)


def particles_on_line(masses: Iterable[float], charges: Iterable[float] | None = None,
                      **kw) -> ParticleSystem:
    masses = tuple(masses)
    if charges is None:
        charges = (0.0,) * len(masses)
    axis_map = tuple((n, 0) for n in range(len(masses)))
    return ParticleSystem(masses, tuple(charges), axis_map, **kw)
