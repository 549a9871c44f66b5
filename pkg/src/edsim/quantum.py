"""Wave-function flow: covariant Hamiltonian, Crank-Nicolson stepping, and
the density/phase (Madelung) view with its consistency diagnostics.

Gauge data lives on lattice links: the hopping term between nodes x and
x + e_A carries the phase exp(-i * theta_A(x)) with
theta_A = beta_n * (line integral of A along the bond).  Gauge
transformations update the link phases with exact endpoint differences of
chi, which is what makes the transform commute with evolution at machine
precision instead of O(h).

Phases are local values in (-pi*hbar, pi*hbar]; gradients and loop integrals
always difference neighbouring nodes and rewrap to the nearest branch, and
winding numbers come from loop sums only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grids import (ConfigGrid, ParticleSystem, ScalarField, VectorField,
                    _shift, gradient)

RHO_FLOOR_REL = 1e-12


# ---------------------------------------------------------------------------
# states and potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveState:
    grid: ConfigGrid
    psi: np.ndarray
    time: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        psi = np.ascontiguousarray(self.psi, dtype=complex)
        if psi.shape != self.grid.shape:
            raise ValueError(f"psi shape {psi.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(psi.view(float))):
            raise ValueError("psi contains non-finite entries")
        n = np.vdot(psi, psi).real * self.grid.cell_volume
        if n <= 0:
            raise ValueError("psi is identically zero")
        psi = psi / np.sqrt(n)
        psi.setflags(write=False)
        object.__setattr__(self, "psi", psi)

    @property
    def rho(self) -> np.ndarray:
        return (self.psi.real**2 + self.psi.imag**2)

    def norm(self) -> float:
        return float(np.vdot(self.psi, self.psi).real * self.grid.cell_volume)


def gaussian_packet(grid: ConfigGrid, center, sigma, momentum=0.0,
                    hbar: float = 1.0, time: float = 0.0) -> WaveState:
    """Gaussian wave packet; `sigma` is the density standard deviation."""
    dim = grid.dim
    center = np.broadcast_to(np.atleast_1d(np.asarray(center, float)), (dim,))
    sigma = np.broadcast_to(np.atleast_1d(np.asarray(sigma, float)), (dim,))
    momentum = np.broadcast_to(np.atleast_1d(np.asarray(momentum, float)), (dim,))
    log_env = np.zeros(grid.shape)
    phase = np.zeros(grid.shape)
    for a in range(dim):
        x = grid.coordinate_array(a)
        dev = x - center[a]
        if grid.periodic[a]:
            L = grid.extents[a]
            dev = (dev + L / 2) % L - L / 2
        log_env = log_env - dev**2 / (4 * sigma[a] ** 2)
        phase = phase + momentum[a] * x / hbar
    return WaveState(grid, np.exp(log_env + 1j * phase), time=time)


@dataclass(frozen=True)
class Potentials:
    """Scalar potential at nodes plus gauge data on links.

    `link_theta[a]` is the hopping phase angle on the bond from node i to
    i + e_a; `vector_a_nodes[a]` keeps plain node samples of A for drift and
    residual formulas.  Optional schedules multiply V and the gauge data as
    functions of time (None means static).
    """

    grid: ConfigGrid
    system: ParticleSystem
    scalar_v: np.ndarray | None = None
    link_theta: np.ndarray | None = None
    vector_a_nodes: np.ndarray | None = None
    v_schedule: Callable[[float], float] | None = None
    a_schedule: Callable[[float], float] | None = None

    def __post_init__(self):
        shape = self.grid.shape
        if self.scalar_v is not None:
            v = np.ascontiguousarray(self.scalar_v, dtype=float)
            if v.shape != shape:
                raise ValueError("scalar_v shape mismatch")
            v.setflags(write=False)
            object.__setattr__(self, "scalar_v", v)
        for name in ("link_theta", "vector_a_nodes"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.ascontiguousarray(arr, dtype=float)
                if arr.shape != (self.grid.dim,) + shape:
                    raise ValueError(f"{name} must have one component per axis")
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def time_dependent(self) -> bool:
        return self.v_schedule is not None or self.a_schedule is not None

    def v_factor(self, t: float | None) -> float:
        if self.v_schedule is None or t is None:
            return 1.0
        return float(self.v_schedule(t))

    def a_factor(self, t: float | None) -> float:
        if self.a_schedule is None or t is None:
            return 1.0
        return float(self.a_schedule(t))


def _eval_on_mesh(spec, grid: ConfigGrid, axis_shift: int | None = None):
    """Evaluate a scalar/array/callable spec on the node mesh, or on the bond
    midpoints of `axis_shift` when given."""
    mesh = grid.meshgrid()
    if axis_shift is not None:
        mesh = list(mesh)
        mesh[axis_shift] = mesh[axis_shift] + grid.spacing[axis_shift] / 2
    if callable(spec):
        return np.broadcast_to(np.asarray(spec(*mesh), dtype=float), grid.shape).copy()
    if np.isscalar(spec):
        return np.full(grid.shape, float(spec))
    arr = np.asarray(spec, dtype=float)
    if arr.shape != grid.shape:
        raise ValueError("potential sample array does not match the grid")
    if axis_shift is not None:
        per = grid.periodic[axis_shift]
        return 0.5 * (arr + _shift(arr, axis_shift, +1, per))
    return arr.copy()


def build_potentials(grid: ConfigGrid, system: ParticleSystem,
                     scalar_v=None, vector_a: Sequence | None = None,
                     v_schedule=None, a_schedule=None) -> Potentials:
    """Assemble Potentials from per-axis specs.

    `vector_a[a]` gives the vector-potential component along grid axis `a`
    as a scalar, a node-sample array, or a callable of the mesh coordinates;
    link phases use midpoint sampling of the bond.
    """
    v = None if scalar_v is None else _eval_on_mesh(scalar_v, grid)
    theta = None
    a_nodes = None
    if vector_a is not None:
        if len(vector_a) != grid.dim:
            raise ValueError("vector_a needs one spec per grid axis")
        beta = system.beta_per_axis
        theta = np.zeros((grid.dim,) + grid.shape)
        a_nodes = np.zeros((grid.dim,) + grid.shape)
        for a, spec in enumerate(vector_a):
            if spec is None:
                continue
            a_nodes[a] = _eval_on_mesh(spec, grid)
            a_mid = _eval_on_mesh(spec, grid, axis_shift=a)
            theta[a] = beta[a] * a_mid * grid.spacing[a]
    return Potentials(grid, system, v, theta, a_nodes,
                      v_schedule=v_schedule, a_schedule=a_schedule)


# ---------------------------------------------------------------------------
# Hamiltonian and Crank-Nicolson stepping
# ---------------------------------------------------------------------------

def hamiltonian_matrix(grid: ConfigGrid, system: ParticleSystem,
                       pot: Potentials | None = None, t: float | None = None) -> sp.csr_matrix:
    """Sparse covariant Hamiltonian: hopping with link phases, hard walls on
    non-periodic axes, scalar potential on the diagonal."""
    size = grid.size
    flat = np.arange(size).reshape(grid.shape)
    hbar = system.hbar
    masses = system.mass_per_axis
    diag = np.zeros(size, dtype=complex)
    row_parts, col_parts, val_parts = [], [], []
    a_fac = pot.a_factor(t) if pot is not None else 1.0
    for a in range(grid.dim):
        h = grid.spacing[a]
        coeff = hbar**2 / (2 * masses[a] * h**2)
        diag += 2 * coeff
        if pot is not None and pot.link_theta is not None:
            phase = np.exp(-1j * a_fac * pot.link_theta[a])
        else:
            phase = np.ones(grid.shape, dtype=complex)
        nb = np.roll(flat, -1, axis=a)
        if grid.periodic[a]:
            src = flat.ravel()
            dst = nb.ravel()
            ph = phase.ravel()
        else:
            sel = [slice(None)] * grid.dim
            sel[a] = slice(0, grid.points[a] - 1)
            sel = tuple(sel)
            src = flat[sel].ravel()
            dst = nb[sel].ravel()
            ph = phase[sel].ravel()
        row_parts += [src, dst]
        col_parts += [dst, src]
        val_parts += [-coeff * ph, -coeff * np.conj(ph)]
    H = sp.coo_matrix(
        (np.concatenate(val_parts),
         (np.concatenate(row_parts), np.concatenate(col_parts))),
        shape=(size, size), dtype=complex).tocsr()
    if pot is not None and pot.scalar_v is not None:
        diag = diag + pot.v_factor(t) * pot.scalar_v.ravel()
    H = H + sp.diags(diag)
    return H.tocsr()


def apply_hamiltonian(state: WaveState, pot: Potentials,
                      t: float | None = None) -> np.ndarray:
    H = hamiltonian_matrix(state.grid, pot.system, pot, t)
    return (H @ state.psi.ravel()).reshape(state.grid.shape)


def free_potentials(grid: ConfigGrid, system: ParticleSystem) -> Potentials:
    return Potentials(grid, system)


def energy(state: WaveState, pot: Potentials, t: float | None = None) -> float:
    hpsi = apply_hamiltonian(state, pot, t)
    val = np.vdot(state.psi, hpsi) * state.grid.cell_volume
    return float(val.real)


class CrankNicolson:
    """(1 + i dt H / 2 hbar) psi' = (1 - i dt H / 2 hbar) psi.

    The propagator is a Cayley transform of a Hermitian matrix, so the step
    is norm-preserving; the direct sparse solve keeps the defect near
    roundoff and the residual of every solve is checked against
    `solver_tol`.
    """

    def __init__(self, pot: Potentials, dt: float, solver_tol: float = 1e-9):
        if dt == 0:
            raise ValueError("dt must be nonzero")
        self.pot = pot
        self.dt = dt
        self.solver_tol = solver_tol
        self.max_residual = 0.0
        self._cache_t = None
        self._lu = None
        self._B = None
        if not pot.time_dependent:
            self._factor(None)

    def _factor(self, t_mid):
        grid = self.pot.grid
        H = hamiltonian_matrix(grid, self.pot.system, self.pot, t_mid)
        z = 1j * self.dt / (2 * self.pot.system.hbar)
        eye = sp.identity(grid.size, dtype=complex, format="csr")
        self._A = (eye + z * H).tocsc()
        self._B = (eye - z * H).tocsr()
        self._lu = spla.splu(self._A)
        self._cache_t = t_mid

    def step(self, psi: np.ndarray, t: float | None = None) -> np.ndarray:
        flat = psi.ravel()
        if self.pot.time_dependent:
            t_mid = (t if t is not None else 0.0) + self.dt / 2
            if self._cache_t != t_mid:
                self._factor(t_mid)
        b = self._B @ flat
        out = self._lu.solve(b)
        resid = np.max(np.abs(self._A @ out - b))
        scale = max(np.max(np.abs(b)), 1e-300)
        self.max_residual = max(self.max_residual, resid / scale)
        if resid / scale > self.solver_tol:
            raise RuntimeError(
                f"Crank-Nicolson solve residual {resid / scale:.3e} exceeds "
                f"tolerance {self.solver_tol:.3e}")
        return out.reshape(psi.shape)


def evolve(state: WaveState, pot: Potentials, dt: float, steps: int,
           solver_tol: float = 1e-9) -> WaveState:
    """Advance `steps` Crank-Nicolson steps of size `dt`."""
    cn = CrankNicolson(pot, dt, solver_tol)
    psi = state.psi
    t = state.time
    vol = state.grid.cell_volume
    for _ in range(steps):
        psi = cn.step(psi, t)
        t += dt
    raw_norm = float(np.vdot(psi, psi).real * vol)
    return WaveState(state.grid, psi, time=t,
                     meta={"cn_residual": cn.max_residual, "raw_norm": raw_norm})


def evolve_trajectory(state: WaveState, pot: Potentials, dt: float, steps: int,
                      solver_tol: float = 1e-9) -> list[WaveState]:
    """Snapshots at every step, initial state included."""
    cn = CrankNicolson(pot, dt, solver_tol)
    out = [state]
    psi = state.psi
    t = state.time
    vol = state.grid.cell_volume
    for _ in range(steps):
        psi = cn.step(psi, t)
        t += dt
        raw_norm = float(np.vdot(psi, psi).real * vol)
        out.append(WaveState(state.grid, psi, time=t,
                             meta={"cn_residual": cn.max_residual,
                                   "raw_norm": raw_norm}))
    return out


def position_moments(state: WaveState) -> dict:
    """Mean and width of the density per axis.

    Periodic axes use the circular mean and moments of the wrapped deviation,
    so a packet drifting through the seam keeps sensible statistics.
    """
    grid = state.grid
    rho = state.rho
    vol = grid.cell_volume
    means, widths = [], []
    for a in range(grid.dim):
        x = grid.coordinate_array(a)
        if grid.periodic[a]:
            L = grid.extents[a]
            ang = 2 * np.pi * (x - grid.origin[a]) / L
            z = np.sum(rho * np.exp(1j * ang)) * vol
            mean_ang = np.angle(z) % (2 * np.pi)
            mean = grid.origin[a] + L * mean_ang / (2 * np.pi)
            dev = x - mean
            dev = (dev + L / 2) % L - L / 2
            correction = np.sum(rho * dev) * vol
            var = np.sum(rho * (dev - correction) ** 2) * vol
            means.append(float(mean + correction))
        else:
            mean = np.sum(rho * x) * vol
            var = np.sum(rho * (x - mean) ** 2) * vol
            means.append(float(mean))
        widths.append(float(np.sqrt(max(var, 0.0))))
    return {"mean": means, "width": widths}


# ---------------------------------------------------------------------------
# Madelung variables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MadelungPair:
    """Density and phase with the phase stored modulo 2*pi*hbar.

    `mask` is True where rho clears the support floor; phase-derived
    quantities are meaningful only there.
    """

    grid: ConfigGrid
    rho: ScalarField
    phi: ScalarField
    hbar: float
    mask: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)


def madelung(state: WaveState, hbar: float = 1.0,
             floor_rel: float = RHO_FLOOR_REL) -> MadelungPair:
    rho = state.rho
    mask = rho > floor_rel * rho.max()
    phi = hbar * np.angle(state.psi)
    return MadelungPair(state.grid, ScalarField(state.grid, rho),
                        ScalarField(state.grid, phi), hbar, mask,
                        meta={"floor_rel": floor_rel,
                              "masked_fraction": float(1.0 - mask.mean())})


def compose(pair: MadelungPair, time: float = 0.0) -> WaveState:
    total = pair.rho.values.sum() * pair.grid.cell_volume
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"rho integrates to {total}, expected 1")
    if np.any(pair.rho.values < 0):
        raise ValueError("rho has negative entries")
    psi = np.sqrt(pair.rho.values) * np.exp(1j * pair.phi.values / pair.hbar)
    return WaveState(pair.grid, psi, time=time)


def _wrap_branch(dphi: np.ndarray, hbar: float) -> np.ndarray:
    """Rewrap phase differences to the nearest branch in (-pi*hbar, pi*hbar]."""
    period = 2 * np.pi * hbar
    return dphi - period * np.round(dphi / period)


def phase_gradient(pair: MadelungPair, axis: int) -> np.ndarray:
    """Unwrapped phase derivative: nearest-branch bond differences of phi,
    averaged onto nodes (one-sided at hard walls)."""
    grid = pair.grid
    h = grid.spacing[axis]
    phi = pair.phi.values
    per = grid.periodic[axis]
    fwd = _wrap_branch(_shift(phi, axis, +1, per) - phi, pair.hbar) / h
    if per:
        bwd = np.roll(fwd, 1, axis=axis)
        return 0.5 * (fwd + bwd)
    out = np.empty_like(phi)
    sl = [slice(None)] * grid.dim

    def ax(s):
        t = list(sl)
        t[axis] = s
        return tuple(t)

    out[ax(slice(1, -1))] = 0.5 * (fwd[ax(slice(1, -1))] + fwd[ax(slice(0, -2))])
    out[ax(slice(0, 1))] = fwd[ax(slice(0, 1))]
    out[ax(slice(-1, None))] = fwd[ax(slice(-2, -1))]
    return out


def phase_gradient_field(pair: MadelungPair) -> VectorField:
    comps = [phase_gradient(pair, a) for a in range(pair.grid.dim)]
    return VectorField(pair.grid, np.stack(comps))


def quantum_potential(rho: ScalarField, system: ParticleSystem,
                      floor_rel: float = RHO_FLOOR_REL) -> ScalarField:
    """Q = - sum_A (hbar^2 / 2 m_A) (d^2_A sqrt(rho)) / sqrt(rho).

    Masked (set to zero) where rho is below the support floor; the mask
    fraction is reported in meta.
    """
    grid = rho.grid
    amp = np.sqrt(np.maximum(rho.values, 0.0))
    mask = rho.values > floor_rel * rho.values.max()
    out = np.zeros(grid.shape)
    hbar = system.hbar
    masses = system.mass_per_axis
    for a in range(grid.dim):
        h = grid.spacing[a]
        per = grid.periodic[a]
        d2 = (_shift(amp, a, +1, per) - 2 * amp + _shift(amp, a, -1, per)) / h**2
        out = out - hbar**2 / (2 * masses[a]) * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(mask, out / np.where(mask, amp, 1.0), 0.0)
    return ScalarField(grid, q, meta={"mask": mask,
                                      "masked_fraction": float(1.0 - mask.mean())})


def hamilton_residuals(state: WaveState, pot: Potentials, dt: float,
                       floor_rel: float = 1e-8) -> dict:
    """Defects of the continuity and phase (Hamilton-Jacobi) equations.

    Time derivatives are centred: one Crank-Nicolson step forward and one
    backward around the state.  Both residuals are masked where rho is below
    `floor_rel` times its maximum.
    """
    grid = state.grid
    system = pot.system
    hbar = system.hbar
    fwd = evolve(state, pot, dt, 1)
    bwd = evolve(state, pot, -dt, 1)
    rho_dot = (fwd.rho - bwd.rho) / (2 * dt)
    phi_dot = hbar * np.angle(fwd.psi * np.conj(bwd.psi)) / (2 * dt)

    pair = madelung(state, hbar=hbar)
    mask = state.rho > floor_rel * state.rho.max()
    a_fac = pot.a_factor(state.time)
    v_fac = pot.v_factor(state.time)

    masses = system.mass_per_axis
    beta = system.beta_per_axis
    kin = np.zeros(grid.shape)
    div_current = np.zeros(grid.shape)
    for a in range(grid.dim):
        mom = phase_gradient(pair, a)
        if pot.vector_a_nodes is not None:
            mom = mom - hbar * beta[a] * a_fac * pot.vector_a_nodes[a]
        vel = mom / masses[a]
        kin += mom * vel / 2
        cur = ScalarField(grid, state.rho * vel)
        div_current += gradient(cur, a).values
    qpot = quantum_potential(ScalarField(grid, state.rho), system,
                             floor_rel=floor_rel)
    vpot = v_fac * pot.scalar_v if pot.scalar_v is not None else 0.0
    r_rho_field = rho_dot + div_current
    r_phi_field = phi_dot + kin + qpot.values + vpot
    r_rho = float(np.max(np.abs(np.where(mask, r_rho_field, 0.0))))
    r_phi = float(np.max(np.abs(np.where(mask, r_phi_field, 0.0))))
    return {
        "r_rho": r_rho,
        "r_phi": r_phi,
        "masked_fraction": float(1.0 - mask.mean()),
        "mask_warning": bool((1.0 - mask.mean()) > 0.2),
    }


# ---------------------------------------------------------------------------
# discrete symmetries
# ---------------------------------------------------------------------------

def time_reverse(state: WaveState) -> WaveState:
    return WaveState(state.grid, np.conj(state.psi), time=-state.time)


def reverse_potentials(pot: Potentials) -> Potentials:
    """V(t) -> V(-t), A(t) -> -A(-t)."""
    vs = pot.v_schedule
    asch = pot.a_schedule
    return Potentials(
        pot.grid, pot.system,
        scalar_v=pot.scalar_v,
        link_theta=None if pot.link_theta is None else -pot.link_theta,
        vector_a_nodes=None if pot.vector_a_nodes is None else -pot.vector_a_nodes,
        v_schedule=None if vs is None else (lambda t: vs(-t)),
        a_schedule=None if asch is None else (lambda t: asch(-t)),
    )


def gauge_transform(state: WaveState, pot: Potentials, chi,
                    chi_is_physical: bool = True) -> tuple[WaveState, Potentials]:
    """Apply chi: psi gets the phase exp(i sum_n beta_n chi(x_n)); the link
    phases get exact endpoint differences of chi, and node samples of A get
    the central-difference gradient.

    `chi` is a callable of the mesh coordinates (evaluated per particle when
    several share the physical space) or a node-sample array (single-valued
    only).  Multivalued chi (winding on a ring) must be a callable; the bond
    crossing the seam is evaluated by continuing past the edge.
    """
    grid = state.grid
    system = pot.system
    beta_axis = system.beta_per_axis
    beta_particle = system.beta
    mesh = grid.meshgrid()

    if callable(chi):
        chi_nodes_per_particle = {}
        for n in range(system.n_particles):
            axes_of_n = [a for a, (pn, _) in enumerate(system.axis_map) if pn == n]
            coords = [mesh[a] for a in axes_of_n]
            chi_nodes_per_particle[n] = np.asarray(chi(*coords), dtype=float) \
                if coords else np.zeros(grid.shape)
        phase = np.zeros(grid.shape)
        for n, cn in chi_nodes_per_particle.items():
            phase = phase + beta_particle[n] * np.broadcast_to(cn, grid.shape)
    else:
        chi_arr = np.asarray(chi, dtype=float)
        if chi_arr.shape != grid.shape:
            raise ValueError("chi array must match the grid")
        phase = np.zeros(grid.shape)
        for n in range(system.n_particles):
            phase = phase + beta_particle[n] * chi_arr

    new_psi = state.psi * np.exp(1j * phase)

    # exact bond increments of chi per axis
    dim = grid.dim
    dchi_bond = np.zeros((dim,) + grid.shape)
    dchi_nodes = np.zeros((dim,) + grid.shape)
    for a in range(dim):
        h = grid.spacing[a]
        per = grid.periodic[a]
        if callable(chi):
            n_part = system.axis_map[a][0]
            axes_of_n = [ax for ax, (pn, _) in enumerate(system.axis_map) if pn == n_part]
            coords = [mesh[ax] for ax in axes_of_n]
            coords_shift = [m + (h if ax == a else 0.0) for ax, m in zip(axes_of_n, coords)]
            here = np.broadcast_to(np.asarray(chi(*coords), float), grid.shape)
            there = np.broadcast_to(np.asarray(chi(*coords_shift), float), grid.shape)
            dchi_bond[a] = there - here
            coords_back = [m - (h if ax == a else 0.0) for ax, m in zip(axes_of_n, coords)]
            back = np.broadcast_to(np.asarray(chi(*coords_back), float), grid.shape)
            dchi_nodes[a] = (there - back) / (2 * h)
        else:
            dchi_bond[a] = _shift(chi_arr, a, +1, per) - chi_arr
            dchi_nodes[a] = gradient(ScalarField(grid, chi_arr), a).values

    base_theta = pot.link_theta if pot.link_theta is not None \
        else np.zeros((dim,) + grid.shape)
    base_nodes = pot.vector_a_nodes if pot.vector_a_nodes is not None \
        else np.zeros((dim,) + grid.shape)
    new_theta = base_theta + beta_axis.reshape((-1,) + (1,) * dim) * dchi_bond
    new_nodes = base_nodes + dchi_nodes
    new_pot = Potentials(grid, system, pot.scalar_v, new_theta, new_nodes,
                         v_schedule=pot.v_schedule, a_schedule=pot.a_schedule)
    return WaveState(grid, new_psi, time=state.time), new_pot


def charge_quantization_check(system: ParticleSystem, chi_winding: float,
                              rel_tol: float = 1e-9) -> dict:
    """Is exp(i beta_n chi) single-valued for every particle?

    chi_winding is the increment of chi around the loop; the condition is
    beta_n * chi_winding = 2 pi * integer.
    """
    per_particle = []
    ok = True
    for n, b in enumerate(system.beta):
        d = b * chi_winding / (2 * np.pi)
        deficit = abs(d - round(d))
        passed = deficit <= rel_tol * max(1.0, abs(d))
        ok = ok and passed
        per_particle.append({"particle": n, "winding_ratio": d,
                             "deficit": deficit, "pass": passed})
    return {"per_particle": per_particle, "verdict": ok,
            "chi_winding": chi_winding}


# ---------------------------------------------------------------------------
# superposition and winding
# ---------------------------------------------------------------------------

def superpose(a1: complex, s1: WaveState, a2: complex, s2: WaveState) -> WaveState:
    if s1.grid != s2.grid:
        raise ValueError("states live on different grids")
    psi = a1 * s1.psi + a2 * s2.psi
    n = np.vdot(psi, psi).real * s1.grid.cell_volume
    if n < 1e-24:
        raise ValueError("superposition is identically zero")
    return WaveState(s1.grid, psi, time=s1.time)


def winding_number(state: WaveState, loop: Sequence[tuple],
                   floor_rel: float = RHO_FLOOR_REL) -> dict:
    """Winding of the phase along a closed lattice loop.

    The raw value is the sum of nearest-branch phase increments; `gap` is
    its distance from the nearest integer multiple of 2*pi (in turns).
    `max_increment` near pi means the loop is under-resolved.
    """
    grid = state.grid
    nodes = [tuple(int(i) for i in p) for p in loop]
    if nodes[0] != nodes[-1]:
        raise ValueError("loop is not closed")
    psi = state.psi
    rho = state.rho
    floor = floor_rel * rho.max()
    node_hit = any(rho[p] <= floor for p in nodes)
    total = 0.0
    max_inc = 0.0
    for p, q in zip(nodes[:-1], nodes[1:]):
        inc = float(np.angle(psi[q] * np.conj(psi[p])))
        total += inc
        max_inc = max(max_inc, abs(inc))
    integer = int(np.round(total / (2 * np.pi)))
    gap = abs(total / (2 * np.pi) - integer)
    return {
        "integer": integer,
        "raw": total,
        "gap": gap,
        "max_increment": max_inc,
        "node_on_loop": bool(node_hit),
        "under_resolved": bool(max_inc > 0.9 * np.pi),
    }


def singlevalued_check(state: WaveState, loops: Sequence[Sequence[tuple]],
                       gap_tol: float = 1e-6) -> dict:
    """Winding report per loop; a loop violates single-valuedness when its
    raw winding misses an integer by more than `gap_tol` turns.  Loops that
    touch a node are masked rather than judged."""
    reports = []
    ok = True
    for loop in loops:
        r = winding_number(state, loop)
        r["masked"] = r["node_on_loop"]
        r["violation"] = (not r["masked"]) and r["gap"] > gap_tol
        ok = ok and not r["violation"]
        reports.append(r)
    return {"loops": reports, "single_valued": ok}
