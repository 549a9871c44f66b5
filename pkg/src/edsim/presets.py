"""Ready-made experiment setups shared by the command line and test suites.

Every preset freezes a grid, particle constants, potentials and an initial
wave state, plus default step size and count.  Momenta on periodic axes are
snapped to the ring quantization 2 pi n / L so initial phases close across
the seam.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import ConfigGrid, ParticleSystem, single_particle
from .quantum import (Potentials, WaveState, build_potentials, free_potentials,
                      gaussian_packet, superpose)


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: ConfigGrid
    system: ParticleSystem
    potentials: Potentials
    state: WaveState
    dt: float
    steps: int
    description: str = ""
    meta: dict = field(default_factory=dict, compare=False)


def ring_momentum(length: float, n: int) -> float:
    """n-th quantized momentum on a ring of circumference `length`."""
    return 2.0 * np.pi * n / length


def _free(points=256, dt=0.01, steps=200, sigma=1.0, mode_number=3,
          eta=1e-3, gamma_exponent=3.0):
    grid = ConfigGrid((points,), (30.0,), (True,), origin=(-15.0,))
    system = single_particle(eta=eta, gamma_exponent=gamma_exponent)
    k = ring_momentum(30.0, mode_number)
    state = gaussian_packet(grid, 0.0, sigma, momentum=k)
    return Scenario("free", grid, system, free_potentials(grid, system),
                    state, dt, steps,
                    "spreading Gaussian packet on a ring",
                    meta={"momentum": k, "sigma": sigma})


def _harmonic(points=256, dt=0.01, steps=200, displacement=1.0,
              omega=1.0, eta=1e-3, gamma_exponent=3.0):
    grid = ConfigGrid((points,), (20.0,), (False,), origin=(-10.0,))
    system = single_particle(eta=eta, gamma_exponent=gamma_exponent)
    x = grid.axis_coords(0)
    pot = build_potentials(grid, system,
                           scalar_v=0.5 * system.masses[0] * omega**2 * x**2)
    sigma = np.sqrt(system.hbar / (2.0 * system.masses[0] * omega))
    state = gaussian_packet(grid, displacement, sigma)
    return Scenario("harmonic", grid, system, pot, state, dt, steps,
                    "coherent oscillation in a quadratic well",
                    meta={"omega": omega, "sigma": sigma,
                          "displacement": displacement})


def _double_well(points=256, dt=0.005, steps=400, barrier=1.5,
                 half_separation=2.0, eta=1e-3, gamma_exponent=3.0):
    grid = ConfigGrid((points,), (24.0,), (False,), origin=(-12.0,))
    system = single_particle(eta=eta, gamma_exponent=gamma_exponent)
    x = grid.axis_coords(0)
    v = barrier * ((x / half_separation) ** 2 - 1.0) ** 2
    pot = build_potentials(grid, system, scalar_v=v)
    state = gaussian_packet(grid, -half_separation, 0.7)
    return Scenario("double_well", grid, system, pot, state, dt, steps,
                    "packet started in the left well of a quartic double well",
                    meta={"barrier": barrier,
                          "half_separation": half_separation})


def _ring_constant_a(points=256, dt=0.01, steps=200, a0=0.7, charge=1.0,
                     mode_number=2, eta=1e-3, gamma_exponent=3.0):
    grid = ConfigGrid((points,), (20.0,), (True,), origin=(-10.0,))
    system = single_particle(charge=charge, eta=eta,
                             gamma_exponent=gamma_exponent)
    pot = build_potentials(grid, system, vector_a=(a0,))
    k = ring_momentum(20.0, mode_number)
    state = gaussian_packet(grid, 0.0, 1.2, momentum=k)
    return Scenario("ring_constant_a", grid, system, pot, state, dt, steps,
                    "charged packet on a ring threaded by a constant "
                    "vector potential",
                    meta={"a0": a0, "momentum": k})


def _interference(points=512, dt=0.005, steps=800, separation=6.0,
                  mode_number=10, sigma=1.5, eta=1e-3, gamma_exponent=3.0):
    grid = ConfigGrid((points,), (40.0,), (True,), origin=(-20.0,))
    system = single_particle(eta=eta, gamma_exponent=gamma_exponent)
    k = ring_momentum(40.0, mode_number)
    left = gaussian_packet(grid, -separation, sigma, momentum=k)
    right = gaussian_packet(grid, separation, sigma, momentum=-k)
    state = superpose(1.0, left, 1.0, right)
    return Scenario("interference", grid, system,
                    free_potentials(grid, system), state, dt, steps,
                    "two packets colliding head on; fringes build up as "
                    "they overlap",
                    meta={"momentum": k, "separation": separation})


def _vortex_2d(points=96, dt=0.005, steps=100, winding=1, core=1.0,
               eta=1e-3, gamma_exponent=3.0):
    half = 6.0
    grid = ConfigGrid((points, points), (2 * half, 2 * half), (False, False),
                      origin=(-half, -half))
    system = single_particle(dim=2, eta=eta, gamma_exponent=gamma_exponent)
    xx, yy = grid.meshgrid()
    r = np.hypot(xx, yy)
    theta = np.arctan2(yy, xx)
    psi = (np.tanh(r / core) ** abs(winding) * np.exp(-0.5 * (r / 3.0) ** 2)
           * np.exp(1j * winding * theta))
    state = WaveState(grid, psi)
    return Scenario("vortex_2d", grid, system, free_potentials(grid, system),
                    state, dt, steps,
                    f"planar vortex of winding {winding}",
                    meta={"winding": winding, "core": core})


PRESETS = {
    "free": _free,
    "harmonic": _harmonic,
    "double_well": _double_well,
    "ring_constant_a": _ring_constant_a,
    "interference": _interference,
    "vortex_2d": _vortex_2d,
}


def build_preset(name: str, **overrides) -> Scenario:
    try:
        builder = PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ValueError(f"unknown preset {name!r}; available: {known}")
    return builder(**overrides)
