"""Geometry of the discrete phase space of probabilities and phases.

A point is (p, Phi) with p on the interior of the k-simplex and Phi a phase
per outcome, defined up to a common additive constant; the canonical
representative fixes the mean phase sum(p * Phi) to zero.  Tangent vectors
are gauge-fixed ("TGF") by sum(dp) = 0 and sum(p * dphi) = 0.

The structures implemented here, all per outcome i:

* symplectic form  Omega(V, U) = sum(dp dphi' - dphi dp')
* metric           G(V, U) = sum[(hbar/2p) dp dp' + (2p/hbar) dphi dphi']
* complex structure  J(dp, dphi) = (-(2p/hbar) dphi, (hbar/2p) dp)

G and Omega are compatible through J (G(JV, U) = Omega(V, U), J^2 = -1),
and (G + i Omega)/2hbar contracted on wave components sqrt(p) e^{i Phi/hbar}
reproduces the usual complex scalar product.  Functional machinery (Poisson
brackets, Hamiltonian flow steps, Killing residuals) uses central finite
differences on the unconstrained (p, Phi) coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .grids import ParticleSystem

MAX_OUTCOMES = 64
P_FLOOR = 1e-12


@dataclass(frozen=True)
class EPhasePoint:
    """Probabilities and phases over k+1 discrete outcomes."""

    probs: np.ndarray
    phases: np.ndarray
    hbar: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        p = np.ascontiguousarray(np.asarray(self.probs, dtype=float))
        phi = np.ascontiguousarray(np.asarray(self.phases, dtype=float))
        if p.ndim != 1 or phi.shape != p.shape:
            raise ValueError("probs and phases must be matching 1-d arrays")
        if p.size < 2 or p.size > MAX_OUTCOMES + 1:
            raise ValueError(f"need 2..{MAX_OUTCOMES + 1} outcomes")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(phi))):
            raise ValueError("non-finite entries")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        p.flags.writeable = False
        phi.flags.writeable = False
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "phases", phi)

    @property
    def n_outcomes(self) -> int:
        return self.probs.size

    @property
    def mean_phase(self) -> float:
        return float(np.sum(self.probs * self.phases))

    def canonical(self) -> "EPhasePoint":
        """Representative with mean phase zero on the gauge orbit."""
        return EPhasePoint(self.probs, self.phases - self.mean_phase,
                           self.hbar)

    @property
    def psi(self) -> np.ndarray:
        return np.sqrt(self.probs) * np.exp(1j * self.phases / self.hbar)

    @classmethod
    def from_psi(cls, psi: np.ndarray, hbar: float = 1.0) -> "EPhasePoint":
        psi = np.asarray(psi, dtype=complex)
        p = np.abs(psi) ** 2
        total = p.sum()
        if total <= 0:
            raise ValueError("psi is identically zero")
        return cls(p / total, hbar * np.angle(psi), hbar)


@dataclass(frozen=True)
class EPhaseTangent:
    """Displacement (dp, dphi) at a phase-space point."""

    dp: np.ndarray
    dphi: np.ndarray

    def __post_init__(self):
        dp = np.ascontiguousarray(np.asarray(self.dp, dtype=float))
        dphi = np.ascontiguousarray(np.asarray(self.dphi, dtype=float))
        if dp.ndim != 1 or dphi.shape != dp.shape:
            raise ValueError("dp and dphi must be matching 1-d arrays")
        dp.flags.writeable = False
        dphi.flags.writeable = False
        object.__setattr__(self, "dp", dp)
        object.__setattr__(self, "dphi", dphi)

    def scaled(self, c: float) -> "EPhaseTangent":
        return EPhaseTangent(c * self.dp, c * self.dphi)


def tgf_residuals(point: EPhasePoint, v: EPhaseTangent) -> tuple[float, float]:
    return (float(abs(v.dp.sum())),
            float(abs(np.sum(point.probs * v.dphi))))


def project_tgf(point: EPhasePoint, v: EPhaseTangent) -> EPhaseTangent:
    """Remove the off-simplex and pure-gauge components of a displacement."""
    dp = v.dp - v.dp.mean()
    dphi = v.dphi - np.sum(point.probs * v.dphi)
    return EPhaseTangent(dp, dphi)


def random_tgf_tangent(point: EPhasePoint,
                       rng: np.random.Generator) -> EPhaseTangent:
    n = point.n_outcomes
    raw = EPhaseTangent(rng.standard_normal(n), rng.standard_normal(n))
    v = project_tgf(point, raw)
    norm = np.sqrt(metric(point, v, v))
    return v.scaled(1.0 / norm)


# ---------------------------------------------------------------------------
# bilinear structures
# ---------------------------------------------------------------------------

def symplectic(v: EPhaseTangent, u: EPhaseTangent) -> float:
    return float(np.sum(v.dp * u.dphi - v.dphi * u.dp))


def _require_support(point: EPhasePoint, v: EPhaseTangent):
    dead = point.probs <= P_FLOOR
    if np.any(dead & ((v.dp != 0) | (v.dphi != 0))):
        raise ValueError("variation on a zero-probability outcome")


def metric(point: EPhasePoint, v: EPhaseTangent, u: EPhaseTangent) -> float:
    """Phase-space scalar product of two TGF displacements."""
    _require_support(point, v)
    _require_support(point, u)
    p, hbar = point.probs, point.hbar
    good = p > P_FLOOR
    return float(np.sum(hbar / (2 * p[good]) * v.dp[good] * u.dp[good]
                        + 2 * p[good] / hbar * v.dphi[good] * u.dphi[good]))


def gauge_invariant_metric(point: EPhasePoint, v: EPhaseTangent,
                           u: EPhaseTangent) -> float:
    """Metric with the mean-phase component projected out of each slot.

    Agrees with `metric` on TGF vectors but ignores pure-gauge phase parts,
    which keeps flow-transported vectors comparable without re-projection.
    """
    p, hbar = point.probs, point.hbar
    dv = v.dphi - np.sum(p * v.dphi)
    du = u.dphi - np.sum(p * u.dphi)
    return float(np.sum(hbar / (2 * p) * v.dp * u.dp
                        + 2 * p / hbar * dv * du))


def embedding_metric(point: EPhasePoint, v: EPhaseTangent, u: EPhaseTangent,
                     a_fn: Callable[[float], float] | None = None,
                     b_fn: Callable[[float], float] | None = None) -> float:
    """Rotationally invariant metric of the embedding space, as a bilinear.

    d l^2 = A (sum dp)^2 + B sum[(hbar/2p) dp^2 + (2p/hbar) dphi^2] with
    A = (a - b)/4 and B = |p| b / 2 hbar evaluated at |p| = sum(p).  The
    default a = b = 2 hbar makes A = 0, B = 1, the normalization in which
    the restriction to the simplex is the Fubini-Study metric.
    """
    hbar = point.hbar
    if a_fn is None:
        a_fn = lambda s: 2.0 * hbar
    if b_fn is None:
        b_fn = lambda s: 2.0 * hbar
    _require_support(point, v)
    _require_support(point, u)
    p = point.probs
    total = float(p.sum())
    a, b = float(a_fn(total)), float(b_fn(total))
    if a <= 0 or b <= 0:
        raise ValueError("metric family functions must be positive")
    big_a = (a - b) / 4.0
    big_b = total * b / (2.0 * hbar)
    good = p > P_FLOOR
    core = np.sum(hbar / (2 * p[good]) * v.dp[good] * u.dp[good]
                  + 2 * p[good] / hbar * v.dphi[good] * u.dphi[good])
    return float(big_a * v.dp.sum() * u.dp.sum() + big_b * core)


def fs_length_squared(point: EPhasePoint, v: EPhaseTangent,
                      method: str = "closed") -> float:
    """Squared length of a displacement on the quotient by phase shifts.

    "closed" subtracts the mean phase analytically:
    sum[(hbar/2p) dp^2 + (2p/hbar)(dphi - <dphi>)^2]; "minimize" finds the
    best constant shift numerically.  Both must agree: the minimization
    over the gauge orbit is what defines the induced metric.
    """
    _require_support(point, v)
    p, hbar = point.probs, point.hbar
    good = p > P_FLOOR
    radial = float(np.sum(hbar / (2 * p[good]) * v.dp[good] ** 2))
    if method == "closed":
        mean = np.sum(p * v.dphi)
        return radial + float(np.sum(2 * p[good] / hbar
                                     * (v.dphi[good] - mean) ** 2))
    if method == "minimize":
        def length(alpha):
            return float(np.sum(2 * p[good] / hbar
                                * (v.dphi[good] + alpha) ** 2))
        res = scipy.optimize.minimize_scalar(length)
        return radial + float(res.fun)
    raise ValueError(f"unknown method {method!r}")


def apply_J(point: EPhasePoint, v: EPhaseTangent,
            check_tgf: bool = True) -> EPhaseTangent:
    """Complex structure: (dp, dphi) -> (-(2p/hbar) dphi, (hbar/2p) dp).

    The image of a TGF vector is again TGF; this is verified (and then
    enforced against roundoff), not assumed.
    """
    _require_support(point, v)
    p, hbar = point.probs, point.hbar
    if np.any(p <= P_FLOOR):
        raise ValueError("complex structure needs strictly interior p")
    out = EPhaseTangent(-(2.0 / hbar) * p * v.dphi,
                        hbar / (2.0 * p) * v.dp)
    if check_tgf:
        r_in = tgf_residuals(point, v)
        r_out = tgf_residuals(point, out)
        scale = max(np.max(np.abs(out.dp)), np.max(np.abs(out.dphi)), 1e-300)
        if max(r_in) < 1e-9 and max(r_out) > 1e-9 * scale:
            raise AssertionError("TGF closure under J failed")
        out = project_tgf(point, out)
    return out


# ---------------------------------------------------------------------------
# functionals, brackets, flows
# ---------------------------------------------------------------------------

def functional_gradient(f: Callable, point: EPhasePoint,
                        h_fd: float = 1e-5) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference derivatives of f(p, phi) in each coordinate.

    The step in a probability coordinate shrinks near the simplex boundary
    so probes never leave the positive orthant.
    """
    p, phi = point.probs, point.phases
    n = p.size
    df_dp = np.empty(n)
    df_dphi = np.empty(n)
    for i in range(n):
        h = min(h_fd, 0.5 * p[i]) if p[i] < 2 * h_fd else h_fd
        if h <= 0:
            raise ValueError("probability too close to zero for derivatives")
        ep = np.zeros(n)
        ep[i] = h
        df_dp[i] = (f(p + ep, phi) - f(p - ep, phi)) / (2 * h)
        ephi = np.zeros(n)
        ephi[i] = h_fd
        df_dphi[i] = (f(p, phi + ephi) - f(p, phi - ephi)) / (2 * h_fd)
    if not (np.all(np.isfinite(df_dp)) and np.all(np.isfinite(df_dphi))):
        raise ValueError("functional produced non-finite values")
    return df_dp, df_dphi


def poisson_bracket(f: Callable, g: Callable, point: EPhasePoint,
                    h_fd: float = 1e-5, grad_f: Callable | None = None,
                    grad_g: Callable | None = None) -> float:
    """{f, g} = sum(df/dp dg/dphi - df/dphi dg/dp).

    Derivatives come from central differences unless an analytic gradient
    callable (p, phi) -> (df_dp, df_dphi) is supplied.
    """
    fp, fphi = (grad_f(point.probs, point.phases) if grad_f is not None
                else functional_gradient(f, point, h_fd))
    gp, gphi = (grad_g(point.probs, point.phases) if grad_g is not None
                else functional_gradient(g, point, h_fd))
    return float(np.sum(fp * gphi - fphi * gp))


def hamilton_field(f: Callable, point: EPhasePoint, h_fd: float = 1e-5,
                   grad: Callable | None = None) -> EPhaseTangent:
    """Vector field of the canonical flow: dp = df/dphi, dphi = -df/dp."""
    if grad is not None:
        df_dp, df_dphi = grad(point.probs, point.phases)
    else:
        df_dp, df_dphi = functional_gradient(f, point, h_fd)
    return EPhaseTangent(np.asarray(df_dphi, float), -np.asarray(df_dp, float))


def hamiltonian_flow_step(f: Callable, point: EPhasePoint, dlam: float,
                          h_fd: float = 1e-5,
                          recenter: bool = True) -> EPhasePoint:
    """One explicit Euler step of the canonical flow generated by f.

    Rejects steps that would push a probability negative (with the largest
    admissible step size in the message).  With `recenter` the returned
    representative has mean phase zero and the removed constant is kept in
    meta["gauge_shift"].
    """
    field_v = hamilton_field(f, point, h_fd)
    new_p = point.probs + dlam * field_v.dp
    if np.any(new_p < 0):
        bad = field_v.dp < 0
        limit = float(np.min(point.probs[bad] / -field_v.dp[bad]))
        raise ValueError(
            f"step d_lambda={dlam:g} drives probabilities negative; "
            f"use |d_lambda| < {limit:g}")
    drift = float(new_p.sum() - 1.0)
    if abs(drift) > 1e-8:
        raise ValueError("flow leaves the simplex: sum(dp) != 0")
    new_p = new_p / new_p.sum()
    new_phi = point.phases + dlam * field_v.dphi
    shift = float(np.sum(new_p * new_phi)) if recenter else 0.0
    return EPhasePoint(new_p, new_phi - shift, point.hbar,
                       meta={"gauge_shift": shift, "simplex_drift": drift})


def normalization_functional(p: np.ndarray, phi: np.ndarray) -> float:
    """The constraint function 1 - sum(p); its flow shifts all phases."""
    return 1.0 - float(np.sum(p))


def kernel_expectation(kernel: np.ndarray, hbar: float = 1.0) -> Callable:
    """Expectation value of a Hermitian kernel as a function of (p, phi)."""
    q = np.asarray(kernel, dtype=complex)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError("kernel must be a square matrix")
    if not np.allclose(q, q.conj().T, rtol=0, atol=1e-12 * np.abs(q).max()):
        raise ValueError("kernel must be Hermitian")

    def f(p: np.ndarray, phi: np.ndarray) -> float:
        psi = np.sqrt(np.clip(p, 0.0, None)) * np.exp(1j * phi / hbar)
        return float(np.real(np.vdot(psi, q @ psi)))

    return f


def kernel_gradient(kernel: np.ndarray, hbar: float = 1.0) -> Callable:
    """Analytic gradient of a Hermitian-kernel expectation.

    Chain rule through psi_j = sqrt(p_j) e^{i phi_j/hbar}: with w = Q psi,
    df/dp_j = Re(psi_j* w_j)/p_j and df/dphi_j = (2/hbar) Im(psi_j* w_j).
    Returned callable maps (p, phi) -> (df_dp, df_dphi); cross-checked by
    central differences in the unit tests.
    """
    q = np.asarray(kernel, dtype=complex)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError("kernel must be a square matrix")
    if not np.allclose(q, q.conj().T, rtol=0, atol=1e-12 * np.abs(q).max()):
        raise ValueError("kernel must be Hermitian")

    def g(p: np.ndarray, phi: np.ndarray):
        psi = np.sqrt(np.clip(p, 0.0, None)) * np.exp(1j * phi / hbar)
        prod = psi.conj() * (q @ psi)
        return prod.real / np.clip(p, 1e-300, None), (2.0 / hbar) * prod.imag

    return g


def unitary_kernel_flow(point: EPhasePoint, kernel: np.ndarray,
                        dlam: float) -> EPhasePoint:
    """Exact flow of a Hermitian-kernel expectation: psi -> e^{-iQ dl/h} psi."""
    u = scipy.linalg.expm(-1j * np.asarray(kernel, complex) * dlam
                          / point.hbar)
    return EPhasePoint.from_psi(u @ point.psi, point.hbar)


def killing_residual(f: Callable, point: EPhasePoint, n_probes: int = 10,
                     seed: int = 0, h_fd: float = 1e-5,
                     probe_eps: float = 1e-4, grad: Callable | None = None,
                     directed: bool = True) -> float:
    """Largest |d/dlambda G(V, U)| along the flow of f over probe pairs.

    Uses the Lie-derivative identity L_X G (V, U) = X[G(V, U)]
    + G(D_V X, U) + G(V, D_U X) for constant extensions of V, U; the field
    derivative D_V X is a central difference of the Hamiltonian field, which
    itself comes from `grad` when given (see kernel_gradient) and central
    differences otherwise.  Besides `n_probes` random pairs, `directed` adds
    one self-pair per coordinate, concentrated on that outcome, so
    violations localized on high-weight outcomes are not washed out by
    averaging.  Generators bilinear in the wave components are isometries
    and land at the finite-difference floor; nonlinear functionals do not.
    """
    rng = np.random.default_rng(seed)
    p, hbar = point.probs, point.hbar
    x_field = hamilton_field(f, point, h_fd, grad=grad)

    def pushed_field(w: EPhaseTangent) -> EPhaseTangent:
        pp = p + probe_eps * w.dp
        pm = p - probe_eps * w.dp
        plus = EPhasePoint(pp / pp.sum(),
                           point.phases + probe_eps * w.dphi, hbar)
        minus = EPhasePoint(pm / pm.sum(),
                            point.phases - probe_eps * w.dphi, hbar)
        xp = hamilton_field(f, plus, h_fd, grad=grad)
        xm = hamilton_field(f, minus, h_fd, grad=grad)
        return EPhaseTangent((xp.dp - xm.dp) / (2 * probe_eps),
                             (xp.dphi - xm.dphi) / (2 * probe_eps))

    pairs = [(random_tgf_tangent(point, rng), random_tgf_tangent(point, rng))
             for _ in range(n_probes)]
    if directed:
        for j in range(p.size):
            dp = np.zeros(p.size)
            dp[j] = 1.0
            dphi = np.zeros(p.size)
            dphi[j] = hbar / (2.0 * p[j])
            t = project_tgf(point, EPhaseTangent(dp, dphi))
            norm2 = metric(point, t, t)
            if norm2 < 1e-18:
                continue
            t = t.scaled(1.0 / np.sqrt(norm2))
            pairs.append((t, t))

    worst = 0.0
    for v, u in pairs:
        dxv = pushed_field(v)
        dxu = dxv if u is v else pushed_field(u)
        dv = v.dphi - np.sum(p * v.dphi)
        du = u.dphi - np.sum(p * u.dphi)
        coeff_term = float(np.sum(x_field.dp *
                                  (-hbar / (2 * p**2) * v.dp * u.dp
                                   + 2.0 / hbar * dv * du)))
        lie = (coeff_term + gauge_invariant_metric(point, dxv, u)
               + gauge_invariant_metric(point, v, dxu))
        worst = max(worst, abs(lie))
    return worst


# ---------------------------------------------------------------------------
# scalar product and the bracket-commutator identity
# ---------------------------------------------------------------------------

def scalar_product(psi1: np.ndarray, psi2: np.ndarray,
                   hbar: float = 1.0) -> complex:
    """Hermitian product assembled from the metric and symplectic blocks.

    Contracts (psi1, i hbar psi1*) with (G + i Omega)/(2 hbar) per outcome,
    where G = -i [[0,1],[1,0]] and Omega = [[0,1],[-1,0]] in the complex
    coordinates (psi, i hbar psi*); the result reduces to sum(psi1* psi2).
    """
    psi1 = np.asarray(psi1, dtype=complex)
    psi2 = np.asarray(psi2, dtype=complex)
    if psi1.shape != psi2.shape:
        raise ValueError("mismatched shapes")
    g_block = -1j * np.array([[0.0, 1.0], [1.0, 0.0]])
    omega_block = np.array([[0.0, 1.0], [-1.0, 0.0]])
    m = (g_block + 1j * omega_block) / (2.0 * hbar)
    left = np.stack([psi1, 1j * hbar * psi1.conj()])
    right = np.stack([psi2, 1j * hbar * psi2.conj()])
    return complex(np.einsum("ax,ab,bx->", left, m, right))


def commutator_identity_gap(u_kernel: np.ndarray, v_kernel: np.ndarray,
                            point: EPhasePoint,
                            h_fd: float | None = None) -> float:
    """|{U~, V~} - <psi|[U, V]|psi>/i hbar| at the given point.

    The bracket side is evaluated on the (p, phi) coordinates — chain-rule
    gradients by default, central differences when h_fd is given; the
    commutator side by exact matrix algebra on the wave components.
    """
    hbar = point.hbar
    fu = kernel_expectation(u_kernel, hbar)
    fv = kernel_expectation(v_kernel, hbar)
    if h_fd is None:
        pb = poisson_bracket(fu, fv, point,
                             grad_f=kernel_gradient(u_kernel, hbar),
                             grad_g=kernel_gradient(v_kernel, hbar))
    else:
        pb = poisson_bracket(fu, fv, point, h_fd)
    uu = np.asarray(u_kernel, complex)
    vv = np.asarray(v_kernel, complex)
    psi = point.psi
    comm = np.vdot(psi, (uu @ vv - vv @ uu) @ psi) / (1j * hbar)
    return float(abs(pb - comm.real) + abs(comm.imag))


def geometry_battery(outcomes: int = 64, probes: int = 100, kernels: int = 20,
                     seed: int = 0, hbar: float = 1.0) -> dict:
    """Identity checks of the phase-space structures at random points.

    Runs `probes` random TGF probe pairs for J^2 = -1, the G/Omega/J
    compatibility identities, and the closed-form vs minimized length;
    `kernels` random Hermitian generators for the Killing and commutator
    identities; plus the nonlinear counterexample and the flow of the
    normalization constraint.  Tolerances follow the analytic floors of
    each quantity (1e-10 for exact identities, 1e-6 for finite-difference
    residuals).
    """
    if outcomes > MAX_OUTCOMES:
        raise ValueError(f"at most {MAX_OUTCOMES} outcomes")
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(8.0 * np.ones(outcomes + 1))
    p = np.maximum(p, 1e-3)
    p /= p.sum()
    phi = 0.4 * hbar * rng.uniform(-1.0, 1.0, outcomes + 1)
    point = EPhasePoint(p, phi, hbar).canonical()

    j_sq = compat_metric = compat_omega = fs_gap = 0.0
    for _ in range(probes):
        v = random_tgf_tangent(point, rng)
        u = random_tgf_tangent(point, rng)
        jv = apply_J(point, v)
        jjv = apply_J(point, jv)
        j_sq = max(j_sq, float(np.max(np.abs(jjv.dp + v.dp))),
                   float(np.max(np.abs(jjv.dphi + v.dphi))))
        compat_metric = max(compat_metric,
                            abs(metric(point, jv, jv) - metric(point, v, v)))
        compat_omega = max(compat_omega,
                           abs(metric(point, jv, u) - symplectic(v, u)))
        w = EPhaseTangent(v.dp, v.dphi + rng.uniform(-1, 1))
        fs_gap = max(fs_gap, abs(fs_length_squared(point, w)
                                 - fs_length_squared(point, w,
                                                     method="minimize")))

    killing_max = 0.0
    commutator_max = 0.0
    n = outcomes + 1
    prev = None
    for _ in range(kernels):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        q = 0.5 * (a + a.conj().T)
        killing_max = max(killing_max,
                          killing_residual(kernel_expectation(q, hbar), point,
                                           n_probes=probes,
                                           seed=int(rng.integers(2**31)),
                                           probe_eps=1e-5,
                                           grad=kernel_gradient(q, hbar)))
        if prev is not None:
            commutator_max = max(commutator_max,
                                 commutator_identity_gap(prev, q, point))
        prev = q
    counterexample = killing_residual(lambda p_, phi_: float(np.sum(p_**2)),
                                      point, n_probes=probes,
                                      seed=int(rng.integers(2**31)),
                                      grad=lambda p_, phi_:
                                      (2.0 * p_, np.zeros_like(p_)))

    moved = hamiltonian_flow_step(normalization_functional, point, 0.17,
                                  recenter=False)
    n_flow_ok = (np.allclose(moved.probs, point.probs, atol=1e-12)
                 and np.allclose(moved.phases, point.phases + 0.17,
                                 atol=1e-9))

    report = {
        "outcomes": outcomes,
        "probes": probes,
        "kernels": kernels,
        "j_squared_max_dev": j_sq,
        "metric_j_invariance_max_dev": compat_metric,
        "omega_metric_j_identity_max_dev": compat_omega,
        "fs_closed_vs_minimized_max_gap": fs_gap,
        "killing_hermitian_max": killing_max,
        "killing_counterexample": counterexample,
        "commutator_identity_max_gap": commutator_max,
        "normalization_flow_ok": bool(n_flow_ok),
    }
    report["all_passed"] = bool(
        j_sq < 1e-10 and compat_metric < 1e-10 and compat_omega < 1e-10
        and fs_gap < 1e-10 and killing_max < 1e-6
        and counterexample > 1e-3 and commutator_max < 1e-6 and n_flow_ok)
    return report


# ---------------------------------------------------------------------------
# information metric of the transition kernel
# ---------------------------------------------------------------------------

def transition_information_metric(system: ParticleSystem, dt: float,
                                  base_point: np.ndarray | None = None,
                                  mean_fn: Callable | None = None,
                                  quad_points: int = 129,
                                  quad_sigmas: float = 8.0,
                                  fd_scale: float = 1e-4) -> dict:
    """Fisher information of the Gaussian step kernel in the start point.

    Integrates gamma_AB = Int dx' P (d_A log P)(d_B log P) on a tensor
    quadrature lattice and compares with the closed form m_AB / (eta dt^g):
    for the g = 3 process this is the mass tensor up to the eta dt^3 factor.
    """
    if system.eta <= 0:
        raise ValueError("eta must be positive for the information metric")
    dim = len(system.axis_map)
    if base_point is None:
        base_point = np.zeros(dim)
    base_point = np.asarray(base_point, dtype=float)
    if mean_fn is None:
        mean_fn = lambda x: np.zeros(dim)
    sig = np.sqrt(system.eta * dt**system.gamma_exponent
                  / system.mass_per_axis)

    if dim == 3 and quad_points > 65:
        quad_points = 65
    axes = []
    for a in range(dim):
        c = base_point[a] + np.asarray(mean_fn(base_point))[a]
        axes.append(np.linspace(c - quad_sigmas * sig[a],
                                c + quad_sigmas * sig[a], quad_points))
    mesh = np.meshgrid(*axes, indexing="ij")
    weights = np.prod([ax[1] - ax[0] for ax in axes])

    def log_p(x_from: np.ndarray) -> np.ndarray:
        mu = x_from + np.asarray(mean_fn(x_from))
        out = 0.0
        for a in range(dim):
            out = out - (mesh[a] - mu[a]) ** 2 / (2 * sig[a] ** 2) \
                - 0.5 * np.log(2 * np.pi * sig[a] ** 2)
        return out

    p_kernel = np.exp(log_p(base_point))
    grads = []
    for a in range(dim):
        delta = fd_scale * sig[a]
        e = np.zeros(dim)
        e[a] = delta
        grads.append((log_p(base_point + e) - log_p(base_point - e))
                     / (2 * delta))
    gamma = np.empty((dim, dim))
    for a in range(dim):
        for b in range(a, dim):
            val = float(np.sum(p_kernel * grads[a] * grads[b]) * weights)
            gamma[a, b] = gamma[b, a] = val
    expected = np.diag(system.mass_per_axis
                       / (system.eta * dt**system.gamma_exponent))
    scale = np.sqrt(np.outer(np.diag(expected), np.diag(expected)))
    rel = np.abs(gamma - expected) / scale
    return {
        "gamma_matrix": gamma,
        "expected": expected,
        "max_rel_deviation": float(rel.max()),
        "off_diagonal_max": float(np.max(np.abs(gamma - np.diag(np.diag(
            gamma))))) if dim > 1 else 0.0,
        "mass_normalization": float(np.sum(p_kernel) * weights),
    }
