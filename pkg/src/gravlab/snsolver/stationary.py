"""Stationary states of the self-coupled radial eigenproblem.

Two independent routes are provided and cross-checked against each other:

* ``method="scf"``: damped self-consistent field iteration: solve the linear
  tridiagonal eigenproblem in a frozen potential, rebuild the kernel potential
  from the resulting density, mix with damping (Aitken-accelerated after a
  warm-up), repeat until the potential reproduces itself.
* ``method="shooting"``: integrate the coupled ODE pair (radial wave equation
  plus the radial equation for the kernel potential) outward and bisect on the
  eigenvalue until the solution has the requested node count and decays.  For
  a pure kernel coupling the scaling symmetry (psi, Phi, E) -> (l^2 psi(l x),
  l^2 Phi(l x), l^2 E) converts the arbitrary-amplitude solution into the
  unit-norm one; with an external potential the launch amplitude is adjusted
  instead (slower; SCF is the workhorse there).

Everything is solved in dimensionless form: lengths in hbar^2/(m |kappa|)
(the natural kernel length), energies in m kappa^2 / hbar^2, which for the
gravitational coupling reproduces the standard self-gravitating units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from ..errors import ConvergenceError, GridError
from ..quantities import CODATA2018, PhysicalConstants
from .state import (
    KernelTerm,
    RadialGrid,
    WaveState,
    kernel_integral,
    validate_grid_resolution,
    validate_tail,
)

DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class StationaryState:
    """Eigenpair of the self-consistent problem, labeled by radial node count."""

    state: WaveState
    eigenvalue: float        # J
    node_count: int
    residual: float          # dimensionless self-consistency defect
    method: str = "scf"


def count_nodes(u: np.ndarray, floor: float = 1e-7) -> int:
    """Sign changes of the radial profile, ignoring the sub-threshold tail."""
    mag = np.abs(u)
    significant = u[mag > floor * float(mag.max())]
    return int(np.count_nonzero(significant[:-1] * significant[1:] < 0.0))


# ---------------------------------------------------------------------------
# Problem scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Scales:
    length: float   # m per dimensionless unit
    energy: float   # J per dimensionless unit
    kappa_sign: float  # -1, 0, or +1


def _make_scales(mass: float, kappa: float, grid: RadialGrid,
                 constants: PhysicalConstants) -> _Scales:
    if kappa != 0.0:
        length = constants.hbar**2 / (mass * abs(kappa))
        energy = mass * kappa**2 / constants.hbar**2
        return _Scales(length, energy, math.copysign(1.0, kappa))
    # no kernel: any scale works; tie it to the grid for conditioning
    length = grid.r_max / 10.0
    energy = constants.hbar**2 / (mass * length**2)
    return _Scales(length, energy, 0.0)


def _external_on_grid(external, r: np.ndarray, energy_scale: float) -> np.ndarray | None:
    if external is None:
        return None
    if callable(external):
        return np.asarray(external(r), dtype=float) / energy_scale
    arr = np.asarray(external, dtype=float)
    if arr.shape != r.shape:
        raise ValueError("external_potential array must match the grid")
    return arr / energy_scale


# ---------------------------------------------------------------------------
# SCF route
# ---------------------------------------------------------------------------


def _eigensolve(x: np.ndarray, dx: float, potential: np.ndarray, k: int) -> tuple[float, np.ndarray]:
    diag = 1.0 / dx**2 + potential
    off = np.full(x.size - 1, -0.5 / dx**2)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, k))
    u = vecs[:, k]
    u = u / math.sqrt(dx * float(np.dot(u, u)))
    first = np.nonzero(np.abs(u) > 0.01 * np.abs(u).max())[0][0]
    if u[first] < 0:
        u = -u
    return float(vals[k]), u


def _gaussian_kernel_seed(x: np.ndarray, width: float) -> np.ndarray:
    # kernel integral of a unit-mass Gaussian cloud: erf(x / (sqrt(2) w)) / x
    from scipy.special import erf

    return erf(x / (math.sqrt(2.0) * width)) / x


def _scf_state(
    x: np.ndarray,
    dx: float,
    vext: np.ndarray | None,
    kappa_sign: float,
    k: int,
    tol: float,
    max_iter: int,
    damping: float,
    aitken_start: int = 10,
) -> tuple[float, np.ndarray, float, list[float]]:
    vt = np.zeros_like(x) if vext is None else vext
    if kappa_sign == 0.0:
        eps, u = _eigensolve(x, dx, vt, k)
        return eps, u, 0.0, []

    phi = kappa_sign * _gaussian_kernel_seed(x, 2.0) if vext is None else np.zeros_like(x)
    history: list[float] = []
    recent: list[np.ndarray] = []
    eps, u = 0.0, np.zeros_like(x)
    for iteration in range(max_iter):
        eps, u = _eigensolve(x, dx, vt + phi, k)
        phi_new = kappa_sign * kernel_integral(x, u * u)
        scale = float(np.abs(phi_new).max()) + 1e-300
        residual = float(np.abs(phi_new - phi).max()) / scale
        history.append(residual)
        if residual < tol:
            return eps, u, residual, history
        phi = phi + damping * (phi_new - phi)
        recent.append(phi.copy())
        if iteration >= aitken_start and len(recent) >= 3 and (iteration - aitken_start) % 3 == 2:
            p0, p1, p2 = recent[-3], recent[-2], recent[-1]
            denom = p2 - 2.0 * p1 + p0
            safe = np.abs(denom) > 1e-14 * scale
            phi = np.where(safe, p2 - (p2 - p1) ** 2 / np.where(safe, denom, 1.0), p2)
            recent.clear()
    raise ConvergenceError(
        f"SCF did not reach residual {tol:g} in {max_iter} iterations "
        f"(last residual {history[-1]:.3e})",
        residual_history=history,
    )


# ---------------------------------------------------------------------------
# Shooting route
# ---------------------------------------------------------------------------


def _integrate_batch(
    eps: np.ndarray,
    alpha: float,
    h: float,
    n_steps: int,
    kappa_sign: float,
    vfun: Callable[[float], float] | None,
    record: bool = False,
):
    """RK4 on u'' = 2(P + V - eps)u, (x S)'' = -4 pi u^2 / x, from u(0)=0, u'(0)=alpha.

    All eps candidates integrate in lockstep; diverged columns saturate at a
    clamp value and stop contributing node crossings.  Returns crossing counts
    and, when ``record`` is set, the full (x, u, q') history of the first column.
    """
    m = eps.shape[0]
    u = np.zeros(m)
    up = np.full(m, alpha)
    q = np.zeros(m)   # q = x * (gauged kernel potential) / kappa_sign
    qp = np.zeros(m)
    crossings = np.zeros(m, dtype=int)
    active = np.ones(m)   # 1.0 while integrating, 0.0 once a column has diverged
    clamp = 1e30
    has_kernel = kappa_sign != 0.0

    xs = us = qps = None
    if record:
        xs = np.empty(n_steps + 1)
        us = np.empty(n_steps + 1)
        qps = np.empty(n_steps + 1)
        xs[0], us[0], qps[0] = 0.0, 0.0, 0.0

    def rhs(x, u, up, q, qp):
        # frozen columns get zero derivatives, so their values never overflow
        if x == 0.0:
            zero = np.zeros_like(u)
            return active * up, zero, active * qp, zero
        pot = (kappa_sign * q / x) if has_kernel else 0.0
        if vfun is not None:
            pot = pot + vfun(x)
        du = active * up
        dup = active * 2.0 * (pot - eps) * u
        if has_kernel:
            return du, dup, active * qp, active * (-4.0 * math.pi) * u * u / x
        return du, dup, np.zeros_like(u), np.zeros_like(u)

    x = 0.0
    for step in range(n_steps):
        k1 = rhs(x, u, up, q, qp)
        k2 = rhs(x + 0.5 * h, u + 0.5 * h * k1[0], up + 0.5 * h * k1[1],
                 q + 0.5 * h * k1[2], qp + 0.5 * h * k1[3])
        k3 = rhs(x + 0.5 * h, u + 0.5 * h * k2[0], up + 0.5 * h * k2[1],
                 q + 0.5 * h * k2[2], qp + 0.5 * h * k2[3])
        k4 = rhs(x + h, u + h * k3[0], up + h * k3[1], q + h * k3[2], qp + h * k3[3])
        u_new = u + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        up_new = up + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        q_new = q + (h / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        qp_new = qp + (h / 6.0) * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])

        crossings += ((u * u_new < 0.0) & (active > 0)).astype(int)
        active *= np.abs(u_new) < clamp
        u = np.clip(u_new, -clamp, clamp)
        up = np.clip(up_new, -clamp, clamp)
        q = np.clip(q_new, -clamp, clamp)
        qp = np.clip(qp_new, -clamp, clamp)
        x += h
        if record:
            xs[step + 1] = x
            us[step + 1] = u[0]
            qps[step + 1] = qp[0]

    if record:
        return crossings, (xs, us, qps)
    return crossings, None


def _bisect_eigenvalue(
    integrate: Callable[[np.ndarray], np.ndarray],
    k: int,
    lo: float,
    hi: float,
    stages: int = 8,
    batch: int = 33,
) -> tuple[float, float]:
    """Narrow [lo, hi] around the k-node eigenvalue by repeated batched scans."""

    def too_high(e: float) -> bool:
        return int(integrate(np.array([e]))[0]) > k

    span = max(hi - lo, 1.0)
    for _ in range(80):
        if not too_high(lo):
            break
        lo -= span
        span *= 2.0
    else:
        raise ConvergenceError("could not bracket the eigenvalue from below")
    span = max(hi - lo, 1.0)
    for _ in range(80):
        if too_high(hi):
            break
        hi += span
        span *= 2.0
    else:
        raise ConvergenceError("could not bracket the eigenvalue from above")

    for _ in range(stages):
        eps = np.linspace(lo, hi, batch)
        nodes = integrate(eps)
        above = nodes > k
        above[0] = False   # endpoints are certified brackets
        above[-1] = True
        idx = int(np.argmax(above))
        lo, hi = float(eps[idx - 1]), float(eps[idx])
    return lo, hi


def _shoot_state(
    x_out: np.ndarray,
    vfun: Callable[[float], float] | None,
    kappa_sign: float,
    k: int,
    h: float = 0.004,
) -> tuple[float, np.ndarray, float]:
    """Dimensionless eigenvalue and resampled profile for node count k."""
    has_kernel = kappa_sign != 0.0
    if has_kernel and vfun is None:
        x_max = 20.0 + 14.0 * k
    else:
        x_max = float(x_out[-1]) + (x_out[1] - x_out[0])
    n_steps = int(math.ceil(x_max / h))

    def solve_at_amplitude(alpha: float):
        def integrate(eps: np.ndarray) -> np.ndarray:
            counts, _ = _integrate_batch(eps, alpha, h, n_steps, kappa_sign, vfun)
            return counts

        v_floor = 0.0
        if vfun is not None:
            v_floor = min(float(vfun(x)) for x in np.linspace(h, x_max, 64))
        lo = min(0.0, 1.05 * v_floor)
        lo_hi = _bisect_eigenvalue(integrate, k, lo, max(1.0, abs(lo)))
        eps_star = 0.5 * (lo_hi[0] + lo_hi[1])
        _, recorded = _integrate_batch(
            np.array([lo_hi[0]]), alpha, h, n_steps, kappa_sign, vfun, record=True
        )
        xs, us, qps = recorded
        # walk back from the divergent end to the valley where decay turned around
        mag = np.abs(us)
        i_trunc = mag.size - 1
        while i_trunc > 1 and mag[i_trunc - 1] <= mag[i_trunc]:
            i_trunc -= 1
        if i_trunc <= 2 or mag[i_trunc] > 1e-2 * mag[:i_trunc].max():
            raise ConvergenceError("shooting solution has no decaying tail; extend x_max")
        xs, us = xs[: i_trunc + 1], us[: i_trunc + 1]
        norm = 4.0 * math.pi * float(np.trapezoid(us**2, xs))
        p_inf = kappa_sign * float(qps[i_trunc]) if has_kernel else 0.0
        eps_bound = eps_star - p_inf
        width = lo_hi[1] - lo_hi[0]
        return eps_bound, norm, xs, us, width

    if not has_kernel or vfun is None:
        eps_bound, norm, xs, us, width = solve_at_amplitude(1.0)
        if has_kernel:
            # scaling symmetry: unit norm via psi -> l^2 psi(l x), E -> l^2 E
            lam = 1.0 / norm
            eps_out = eps_bound / norm**2
            u_out = lam * np.interp(lam * x_out, xs, us, right=0.0)
        else:
            eps_out = eps_bound
            u_out = np.interp(x_out, xs, us, right=0.0)
    else:
        # kernel + external: adjust the launch amplitude until the norm is 1
        cache: dict[float, tuple] = {}

        def norm_defect(log_alpha: float) -> float:
            sol = solve_at_amplitude(math.exp(log_alpha))
            cache[log_alpha] = sol
            return math.log(sol[1])

        lo_a, hi_a = -2.0, 2.0
        flo, fhi = norm_defect(lo_a), norm_defect(hi_a)
        for _ in range(40):
            if flo < 0.0 < fhi or fhi < 0.0 < flo:
                break
            lo_a -= 1.0
            hi_a += 1.0
            flo, fhi = norm_defect(lo_a), norm_defect(hi_a)
        else:
            raise ConvergenceError("could not bracket unit norm in launch amplitude")
        root = brentq(norm_defect, lo_a, hi_a, xtol=1e-10)
        eps_bound, norm, xs, us, width = cache.get(root) or solve_at_amplitude(math.exp(root))
        eps_out = eps_bound
        u_out = np.interp(x_out, xs, us, right=0.0)

    dx = float(x_out[1] - x_out[0])
    u_out = u_out / math.sqrt(dx * float(np.dot(u_out, u_out)))
    # bracket width and eigenvalue in the same (integration) gauge; the ratio
    # is invariant under the norm rescaling
    residual = width / max(abs(eps_bound), 1e-300)
    return eps_out, u_out, residual


# ---------------------------------------------------------------------------
# Public driver
# ---------------------------------------------------------------------------


def stationary_states(
    mass: float,
    couplings: Sequence[KernelTerm],
    external_potential=None,
    n_states: int = 1,
    *,
    grid: RadialGrid,
    method: str = "scf",
    constants: PhysicalConstants = CODATA2018,
    tol: float = DEFAULT_TOL,
    max_iter: int = 500,
    damping: float = 0.5,
    validate_resolution: bool = True,
    validate_domain: bool = True,
) -> list[StationaryState]:
    """First ``n_states`` stationary states, ordered by node count 0..n_states-1.

    ``external_potential`` may be None, a callable V(r_meters) -> J, or an
    array sampled on the grid.  Each state is self-consistent with its own
    density (the kernel potential is rebuilt from the state it binds).
    """
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    if method not in ("scf", "shooting"):
        raise ValueError(f"unknown method {method!r}")
    couplings = tuple(couplings)
    kappa = sum(term.strength for term in couplings)
    if validate_resolution:
        validate_grid_resolution(grid, mass, couplings, constants)

    scales = _make_scales(mass, kappa, grid, constants)
    x = grid.r / scales.length
    dx = grid.spacing / scales.length
    if callable(external_potential) or external_potential is None:
        vext_grid = _external_on_grid(external_potential, grid.r, 1.0)
        if vext_grid is not None:
            vext_grid = vext_grid / scales.energy
    else:
        vext_grid = _external_on_grid(external_potential, grid.r, scales.energy)

    if callable(external_potential):
        vfun = lambda xx: float(external_potential(xx * scales.length)) / scales.energy
    elif external_potential is None:
        vfun = None
    else:
        varr = vext_grid

        def vfun(xx: float) -> float:
            return float(np.interp(xx, x, varr))

    states: list[StationaryState] = []
    for k in range(n_states):
        if method == "scf":
            eps, u, residual, _ = _scf_state(
                x, dx, vext_grid, scales.kappa_sign, k, tol, max_iter, damping
            )
        else:
            eps, u, residual = _shoot_state(x, vfun, scales.kappa_sign, k)

        nodes = count_nodes(u)
        if nodes != k:
            raise ConvergenceError(
                f"state targeted {k} nodes but converged with {nodes}; refine the grid"
            )
        if validate_domain:
            validate_tail(grid, u / grid.r)

        psi = (u / math.sqrt(4.0 * math.pi * scales.length)) / grid.r
        ext_arr = None
        if vext_grid is not None:
            ext_arr = vext_grid * scales.energy
        wave = WaveState.normalized(grid, psi, mass, couplings, ext_arr)
        states.append(
            StationaryState(wave, eps * scales.energy, nodes, residual, method)
        )

    eigenvalues = [s.eigenvalue for s in states]
    if any(e2 <= e1 for e1, e2 in zip(eigenvalues, eigenvalues[1:])):
        raise ConvergenceError(f"eigenvalues not increasing with node count: {eigenvalues}")
    return states


def rayleigh_quotient(state: WaveState, constants: PhysicalConstants = CODATA2018) -> float:
    """<u|H[Phi[state]]|u> / <u|u> for the discrete radial Hamiltonian, in joules."""
    from .state import self_potential

    grid = state.grid
    if grid.kind != "radial":
        raise GridError("rayleigh_quotient expects a radial state")
    u = np.sqrt(4.0 * math.pi) * grid.r * state.psi
    dr = grid.spacing
    potential = self_potential(state)
    if state.external_potential is not None:
        potential = potential + state.external_potential
    kin_scale = constants.hbar**2 / (2.0 * state.mass * dr**2)
    edges = np.concatenate(([u[0]], np.diff(u), [-u[-1]]))
    kinetic = kin_scale * float(np.sum(np.abs(edges) ** 2))
    pot = float(np.sum(potential * np.abs(u) ** 2))
    norm = float(np.sum(np.abs(u) ** 2))
    return (kinetic + pot) / norm
