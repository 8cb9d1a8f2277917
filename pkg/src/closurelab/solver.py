"""Time integration of closed coarse systems, full-system reference solves,
and the residual-based artificial-viscosity assembly.

Classic explicit RK4 throughout; RHS evaluations reduce deterministically
(fixed numpy summation order) so identity tests are bitwise stable per
configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .memory import (
    FiniteMemoryAux,
    History,
    MemoryModelConfig,
    assemble_linear_blocks,
    closure_rhs,
    dg_fine_field,
    exact_linear_memory,
)
from .meshproj import FOURIER, LEGENDRE, CoarseState
from .operators import (
    LinearOperator1D,
    SemiDiscreteProblem,
    coarse_masses,
    dg_rhs,
    galerkin_rhs,
    mass_weighted_rhs,
)

MAX_SNAPSHOTS = 10_000


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    scheme: str = "rk4"
    cfl: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.scheme != "rk4":
            raise ValueError("only the explicit rk4 scheme is implemented")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray            # (n_snap, n_elem, n_modes)
    integral: np.ndarray
    energy: np.ndarray
    aux: np.ndarray = None        # finite-memory auxiliary snapshots
    spectra: np.ndarray = None    # (n_snap, K+1) for Fourier runs
    completed: bool = True

    def final_state(self) -> CoarseState:
        return CoarseState(coeffs=self.states[-1], t=float(self.times[-1]))


def _check_cfl(problem: SemiDiscreteProblem, config: IntegratorConfig):
    if not problem.is_dg or not isinstance(problem.physics, LinearOperator1D):
        return
    c = abs(problem.physics.c)
    if c == 0 or config.cfl is None:
        return
    p = problem.split.coarse_degree
    limit = config.cfl * problem.mesh.h / (c * (2 * p + 1))
    if config.dt > limit * (1 + 1e-12):
        raise ValueError(
            f"dt={config.dt:g} violates the CFL guard {limit:g} "
            f"(cfl={config.cfl}, h={problem.mesh.h:g}, p={p})"
        )


def _diagnostics(problem, coeffs, masses):
    integral = float(coeffs[:, 0].sum() * masses[0])
    energy = 0.5 * float(np.sum(coeffs * coeffs * masses[: coeffs.shape[1]]))
    return integral, energy


def _spectrum(problem, coeffs):
    if problem.split.kind != FOURIER:
        return None
    k_max = (coeffs.shape[1] - 1) // 2
    e = np.empty(k_max + 1)
    e[0] = 0.5 * 2.0 * np.pi * coeffs[0, 0] ** 2
    for k in range(1, k_max + 1):
        e[k] = 0.5 * np.pi * (coeffs[0, 2 * k - 1] ** 2 + coeffs[0, 2 * k] ** 2)
    return e


def integrate(
    problem: SemiDiscreteProblem,
    initial: CoarseState,
    closure: MemoryModelConfig,
    config: IntegratorConfig,
) -> Trajectory:
    """Advance M da/dt = RHS + closure increment with explicit RK4.

    The finite-memory auxiliary state is co-integrated in the same stepper.
    The t-model's explicit time factor is anchored at the zero-fine-scale
    initial instant: initial.t is the absolute start time, config.t_end the
    duration of this call, and reported times are absolute, so restarted
    runs keep the original origin.
    """
    _check_cfl(problem, config)
    masses = coarse_masses(problem)
    coeffs = np.array(initial.coeffs, dtype=float)
    # restarts carry their original time origin: the t-model factor counts
    # from the zero-fine-scale initial instant, not from this call
    t_origin = float(getattr(initial, "t", 0.0))
    aux = FiniteMemoryAux.zeros_like(coeffs) if closure.kind == "fm" else None

    n_steps = int(round(config.t_end / config.dt))
    if abs(n_steps * config.dt - config.t_end) > 1e-9 * max(1.0, config.t_end):
        n_steps = int(np.ceil(config.t_end / config.dt))
    stride = max(1, int(np.ceil((n_steps + 1) / MAX_SNAPSHOTS)))

    def rhs(t, a, m_aux):
        base = mass_weighted_rhs(problem, a)
        state = CoarseState(coeffs=a, t=t)
        if closure.kind == "fm":
            inc, d_aux = closure_rhs(problem, state, closure, FiniteMemoryAux(m_aux), t)
            return (base + inc) / masses, d_aux
        inc, _ = closure_rhs(problem, state, closure, None, t)
        return (base + inc) / masses, None

    times, snaps, aux_snaps, integrals, energies, spectra = [], [], [], [], [], []

    def record(t, a, m_aux):
        times.append(t)
        snaps.append(a.copy())
        integral, energy = _diagnostics(problem, a, masses)
        integrals.append(integral)
        energies.append(energy)
        s = _spectrum(problem, a)
        if s is not None:
            spectra.append(s)
        if m_aux is not None:
            aux_snaps.append(m_aux.copy())

    aux_values = aux.values if aux is not None else None
    record(t_origin, coeffs, aux_values)
    completed = True
    t = t_origin
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, n_steps + 1):
            dt = config.dt
            k1, d1 = rhs(t, coeffs, aux_values)
            k2, d2 = rhs(t + 0.5 * dt, coeffs + 0.5 * dt * k1,
                         None if aux_values is None else aux_values + 0.5 * dt * d1)
            k3, d3 = rhs(t + 0.5 * dt, coeffs + 0.5 * dt * k2,
                         None if aux_values is None else aux_values + 0.5 * dt * d2)
            k4, d4 = rhs(t + dt, coeffs + dt * k3,
                         None if aux_values is None else aux_values + dt * d3)
            coeffs = coeffs + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if aux_values is not None:
                aux_values = aux_values + (dt / 6.0) * (d1 + 2 * d2 + 2 * d3 + d4)
            t = t_origin + step * dt
            if not np.all(np.isfinite(coeffs)):
                completed = False
                break
            if step % stride == 0 or step == n_steps:
                record(t, coeffs, aux_values)

    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(snaps),
        integral=np.asarray(integrals),
        energy=np.asarray(energies),
        aux=np.asarray(aux_snaps) if aux_snaps else None,
        spectra=np.asarray(spectra) if spectra else None,
        completed=completed,
    )


def full_reference_solve(
    problem: SemiDiscreteProblem,
    initial_full: np.ndarray,
    config: IntegratorConfig,
) -> Trajectory:
    """Integrate the full coupled coarse+fine system (all modes to N).

    Oracle for exact-memory and kernel-convergence tests; desk scale only.
    """
    coeffs = np.atleast_2d(np.array(initial_full, dtype=float))
    if coeffs.size > 10_000:
        raise ValueError("full reference solve is desk-scale (<= 1e4 unknowns)")
    space = problem.space()

    if problem.split.kind == LEGENDRE and not problem.mesh.periodic and not problem.is_dg:
        blocks = assemble_linear_blocks(problem)
        K, m, f = blocks.operator, blocks.masses, blocks.forcing

        def rhs(a):
            return (f - a @ K.T) / m

        masses = m
    elif problem.is_dg:
        def rhs(a):
            return dg_rhs(problem, a) / space.masses[: a.shape[1]]

        masses = space.masses[: coeffs.shape[1]]
    else:
        def rhs(a):
            return galerkin_rhs(problem, a) / space.masses[: a.shape[1]]

        masses = space.masses[: coeffs.shape[1]]

    n_steps = int(round(config.t_end / config.dt))
    stride = max(1, int(np.ceil((n_steps + 1) / MAX_SNAPSHOTS)))
    times, snaps, integrals, energies = [0.0], [coeffs.copy()], [], []
    integral, energy = _diagnostics(problem, coeffs, masses)
    integrals.append(integral)
    energies.append(energy)
    completed = True
    t = 0.0
    flat = coeffs.ndim == 2 and problem.split.kind == LEGENDRE and not problem.mesh.periodic and not problem.is_dg
    a = coeffs[0] if flat else coeffs
    for step in range(1, n_steps + 1):
        dt = config.dt
        k1 = rhs(a)
        k2 = rhs(a + 0.5 * dt * k1)
        k3 = rhs(a + 0.5 * dt * k2)
        k4 = rhs(a + dt * k3)
        a = a + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = step * dt
        if not np.all(np.isfinite(a)):
            completed = False
            break
        if step % stride == 0 or step == n_steps:
            times.append(t)
            a2 = np.atleast_2d(a)
            snaps.append(a2.copy())
            integral, energy = _diagnostics(problem, a2, masses)
            integrals.append(integral)
            energies.append(energy)

    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(snaps),
        integral=np.asarray(integrals),
        energy=np.asarray(energies),
        completed=completed,
    )


def integrate_exact_memory(
    problem: SemiDiscreteProblem,
    initial: CoarseState,
    config: IntegratorConfig,
    n_s: int,
) -> Trajectory:
    """Advance the closed coarse integro-differential equation for a linear
    problem, evaluating the convolution memory at every RK4 stage.

    History is dense storage of accepted steps with cubic interpolation;
    stage times just past the last accepted step use the spline's
    extrapolating end piece (error O(dt^4), below the stepper's own order).
    """
    blocks = assemble_linear_blocks(problem)
    fine_op = blocks.fine_fine()
    cs = blocks.coarse_slice()
    K_cc = blocks.operator[cs, cs]
    m_c = blocks.masses[cs]
    f_c = blocks.forcing[cs]

    history = History()
    a = np.array(initial.coeffs, dtype=float).ravel()
    history.append(0.0, a)

    def rhs(t_eval, y):
        # two passes: a first-order-split memory gives the coarse rate, which
        # then feeds the linear term of the split (avoids differentiating the
        # history spline at its extrapolating end)
        mem = exact_linear_memory(blocks, fine_op, history, t_eval, n_s, coarse_rate="skip")
        rate = (f_c - K_cc @ y + mem) / m_c
        mem = exact_linear_memory(blocks, fine_op, history, t_eval, n_s, coarse_rate=rate)
        return (f_c - K_cc @ y + mem) / m_c

    # the memory carries the fine block's initial transient (rate lam_max);
    # sub-step the boundary layer so the stepper resolves it
    lam_max = float(np.max(np.abs(fine_op.eigenvalues.real))) if fine_op.eigenvalues.size else 0.0
    n_sub = 1
    n_layer = 0
    if lam_max * config.dt > 0.25:
        n_sub = min(64, int(np.ceil(lam_max * config.dt / 0.25)))
        n_layer = min(
            int(round(config.t_end / config.dt)),
            int(np.ceil(8.0 / (lam_max * config.dt))) + 1,
        )

    n_steps = int(round(config.t_end / config.dt))
    schedule = []
    for step in range(n_steps):
        if step < n_layer:
            schedule.extend([config.dt / n_sub] * n_sub)
        else:
            schedule.append(config.dt)

    times, snaps = [0.0], [a.copy()]
    masses = m_c
    integrals = [float(a[0] * masses[0])]
    energies = [0.5 * float(np.sum(a * a * masses))]
    t = 0.0
    for dt in schedule:
        k1 = rhs(t, a)
        k2 = rhs(t + 0.5 * dt, a + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, a + 0.5 * dt * k2)
        k4 = rhs(t + dt, a + dt * k3)
        a = a + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        history.append(t, a)
        times.append(t)
        snaps.append(a.copy())
        integrals.append(float(a[0] * masses[0]))
        energies.append(0.5 * float(np.sum(a * a * masses)))

    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(snaps)[:, None, :],
        integral=np.asarray(integrals),
        energy=np.asarray(energies),
    )


def save_trajectory_csv(path, traj: Trajectory):
    """Columns t, element, mode, value."""
    with open(path, "w") as fh:
        fh.write("t,element,mode,value\n")
        for i, t in enumerate(traj.times):
            state = traj.states[i]
            for k in range(state.shape[0]):
                for j in range(state.shape[1]):
                    fh.write(f"{t:.17g},{k},{j},{state[k, j]:.17g}\n")


def load_trajectory_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    times = np.unique(data[:, 0])
    n_elem = int(data[:, 1].max()) + 1
    n_mode = int(data[:, 2].max()) + 1
    states = data[:, 3].reshape(times.size, n_elem, n_mode)
    return times, states


def save_diagnostics_csv(path, traj: Trajectory):
    """Columns t, integral, energy."""
    with open(path, "w") as fh:
        fh.write("t,integral,energy\n")
        for t, q, e in zip(traj.times, traj.integral, traj.energy):
            fh.write(f"{t:.17g},{q:.17g},{e:.17g}\n")


def save_spectrum_csv(path, traj: Trajectory):
    """Columns k, E(k) for the final recorded state of a Fourier run."""
    if traj.spectra is None:
        raise ValueError("spectrum output requires a Fourier-split trajectory")
    spec = traj.spectra[-1]
    with open(path, "w") as fh:
        fh.write("k,E\n")
        for k, e in enumerate(spec):
            fh.write(f"{k},{e:.17g}\n")


def artificial_viscosity_rhs(problem: SemiDiscreteProblem, state, tau: float) -> np.ndarray:
    """Closure increment assembled as a modified-flux DG right-hand side.

    The auxiliary field q is the fine projection of the flux divergence
    (volume and surface contributions); the increment is the difference
    between the DG RHS with fluxes F - tau F'(q), b - tau b'(q) and the base
    RHS. Equals tau times the instantaneous DG kernel by integration by
    parts, which is the equivalence the tests pin down.
    """
    if not problem.is_dg:
        raise ValueError("artificial viscosity assembly requires a DG split")
    if problem.forcing is not None:
        raise ValueError("conservation-law form: no forcing term")
    flux = problem.flux
    space = problem.space()
    coeffs = state.coeffs if isinstance(state, CoarseState) else np.atleast_2d(state)
    nc = problem.split.n_coarse
    physics = problem.physics

    q_modal, jumps = dg_fine_field(problem, coeffs, flux)
    q = space.from_modal(q_modal)
    u = coeffs @ space.V[:nc]

    # volume: (w_x, F(u) - tau F'(q)) minus the base (w_x, F(u))
    Fq = physics.flux_prime(u) * q
    W = space.Vd[:nc] * space.ref_weights
    volume_increment = -tau * (Fq @ W.T)

    # surface: -[w(1)(f* - tau A*)_R - w(-1)(f* - tau A*)_L] minus base
    q_left = q_modal @ space.end_minus
    q_right = q_modal @ space.end_plus
    astar_right = flux.linearized(
        physics, jumps.u_right, np.roll(jumps.u_left, -1),
        q_right, np.roll(q_left, -1),
    )
    astar_left = np.roll(astar_right, 1)
    surface_increment = tau * (
        astar_right[:, None] * space.end_plus[:nc]
        - astar_left[:, None] * space.end_minus[:nc]
    )
    return volume_increment + surface_increment
