"""Time integration of u_tt - u_xx + m^2 u + delta interface = |u|^{p-1} u.

The first-order system U' = A U + F(U), F(u, v) = (0, |u|^{p-1} u), is
advanced by Strang splitting: an exact half kick of the nonlinearity, a
Crank-Nicolson step of the linear generator, another half kick. A Duhamel
fixed point with the exact discrete propagator serves as an independent
oracle, and the spatially homogeneous blow-up solution supplies an ODE check.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from . import discretization as disc
from . import model
from . import spectra
from .exceptions import NoContraction, SolverFailed

__all__ = [
    "Termination",
    "Perturbation",
    "EvolveConfig",
    "TimeSeries",
    "ImexStepper",
    "step_imex",
    "evolve",
    "duhamel_oracle",
    "BlowupSeries",
    "blowup_ode",
    "blowup_initial_data",
    "StabilityReport",
    "stability_experiment",
]


class Termination(str, enum.Enum):
    Completed = "Completed"
    NormExploded = "NormExploded"
    SolverFailed = "SolverFailed"


class Perturbation(str, enum.Enum):
    Scale = "Scale"
    UnstableDirection = "UnstableDirection"


def _nonlinearity(u, p):
    return np.abs(u) ** (p - 1) * u


class ImexStepper:
    """Strang step with the Crank-Nicolson matrix factored once.

    Writing K = Delta_h - m^2 - (gamma/h) e0 e0^T and D = (alpha/h) e0 e0^T,
    the linear stage reduces to
    [I + i(dt/2) D - (dt^2/4) K] u+ = (dt/2) r2 + (I + i(dt/2) D) r1
    with r1 = u + (dt/2) v and r2 = v + (dt/2)(K u - i D v); then
    (I + i(dt/2) D) v+ = r2 + (dt/2) K u+.
    """

    def __init__(self, grid, params, dt, nonlinear=True):
        if not (dt > 0 and math.isfinite(dt)):
            raise ValueError(f"dt must be positive, got {dt!r}")
        self.grid, self.params, self.dt, self.nonlinear = grid, params, float(dt), nonlinear
        self.gen = disc.Generator(grid, params)
        c = grid.center
        q = 0.25 * self.dt ** 2
        diag = 1.0 - q * self.gen.k_diag.astype(complex)
        diag[c] += 0.5j * self.dt * self.gen.d_center
        off = -q * self.gen.k_off
        mat = sparse.diags([off, diag, off], [-1, 0, 1], format="csc")
        self._lu = splinalg.splu(mat)

    def linear(self, u, v):
        dt, c, dc = self.dt, self.grid.center, self.gen.d_center
        r1 = u + 0.5 * dt * v
        ku = self.gen.apply_k(u)
        ku[c] -= 1j * dc * v[c]
        r2 = v + 0.5 * dt * ku
        rhs = 0.5 * dt * r2 + r1
        rhs[c] += 0.5j * dt * dc * r1[c]
        u_new = self._lu.solve(rhs)
        # second CN row, free of the 1/dt cancellation in (2/dt)(u+ - r1)
        v_new = r2 + 0.5 * dt * self.gen.apply_k(u_new)
        v_new[c] /= 1.0 + 0.5j * dt * dc
        return u_new, v_new

    def __call__(self, state):
        u, v = state.u, state.v
        p, half = self.params.p, 0.5 * self.dt
        if self.nonlinear:
            v = v + half * _nonlinearity(u, p)
        u, v = self.linear(u, v)
        if self.nonlinear:
            v = v + half * _nonlinearity(u, p)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise SolverFailed("non-finite values after time step")
        return disc.DiscreteField(u, v, self.grid)


def step_imex(state, dt, params, nonlinear=True):
    """One Strang step. Builds a fresh factorization; use :class:`ImexStepper` in loops."""
    return ImexStepper(state.grid, params, dt, nonlinear)(state)


@dataclass
class EvolveConfig:
    dt: float
    t_end: float
    grid: disc.Grid
    blowup_threshold: float = 1e6
    monitor_stride: int = 1
    nonlinear: bool = True
    reference: disc.DiscreteField = None
    mu: float = None

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if self.monitor_stride < 1:
            raise ValueError("monitor_stride must be at least 1")


@dataclass
class TimeSeries:
    times: np.ndarray
    energy: np.ndarray
    charge: np.ndarray
    orbital_dist: np.ndarray
    h_norm: np.ndarray
    weighted_norm: np.ndarray
    terminated: Termination
    final_state: disc.DiscreteField = None
    mu: float = None

    def relative_drift(self, name):
        """max |X(t) - X(0)| / |X(0)| for the monitor ``name``."""
        x = getattr(self, name)
        scale = abs(x[0]) if x[0] != 0 else 1.0
        return float(np.max(np.abs(x - x[0])) / scale)


def _default_mu(params):
    floor = disc.mu0(params.gamma)
    return params.m if params.m > floor else floor + params.m


def evolve(U0, params, config):
    """Integrate from ``U0`` and sample the monitors every ``monitor_stride`` steps.

    Stops with ``NormExploded`` once the H^1 x L^2 norm passes
    ``blowup_threshold``. A solver failure is raised after nothing is lost:
    the exception carries the partial series as ``series``.
    """
    grid = config.grid
    mu = config.mu if config.mu is not None else _default_mu(params)
    stepper = ImexStepper(grid, params, config.dt, config.nonlinear)
    n_steps = int(round(config.t_end / config.dt))
    rows = []

    def record(t, U):
        dist = disc.orbital_distance(U, config.reference)[0] if config.reference is not None else float("nan")
        rows.append(
            (
                t,
                disc.discrete_energy(U, params),
                disc.discrete_charge(U, params),
                dist,
                disc.h_norm(U),
                disc.weighted_norm(U, mu, params.gamma),
            )
        )
        return rows[-1][4]

    def pack(status, U):
        arr = np.array(rows, dtype=float).reshape(-1, 6)
        return TimeSeries(*(arr[:, k] for k in range(6)), terminated=status, final_state=U, mu=mu)

    U = U0
    record(0.0, U)
    status = Termination.Completed
    for k in range(1, n_steps + 1):
        try:
            U = stepper(U)
        except SolverFailed as exc:
            exc.series = pack(Termination.SolverFailed, U)
            raise
        if k % config.monitor_stride == 0 or k == n_steps:
            if record(k * config.dt, U) > config.blowup_threshold:
                status = Termination.NormExploded
                break
        elif disc.h_norm(U) > config.blowup_threshold:
            record(k * config.dt, U)
            status = Termination.NormExploded
            break
    return pack(status, U)


def duhamel_oracle(U0, params, T, grid=None, intervals=200, tol=1e-12, max_iter=50, nonlinear=True):
    """Fixed point of U(t) = e^{tA} U0 + int_0^t e^{(t-s)A} F(U(s)) ds at t = T.

    Uses the dense matrix exponential of the discrete generator and Simpson's
    rule on each of ``intervals`` subintervals; midpoint values come from the
    quadratic interpolant on the same three nodes. Picard iterates run until
    the sup-norm change drops below ``tol``.
    """
    grid = U0.grid if grid is None else grid
    if grid.N > 400:
        raise ValueError("duhamel_oracle assembles a dense generator; use N <= 400")
    n, p = grid.n, params.p
    tau = T / intervals
    A = disc.Generator(grid, params).to_dense()
    e_full = linalg.expm(tau * A)
    e_half = linalg.expm(0.5 * tau * A)
    e_back = linalg.expm(-0.5 * tau * A)
    w0 = U0.stacked()

    def forcing(ws):
        f = np.zeros_like(ws)
        f[..., n:] = _nonlinearity(ws[..., :n], p)
        return f

    nodes = np.empty((intervals + 1, 2 * n), dtype=complex)
    nodes[0] = w0
    for i in range(intervals):
        nodes[i + 1] = e_full @ nodes[i]
    mids = (e_half @ nodes[:-1].T).T
    if not nonlinear:
        return disc.DiscreteField.from_stacked(nodes[-1], grid)

    history = []
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(max_iter):
            f_nodes, f_mids = forcing(nodes), forcing(mids)
            new_nodes = np.empty_like(nodes)
            new_nodes[0] = w0
            half_terms = tau * (
                (5.0 / 24.0) * (e_half @ f_nodes[:-1].T).T
                + (8.0 / 24.0) * f_mids
                - (1.0 / 24.0) * (e_back @ f_nodes[1:].T).T
            )
            simpson = (tau / 6.0) * ((e_full @ f_nodes[:-1].T).T + 4.0 * (e_half @ f_mids.T).T + f_nodes[1:])
            for i in range(intervals):
                new_nodes[i + 1] = e_full @ new_nodes[i] + simpson[i]
            new_mids = (e_half @ new_nodes[:-1].T).T + half_terms
            change = float(max(np.max(np.abs(new_nodes - nodes)), np.max(np.abs(new_mids - mids))))
            history.append(change)
            nodes, mids = new_nodes, new_mids
            if not math.isfinite(change):
                break
            if change < tol:
                return disc.DiscreteField.from_stacked(nodes[-1], grid)
    raise NoContraction(f"Picard iterates did not settle below {tol} in {len(history)} steps", history)


@dataclass
class BlowupSeries:
    times: np.ndarray
    v_numeric: np.ndarray
    v_analytic: np.ndarray
    blowup_time: float

    @property
    def abs_err(self):
        return np.abs(self.v_numeric - self.v_analytic)


def blowup_ode(T_param, dt=1e-3, v_max=1e3):
    """RK4 for v'' + v - v^3 = 0 started on coth(T - t/sqrt 2).

    The step shrinks like dt / v so that the approach to the singularity at
    t = sqrt(2) T stays resolved; integration stops once v exceeds ``v_max``.
    """
    if not T_param > 0:
        raise ValueError("T_param must be positive")

    def rhs(y):
        return np.array([y[1], y[0] ** 3 - y[0]])

    y = np.array([1.0 / math.tanh(T_param), 1.0 / (math.sinh(T_param) ** 2 * math.sqrt(2.0))])
    t = 0.0
    times, vals = [t], [y[0]]
    while y[0] <= v_max:
        k = dt / max(1.0, abs(y[0]))
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * k * k1)
        k3 = rhs(y + 0.5 * k * k2)
        k4 = rhs(y + k * k3)
        y = y + (k / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += k
        if not np.all(np.isfinite(y)):
            break
        times.append(t)
        vals.append(y[0])
    times = np.array(times)
    arg = T_param - times / math.sqrt(2.0)
    with np.errstate(divide="ignore"):
        exact = np.where(arg > 0, 1.0 / np.tanh(np.maximum(arg, 1e-300)), np.inf)
    return BlowupSeries(times, np.array(vals), exact, float(times[-1]))


def blowup_initial_data(grid, T_param, center=None, taper=1.0):
    """Flat core of the homogeneous blow-up solution placed away from x = 0.

    The core has half-width sqrt(2) T + 1 so the centre is unaffected by the
    edges before the blow-up time; by default it sits at distance
    2 sqrt(2) T + 2 plus the core half-width, out of reach of the origin.
    """
    half = math.sqrt(2.0) * T_param + 1.0
    if center is None:
        center = 2.0 * math.sqrt(2.0) * T_param + 2.0 + half + taper
    x = grid.x
    dist = np.abs(x - center) - half
    s = np.clip(dist / taper, 0.0, 1.0)
    window = np.where(dist <= 0, 1.0, 0.5 * (1 + np.cos(np.pi * s)) * (s < 1))
    u = window / math.tanh(T_param)
    v = window / (math.sinh(T_param) ** 2 * math.sqrt(2.0))
    return disc.DiscreteField(u, v, grid), center


@dataclass
class StabilityReport:
    mode: Perturbation
    epsilon: float
    initial_distance: float
    max_distance: float
    final_distance: float
    growth_factor: float
    doubling_time: float = None
    series: TimeSeries = field(default=None, repr=False)


def stability_experiment(spec, epsilon, mode, config):
    """Perturb the sampled standing wave and track its distance to the orbit.

    ``Scale`` uses (1 + eps) Phi; ``UnstableDirection`` adds eps (psi, 0)
    with psi the unit-sup ground state of the discrete L+.
    """
    grid = config.grid
    Phi = disc.sample_standing_wave(grid, spec)
    mode = Perturbation(mode)
    if mode is Perturbation.Scale:
        U0 = Phi.scaled(1.0 + epsilon)
    else:
        lp = disc.build_L_plus(grid, spec)
        psi = spectra.eigenvector(lp, spectra.eig_bisect(lp, 1)[0])
        psi = psi / np.max(np.abs(psi))
        U0 = disc.DiscreteField(Phi.u + epsilon * psi, Phi.v.copy(), grid)
    cfg = EvolveConfig(
        dt=config.dt,
        t_end=config.t_end,
        grid=grid,
        blowup_threshold=config.blowup_threshold,
        monitor_stride=config.monitor_stride,
        nonlinear=config.nonlinear,
        reference=Phi,
        mu=config.mu,
    )
    series = evolve(U0, spec.params, cfg)
    d = series.orbital_dist
    d0 = float(d[0])
    growth = float(np.max(d) / d0) if d0 > 0 else float("nan")
    doubling = None
    if d0 > 0:
        hit = np.flatnonzero(d >= 2.0 * d0)
        if hit.size:
            doubling = float(series.times[hit[0]])
    return StabilityReport(mode, epsilon, d0, float(np.max(d)), float(d[-1]), growth, doubling, series)
