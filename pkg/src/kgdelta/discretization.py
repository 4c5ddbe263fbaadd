"""Uniform grids, discrete fields, delta-aware discrete operators and the
discrete versions of the energy, charge, norms and Poisson bracket.

The delta potential sits on the node x = 0 as a point mass of weight 1/h.
All spatial integrals are trapezoid sums; with Dirichlet data at +-L this
is ``h * sum`` over interior nodes.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import model
from .exceptions import BadGrid, MuTooSmall, SingularSystem, SolverFailed

__all__ = [
    "Grid",
    "DiscreteField",
    "DiscreteOperator",
    "Generator",
    "make_grid",
    "grid_for",
    "sample_standing_wave",
    "discrete_energy",
    "discrete_charge",
    "mu0",
    "weighted_norm",
    "h_inner",
    "h_norm",
    "orbital_distance",
    "one_sided_jump",
    "pointwise_second_derivative",
    "stationarity_residual",
    "poisson_bracket_EQ",
    "discrete_profile",
    "build_L_plus",
    "build_L_minus",
    "build_generator",
    "resolvent_apply",
    "growth_bound_estimate",
]


@dataclass(frozen=True)
class Grid:
    """Nodes x_j = -L + j h, j = 0..N; node N/2 is exactly x = 0.

    Fields live on the N - 1 interior nodes (Dirichlet zero at +-L).
    """

    L: float
    N: int

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 4 and self.N % 2 == 0):
            raise BadGrid(f"N must be an even integer >= 4, got {self.N!r}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise BadGrid(f"L must be positive, got {self.L!r}")

    @property
    def h(self):
        return 2.0 * self.L / self.N

    @property
    def nodes(self):
        x = -self.L + self.h * np.arange(self.N + 1)
        x[self.N // 2] = 0.0
        return x

    @property
    def x(self):
        """Interior nodes."""
        return self.nodes[1:-1]

    @property
    def n(self):
        return self.N - 1

    @property
    def center(self):
        """Index of x = 0 among the interior nodes."""
        return self.N // 2 - 1


def make_grid(L, N):
    return Grid(float(L), int(N) if float(N).is_integer() else N)


def grid_for(spec, h=0.01, decay_lengths=30.0):
    """Grid with L = decay_lengths / kappa and spacing close to ``h``."""
    L = decay_lengths / spec.kappa
    N = 2 * max(2, int(math.ceil(L / h)))
    return Grid(L, N)


@dataclass(eq=False)
class DiscreteField:
    """Complex samples (u, v) of a pair in H^1 x L^2 on the interior nodes."""

    u: np.ndarray
    v: np.ndarray
    grid: Grid

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=complex)
        self.v = np.asarray(self.v, dtype=complex)
        n = self.grid.n
        if self.u.shape != (n,) or self.v.shape != (n,):
            raise ValueError(f"field arrays must have shape ({n},)")

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.n), np.zeros(grid.n), grid)

    def copy(self):
        return DiscreteField(self.u.copy(), self.v.copy(), self.grid)

    def scaled(self, c):
        return DiscreteField(c * self.u, c * self.v, self.grid)

    def __add__(self, other):
        return DiscreteField(self.u + other.u, self.v + other.v, self.grid)

    def __sub__(self, other):
        return DiscreteField(self.u - other.u, self.v - other.v, self.grid)

    def stacked(self):
        return np.concatenate([self.u, self.v])

    @classmethod
    def from_stacked(cls, w, grid):
        n = grid.n
        return cls(w[:n], w[n:], grid)

    @property
    def u0(self):
        return self.u[self.grid.center]

    @property
    def v0(self):
        return self.v[self.grid.center]


def sample_standing_wave(grid, spec):
    """Phi_omega = (phi, i omega phi) on the grid."""
    ph = model.phi(spec, grid.x)
    return DiscreteField(ph, 1j * spec.omega * ph, grid)


def _forward_diffs(u):
    padded = np.concatenate([[0.0], u, [0.0]])
    return np.diff(padded)


def _dirichlet_form(u, w, h):
    # sum over cells of du * conj(dw) / h, i.e. <u', w'> with Dirichlet ends
    return np.sum(_forward_diffs(u) * np.conj(_forward_diffs(w))) / h


def discrete_energy(field, params):
    h = field.grid.h
    u, v = field.u, field.v
    au2 = np.abs(u) ** 2
    grad = _dirichlet_form(u, u, h).real
    return float(
        0.5 * grad
        + 0.5 * params.m ** 2 * h * au2.sum()
        + 0.5 * h * np.sum(np.abs(v) ** 2)
        + 0.5 * params.gamma * abs(field.u0) ** 2
        - h * np.sum(au2 ** ((params.p + 1) / 2)) / (params.p + 1)
    )


def discrete_charge(field, params):
    h = field.grid.h
    return float(h * np.sum(field.u * np.conj(field.v)).imag - 0.5 * params.alpha * abs(field.u0) ** 2)


def mu0(gamma):
    """Smallest admissible weight: 0 for gamma >= 0, |gamma|/2 otherwise."""
    return 0.0 if gamma >= 0 else 0.5 * abs(gamma)


def _weighted_inner(U, W, mu, gamma):
    h = U.grid.h
    return (
        _dirichlet_form(U.u, W.u, h)
        + mu ** 2 * h * np.sum(U.u * np.conj(W.u))
        + gamma * U.u0 * np.conj(W.u0)
        + h * np.sum(U.v * np.conj(W.v))
    )


def weighted_norm(field, mu, gamma):
    """sqrt(||u'||^2 + mu^2 ||u||^2 + gamma |u(0)|^2 + ||v||^2)."""
    if not mu > mu0(gamma):
        raise MuTooSmall(f"mu={mu} must exceed mu0={mu0(gamma)} for gamma={gamma}")
    return math.sqrt(max(_weighted_inner(field, field, mu, gamma).real, 0.0))


def h_inner(U, W):
    """Complex pairing whose real part is the H^1 x L^2 inner product."""
    return complex(_weighted_inner(U, W, 1.0, 0.0))


def h_norm(U):
    return math.sqrt(max(h_inner(U, U).real, 0.0))


def orbital_distance(U, Phi):
    """(min over theta of ||U - e^{i theta} Phi||, minimizing theta)."""
    c = h_inner(U, Phi)
    d2 = h_inner(U, U).real + h_inner(Phi, Phi).real - 2.0 * abs(c)
    return math.sqrt(max(d2, 0.0)), math.atan2(c.imag, c.real)


def one_sided_jump(u, grid):
    """u'(0+) - u'(0-) from second-order one-sided differences."""
    c, h = grid.center, grid.h
    right = (-3 * u[c] + 4 * u[c + 1] - u[c + 2]) / (2 * h)
    left = (3 * u[c] - 4 * u[c - 1] + u[c - 2]) / (2 * h)
    return right - left


def pointwise_second_derivative(u, grid):
    """u'' away from x = 0; at the origin the mean of the one-sided values,
    so a derivative kink there does not register."""
    h, c = grid.h, grid.center
    padded = np.concatenate([[0.0], u, [0.0]])
    d2 = (padded[:-2] - 2 * padded[1:-1] + padded[2:]) / h ** 2
    right = (2 * u[c] - 5 * u[c + 1] + 4 * u[c + 2] - u[c + 3]) / h ** 2
    left = (2 * u[c] - 5 * u[c - 1] + 4 * u[c - 2] - u[c - 3]) / h ** 2
    d2[c] = 0.5 * (right + left)
    return d2


def _laplacian_banded(grid, shift):
    # banded storage of (-Delta_h + shift) for scipy.linalg.solve_banded
    n, h = grid.n, grid.h
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0 / h ** 2
    ab[1, :] = 2.0 / h ** 2 + shift
    ab[2, :-1] = -1.0 / h ** 2
    return ab


def _dual_norm_sq(r, grid):
    # ||r||^2 in the discrete H^{-1}: h r^H (1 - Delta_h)^{-1} r
    y = linalg.solve_banded((1, 1), _laplacian_banded(grid, 1.0), r)
    return float(grid.h * np.real(np.vdot(r, y)))


def stationarity_residual(grid, spec, field=None):
    """Dual norm of E'(U) + omega Q'(U), at the sampled standing wave by default.

    The interface contributes (beta u(0) - [u']) / h at the origin node, where
    [u'] is the one-sided derivative jump.
    """
    params = spec.params
    U = sample_standing_wave(grid, spec) if field is None else field
    u, v, w = U.u, U.v, spec.omega
    r_u = (
        -pointwise_second_derivative(u, grid)
        + params.m ** 2 * u
        - np.abs(u) ** (params.p - 1) * u
        + 1j * w * v
    )
    r_u[grid.center] += (spec.beta * U.u0 - one_sided_jump(u, grid)) / grid.h
    r_v = v - 1j * w * u
    return math.sqrt(_dual_norm_sq(r_u, grid) + grid.h * float(np.sum(np.abs(r_v) ** 2)))


def poisson_bracket_EQ(field, params):
    """Discrete {E, Q}(u, v) = <E'(u, v), -i (u, v)>.

    E' is taken in the form valid on the generator domain, with the delta
    term -i alpha v(0) at the origin node, so the value measures how well
    the field satisfies the jump condition.
    """
    grid = field.grid
    u, v = field.u, field.v
    e_u = -pointwise_second_derivative(u, grid) + params.m ** 2 * u - np.abs(u) ** (params.p - 1) * u
    e_u[grid.center] += -1j * params.alpha * field.v0 / grid.h
    pair = np.sum(e_u * np.conj(-1j * u)) + np.sum(v * np.conj(-1j * v))
    return float(grid.h * pair.real)


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Symmetric tridiagonal matrix diag/off with an optional diagonal mass.

    ``weights`` (default all ones) turns the eigenproblem into A x = lam W x,
    used for the half-line restriction.
    """

    diag: np.ndarray
    off: np.ndarray
    kind: str
    grid: Grid
    weights: np.ndarray = field(default=None)

    @property
    def n(self):
        return self.diag.size

    def matvec(self, x):
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y

    def to_dense(self):
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def mass(self):
        return np.ones(self.n) if self.weights is None else self.weights


def discrete_profile(grid, spec, tol=1e-10, max_iter=50):
    """Even solution of the discrete stationary equation near the sampled profile.

    Newton's method on (-Delta_h + kappa^2 + (beta/h) e0 e0^T) phi - phi^p = 0,
    whose Jacobian is the discrete L+. Iterates are symmetrized, which keeps
    the near-kernel odd direction out of the update when beta = 0. On this
    profile the discrete L- annihilates phi to roundoff.
    """
    p, h, c = spec.params.p, grid.h, grid.center
    ph = model.phi(spec, grid.x).copy()
    ab = _laplacian_banded(grid, spec.kappa_sq)
    for _ in range(max_iter):
        res = -np.abs(ph) ** (p - 1) * ph + ab[1] * ph
        res[:-1] += ab[0, 1:] * ph[1:]
        res[1:] += ab[2, :-1] * ph[:-1]
        res[c] += spec.beta / h * ph[c]
        jac = ab.copy()
        jac[1] -= p * np.abs(ph) ** (p - 1)
        jac[1, c] += spec.beta / h
        step = linalg.solve_banded((1, 1), jac, res)
        step = 0.5 * (step + step[::-1])
        ph -= step
        if np.max(np.abs(step)) <= tol * np.max(np.abs(ph)):
            return ph
    raise SolverFailed(f"discrete profile Newton did not converge in {max_iter} steps")


def _profile_values(grid, spec, profile):
    if isinstance(profile, str):
        if profile == "sampled":
            return model.phi(spec, grid.x)
        if profile == "discrete":
            return discrete_profile(grid, spec)
        raise ValueError(f"profile must be 'sampled', 'discrete' or an array, got {profile!r}")
    values = np.asarray(profile, dtype=float)
    if values.shape != (grid.n,):
        raise ValueError(f"profile array must have shape ({grid.n},)")
    return values


def _build_lpm(grid, spec, coeff, kind, profile):
    h = grid.h
    pot = spec.kappa_sq - coeff * np.abs(_profile_values(grid, spec, profile)) ** (spec.params.p - 1)
    diag = 2.0 / h ** 2 + pot
    diag[grid.center] += spec.beta / h
    off = np.full(grid.n - 1, -1.0 / h ** 2)
    return DiscreteOperator(diag, off, kind, grid)


def build_L_plus(grid, spec, profile="sampled"):
    """-d^2 + (m^2 - omega^2) - p phi^{p-1} + beta delta.

    ``profile`` selects phi: the sampled closed form, the Newton-refined
    ``"discrete"`` profile, or an explicit array.
    """
    return _build_lpm(grid, spec, spec.params.p, "L+", profile)


def build_L_minus(grid, spec, profile="sampled"):
    """-d^2 + (m^2 - omega^2) - phi^{p-1} + beta delta."""
    return _build_lpm(grid, spec, 1.0, "L-", profile)


class Generator:
    """Discrete linear generator (u, v) -> (v, K u - i D v).

    K = Delta_h - m^2 - (gamma/h) e0 e0^T and D = (alpha/h) e0 e0^T, where
    e0 is the origin node.
    """

    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        h = grid.h
        n = grid.n
        self.k_diag = np.full(n, -2.0 / h ** 2 - params.m ** 2)
        self.k_diag[grid.center] -= params.gamma / h
        self.k_off = np.full(n - 1, 1.0 / h ** 2)
        self.d_center = params.alpha / h

    def apply_k(self, u):
        y = self.k_diag * u
        y[:-1] += self.k_off * u[1:]
        y[1:] += self.k_off * u[:-1]
        return y

    def __call__(self, U):
        c = self.grid.center
        w = self.apply_k(U.u)
        w[c] -= 1j * self.d_center * U.v[c]
        return DiscreteField(U.v.copy(), w, self.grid)

    def k_dense(self):
        return np.diag(self.k_diag) + np.diag(self.k_off, 1) + np.diag(self.k_off, -1)

    def to_dense(self):
        n, c = self.grid.n, self.grid.center
        A = np.zeros((2 * n, 2 * n), dtype=complex)
        A[:n, n:] = np.eye(n)
        A[n:, :n] = self.k_dense()
        A[n + c, n + c] = -1j * self.d_center
        return A


def build_generator(grid, params):
    return Generator(grid, params)


def resolvent_apply(grid, params, lam, rhs):
    """Solve (A_h - lam) U = rhs by eliminating v = lam u + f.

    The remaining equation (K - lam^2 - i lam D) u = g + (lam + i D) f is one
    complex tridiagonal solve.
    """
    gen = Generator(grid, params)
    c = grid.center
    f, g = rhs.u, rhs.v
    n = grid.n
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = gen.k_off
    ab[1, :] = gen.k_diag - lam ** 2
    ab[1, c] -= 1j * lam * gen.d_center
    ab[2, :-1] = gen.k_off
    b = g + lam * f
    b = b.astype(complex)
    b[c] += 1j * gen.d_center * f[c]
    try:
        u = linalg.solve_banded((1, 1), ab, b, check_finite=True)
    except linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(u)):
        raise SingularSystem("non-finite solution of the resolvent system")
    return DiscreteField(u, lam * u + f, grid)


def growth_bound_estimate(grid, params, mu):
    """Discrete dissipativity constant: |<A U, U>_{mu,gamma}| <= beta ||U||^2_{mu,gamma}.

    Uses the exact identity <A U, U> = (mu^2 - m^2) <v, u> and the smallest
    eigenvalue of the u-part of the weighted form.
    """
    if not mu > mu0(params.gamma):
        raise MuTooSmall(f"mu={mu} must exceed mu0={mu0(params.gamma)}")
    h = grid.h
    diag = np.full(grid.n, 2.0 / h ** 2 + mu ** 2)
    diag[grid.center] += params.gamma / h
    off = np.full(grid.n - 1, -1.0 / h ** 2)
    lam_min = linalg.eigh_tridiagonal(diag, off, select="i", select_range=(0, 0), eigvals_only=True)[0]
    coercivity = min(1.0, float(lam_min))
    return max(0.0, 0.5 * (mu ** 2 - params.m ** 2)) / coercivity
