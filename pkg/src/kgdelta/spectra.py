"""Spectral counts for the linearization around a standing wave.

Everything here works on symmetric tridiagonal operators through Sturm
sequences: eigenvalue counts below a shift, bisection for the lowest
eigenvalues, kernel detection and the even-subspace count. The scalar map
Lambda(lam) = lam + lam omega^2 / (1 - lam) connects the full block
linearization to the two scalar blocks L+ and L-.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import discretization as disc
from . import model
from .exceptions import PoleAtOne

__all__ = [
    "Branch",
    "SpectrumReport",
    "KernelDiagnostics",
    "BlockCheck",
    "inertia_count",
    "inertia_counts",
    "eig_bisect",
    "eigenvector",
    "zero_tol",
    "negative_shift",
    "spectrum_report",
    "count_negative_Lpm",
    "count_negative_radial",
    "radial_operator",
    "kernel_check",
    "lambda_map",
    "lambda_inverse",
    "ess_spectrum_edges",
    "assemble_block_operator",
    "full_block_counts",
    "block_reduction_check",
]

log = logging.getLogger(__name__)

_BISECT_TOL = 1e-10
_SHIFTS_PER_PASS = 64


def inertia_counts(op, shifts):
    """Number of eigenvalues of ``op`` below each entry of ``shifts``.

    Sturm sequence of LDL^T pivots of A - s W, vectorized across shifts.
    A zero pivot is nudged to a tiny negative value and logged.
    """
    s = np.atleast_1d(np.asarray(shifts, dtype=float))
    a, w = op.diag, op.mass()
    off2 = op.off ** 2
    pivmin = 1e-13 * max(1.0, float(np.max(np.abs(a))))
    counts = np.zeros(s.shape, dtype=np.int64)
    d = a[0] - s * w[0]
    for k in range(op.n):
        if k:
            d = a[k] - s * w[k] - off2[k - 1] / d
        zero = d == 0.0
        if zero.any():
            log.debug("zero Sturm pivot at row %d; perturbed by %g", k, pivmin)
            d = np.where(zero, -pivmin, d)
        counts += d < 0.0
    return counts


def inertia_count(op, shift):
    """Number of eigenvalues of ``op`` strictly below ``shift``."""
    return int(inertia_counts(op, [shift])[0])


def _gershgorin(op):
    a, w = op.diag, op.mass()
    r = np.zeros(op.n)
    r[:-1] += np.abs(op.off)
    r[1:] += np.abs(op.off)
    lo = float(np.min((a - r) / w))
    hi = float(np.max((a + r) / w))
    return lo - 1.0, hi + 1.0


def eig_bisect(op, k, tol=_BISECT_TOL):
    """The ``k`` smallest eigenvalues, located by Sturm multisection.

    Each pass evaluates a batch of trial shifts inside every unresolved
    bracket and keeps the sub-bracket that holds the wanted index.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    k = min(int(k), op.n)
    lo0, hi0 = _gershgorin(op)
    lo = np.full(k, lo0)
    hi = np.full(k, hi0)
    idx = np.arange(k)
    while True:
        width = np.maximum(tol, 8 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi)))
        active = np.flatnonzero(hi - lo > width)
        if active.size == 0:
            break
        per = max(1, _SHIFTS_PER_PASS // active.size)
        frac = np.arange(1, per + 1) / (per + 1)
        trial = lo[active, None] + (hi - lo)[active, None] * frac[None, :]
        counts = inertia_counts(op, trial.ravel()).reshape(trial.shape)
        for row, i in enumerate(active):
            above = counts[row] > idx[i]
            j = int(np.argmax(above)) if above.any() else per
            if j < per:
                hi[i] = trial[row, j]
            if j > 0:
                lo[i] = trial[row, j - 1]
    return 0.5 * (lo + hi)


def eigenvector(op, eigenvalue, iterations=3):
    """Unit eigenvector by inverse iteration at a converged eigenvalue."""
    n = op.n
    ab = np.zeros((3, n))
    ab[0, 1:] = op.off
    ab[2, :-1] = op.off
    ab[1] = op.diag - eigenvalue * op.mass()
    ab[1] += 1e-14 * max(1.0, abs(eigenvalue))
    x = np.random.default_rng(12345).standard_normal(n)
    for _ in range(iterations):
        x = linalg.solve_banded((1, 1), ab, op.mass() * x, check_finite=False)
        x /= np.linalg.norm(x)
    return x


def zero_tol(grid, spec):
    """Threshold separating a kernel eigenvalue from a genuine one.

    Truncation error of the domain plus roundoff in the 1/h^2 stencil.
    """
    return 50.0 * math.exp(-spec.kappa * grid.L) + 10.0 / grid.h ** 2 * 1e-14


def negative_shift(grid):
    """Shift below which an eigenvalue counts as negative."""
    return -1e-8 * 2.0 / grid.h ** 2


@dataclass
class SpectrumReport:
    eigenvalues_below: np.ndarray
    negative_count: int
    zero_modes: list = field(default_factory=list)
    ess_edge: float = float("nan")


def spectrum_report(op, spec, cutoff, tol=None):
    """Eigenvalues of ``op`` below ``cutoff`` together with kernel modes."""
    tol = zero_tol(op.grid, spec) if tol is None else tol
    below = inertia_count(op, cutoff)
    eigs = eig_bisect(op, below) if below else np.empty(0)
    zero_modes = [(float(e), eigenvector(op, e)) for e in eigs if abs(e) < tol]
    return SpectrumReport(
        eigenvalues_below=eigs,
        negative_count=int(np.sum(eigs < -tol)),
        zero_modes=zero_modes,
        ess_edge=spec.kappa_sq,
    )


def _profile(grid, spec, profile):
    if isinstance(profile, str) and profile == "discrete":
        return disc.discrete_profile(grid, spec)
    return profile


def count_negative_Lpm(grid, spec, profile="discrete"):
    """(n(L+), n(L-)) counted below the shift from :func:`negative_shift`."""
    ph = _profile(grid, spec, profile)
    s = negative_shift(grid)
    return (
        inertia_count(disc.build_L_plus(grid, spec, ph), s),
        inertia_count(disc.build_L_minus(grid, spec, ph), s),
    )


def radial_operator(grid, spec, profile="discrete"):
    """L+ restricted to even functions, on the nodes 0, h, ..., L - h.

    Evenness gives u_{-1} = u_1, so the origin row reads
    (2 u_0 - 2 u_1)/h^2 + (V_0 + beta/h) u_0. Halving that row keeps the
    matrix symmetric at the price of a mass weight 1/2 on the origin.
    """
    full = disc.build_L_plus(grid, spec, _profile(grid, spec, profile))
    c = grid.center
    diag = full.diag[c:].copy()
    diag[0] *= 0.5
    weights = np.ones(diag.size)
    weights[0] = 0.5
    return disc.DiscreteOperator(diag, full.off[c:].copy(), "L+ even", grid, weights)


def count_negative_radial(grid, spec, profile="discrete"):
    return inertia_count(radial_operator(grid, spec, profile), negative_shift(grid))


@dataclass
class KernelDiagnostics:
    zero_tol: float
    lminus_eigenvalue: float
    lminus_correlation: float
    lplus_eigenvalue: float
    lplus_correlation: float = None

    @property
    def ok(self):
        good_minus = abs(self.lminus_eigenvalue) < self.zero_tol and self.lminus_correlation > 1 - 1e-6
        if self.lplus_correlation is None:
            return good_minus and abs(self.lplus_eigenvalue) > 10 * self.zero_tol
        return good_minus and abs(self.lplus_eigenvalue) < self.zero_tol and self.lplus_correlation > 1 - 1e-6


def _smallest_abs(op):
    below = inertia_count(op, 0.0)
    eigs = eig_bisect(op, below + 1)
    cands = eigs[max(0, below - 1):]
    return float(cands[np.argmin(np.abs(cands))])


def _correlation(a, b):
    return float(abs(np.dot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))


def kernel_check(grid, spec, profile="discrete"):
    """Kernel of L- against phi and, when beta = 0, of L+ against phi'."""
    ph = _profile(grid, spec, profile)
    lm = disc.build_L_minus(grid, spec, ph)
    lp = disc.build_L_plus(grid, spec, ph)
    em = _smallest_abs(lm)
    ep = _smallest_abs(lp)
    diag = KernelDiagnostics(
        zero_tol=zero_tol(grid, spec),
        lminus_eigenvalue=em,
        lminus_correlation=_correlation(eigenvector(lm, em), model.phi(spec, grid.x)),
        lplus_eigenvalue=ep,
    )
    if spec.beta == 0.0:
        diag.lplus_correlation = _correlation(eigenvector(lp, ep), model.phi_prime(spec, grid.x))
    return diag


class Branch(str, enum.Enum):
    Minus = "Minus"
    Plus = "Plus"


def lambda_map(lam, omega):
    """Lambda(lam) = lam + lam omega^2 / (1 - lam)."""
    if lam == 1:
        raise PoleAtOne("Lambda has a pole at lam = 1")
    return lam + lam * omega ** 2 / (1.0 - lam)


def lambda_inverse(mu, omega, branch):
    """Root of lam^2 - (1 + omega^2 + mu) lam + mu = 0 on the chosen branch.

    Minus is the smaller root (below 1), Plus the larger (above 1).
    """
    b = 1.0 + omega ** 2 + mu
    # b^2 - 4 mu rewritten as a sum of squares: never negative, zero only at
    # omega = 0, mu = 1 (double root 1)
    disc_ = (mu - 1.0 + omega ** 2) ** 2 + 4.0 * omega ** 2
    q = 0.5 * (b + math.copysign(math.sqrt(disc_), b))
    r1, r2 = sorted((q, mu / q)) if q != 0.0 else (0.0, 0.0)
    return r1 if Branch(branch) is Branch.Minus else r2


def ess_spectrum_edges(spec):
    """(sigma1, 1, sigma2): the block operator's essential spectrum is
    [sigma1, 1] joined with [sigma2, inf)."""
    mu = spec.kappa_sq
    return (
        lambda_inverse(mu, spec.omega, Branch.Minus),
        1.0,
        lambda_inverse(mu, spec.omega, Branch.Plus),
    )


def assemble_block_operator(grid, spec, profile="discrete"):
    """Dense real operator on quadruplets (u1, u2, v1, v2).

    Blocks: [[L+ + w^2, 0, 0, -w], [0, L- + w^2, w, 0], [0, w, 1, 0], [-w, 0, 0, 1]].
    """
    ph = _profile(grid, spec, profile)
    n, w = grid.n, spec.omega
    eye = np.eye(n)
    lp = disc.build_L_plus(grid, spec, ph).to_dense()
    lm = disc.build_L_minus(grid, spec, ph).to_dense()
    z = np.zeros((n, n))
    return np.block(
        [
            [lp + w * w * eye, z, z, -w * eye],
            [z, lm + w * w * eye, w * eye, z],
            [z, w * eye, eye, z],
            [-w * eye, z, z, eye],
        ]
    )


def full_block_counts(grid, spec, profile="discrete"):
    """n(L+) + n(L-), the negative count of the block linearization."""
    n_plus, n_minus = count_negative_Lpm(grid, spec, profile)
    return n_plus + n_minus


@dataclass
class BlockCheck:
    dense_negative_count: int
    n_plus: int
    n_minus: int
    negative_eigenvalues: np.ndarray
    max_mismatch: float

    @property
    def counts_agree(self):
        return self.dense_negative_count == self.n_plus + self.n_minus


def block_reduction_check(grid, spec, profile="discrete"):
    """Dense cross-check of the block reduction (intended for small grids).

    Counts negative eigenvalues of the assembled block operator and measures
    how far Lambda maps each of them from the spectra of L+ and L-.
    """
    ph = _profile(grid, spec, profile)
    shift = negative_shift(grid)
    block_eigs = linalg.eigvalsh(assemble_block_operator(grid, spec, ph))
    neg = block_eigs[block_eigs < shift]
    scalar = np.concatenate(
        [
            linalg.eigvalsh(disc.build_L_plus(grid, spec, ph).to_dense()),
            linalg.eigvalsh(disc.build_L_minus(grid, spec, ph).to_dense()),
        ]
    )
    mismatch = max((float(np.min(np.abs(scalar - lambda_map(lam, spec.omega)))) for lam in neg), default=0.0)
    n_plus, n_minus = count_negative_Lpm(grid, spec, ph)
    return BlockCheck(int(neg.size), n_plus, n_minus, neg, mismatch)
