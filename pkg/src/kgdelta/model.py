"""Closed-form layer: parameters, admissibility, the explicit standing wave,
charge and slope formulas, stability thresholds and the classifier.

Everything here is a pure function of its arguments.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .exceptions import DomainError, NotAdmissible, StencilOutOfRange

__all__ = [
    "ModelParams",
    "WaveSpec",
    "Verdict",
    "SlopeSource",
    "StabilityVerdict",
    "validate_params",
    "admissible",
    "admissible_interval",
    "phi",
    "phi_prime",
    "charge",
    "charge_slope",
    "threshold_omega_tilde",
    "threshold_omega_alpha_pm",
    "gamma_tilde",
    "n_omega",
    "classify",
    "ADMISSIBILITY_MARGIN",
]

# relative to m**2; keeps atanh's argument strictly inside (-1, 1)
ADMISSIBILITY_MARGIN = 1e-14

SLOPE_TOL_CLOSED = 1e-9
SLOPE_TOL_QUADRATURE = 1e-6

_MAX_STEP = 1e-3
_MIN_STEP = 1e-7


@dataclass(frozen=True)
class ModelParams:
    m: float
    alpha: float
    gamma: float
    p: float

    def __post_init__(self):
        for name in ("m", "alpha", "gamma", "p"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(name, f"must be finite, got {v!r}")
        if not self.m > 0:
            raise DomainError("m", f"mass must be positive, got {self.m!r}")
        if not self.p > 1:
            raise DomainError("p", f"nonlinearity exponent must exceed 1, got {self.p!r}")

    def at(self, omega):
        """The :class:`WaveSpec` of these parameters at frequency ``omega``."""
        return WaveSpec(self, float(omega))


def validate_params(m, alpha, gamma, p):
    """Build :class:`ModelParams`, raising :class:`DomainError` on m <= 0 or p <= 1."""
    return ModelParams(float(m), float(alpha), float(gamma), float(p))


@dataclass(frozen=True)
class WaveSpec:
    params: ModelParams
    omega: float

    @property
    def beta(self):
        return self.params.gamma - self.params.alpha * self.omega

    @property
    def kappa_sq(self):
        return self.params.m ** 2 - self.omega ** 2

    @property
    def kappa(self):
        """Decay rate sqrt(m^2 - omega^2) of the profile."""
        return math.sqrt(self.kappa_sq) if self.kappa_sq > 0 else float("nan")

    @property
    def beta_max(self):
        """2 sqrt(m^2 - omega^2), or None when |omega| >= m."""
        return 2.0 * self.kappa if self.kappa_sq > 0 else None

    @property
    def gap(self):
        return self.kappa_sq - self.beta ** 2 / 4.0


def admissible(spec):
    """True iff m^2 - omega^2 > beta^2 / 4 (strictly, with a roundoff margin)."""
    return spec.gap > ADMISSIBILITY_MARGIN * spec.params.m ** 2


def admissible_interval(params):
    """Open interval (lo, hi) of admissible frequencies, or None if empty.

    The condition is a concave quadratic in omega, so the admissible set is
    a single interval.
    """
    a = 1.0 + params.alpha ** 2 / 4.0
    b = params.alpha * params.gamma / 2.0
    c = params.m ** 2 - params.gamma ** 2 / 4.0
    disc = b * b + 4.0 * a * c
    if disc <= 0:
        return None
    root = math.sqrt(disc)
    return (b - root) / (2.0 * a), (b + root) / (2.0 * a)


def _require(spec):
    if not admissible(spec):
        raise NotAdmissible(
            f"omega={spec.omega!r} violates m^2 - omega^2 > beta^2/4 "
            f"(m={spec.params.m}, beta={spec.beta})"
        )


def _shift(spec):
    # atanh(-beta / (2 kappa)), the offset of the sech argument
    return math.atanh(-spec.beta / (2.0 * spec.kappa))


def _log_sech(s):
    a = np.abs(s)
    return np.log(2.0) - a - np.log1p(np.exp(-2.0 * a))


def _scalar_or_array(x, out):
    return float(out) if np.ndim(x) == 0 else out


def phi(spec, x):
    """Standing-wave profile phi_omega(x); accepts scalars or arrays."""
    _require(spec)
    p, k = spec.params.p, spec.kappa
    xa = np.asarray(x, dtype=float)
    s = 0.5 * (p - 1.0) * k * np.abs(xa) + _shift(spec)
    amp = 0.5 * (p + 1.0) * spec.kappa_sq
    out = np.exp((math.log(amp) + 2.0 * _log_sech(s)) / (p - 1.0))
    return _scalar_or_array(x, out)


def phi_prime(spec, x, side="right"):
    """Derivative of the profile; ``side`` ("left"/"right") selects the one-sided
    value at x = 0, where the derivative jumps by beta * phi(0)."""
    _require(spec)
    side = str(side).lower()
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    p, k = spec.params.p, spec.kappa
    xa = np.asarray(x, dtype=float)
    sgn = np.sign(xa)
    sgn = np.where(sgn == 0, 1.0 if side == "right" else -1.0, sgn)
    s = 0.5 * (p - 1.0) * k * np.abs(xa) + _shift(spec)
    out = -np.asarray(phi(spec, xa)) * k * np.tanh(s) * sgn
    return _scalar_or_array(x, out)


def _charge_closed_p3(params, omega):
    m, a, g = params.m, params.alpha, params.gamma
    k = math.sqrt(m * m - omega * omega)
    beta = g - a * omega
    return -4.0 * omega * k - 2.0 * omega * beta - a * (m * m - omega * omega) + 0.25 * a * beta ** 2


def _charge_quadrature(spec):
    p, a = spec.params.p, spec.params.alpha
    k = spec.kappa
    scale = (0.5 * (p + 1.0) * spec.kappa_sq) ** (2.0 / (p - 1.0))
    tau = _shift(spec)
    integral = quadrature.sech_power_integral(4.0 / (p - 1.0), tau)
    norm_sq = scale * 4.0 / ((p - 1.0) * k) * integral
    phi0_sq = scale * (1.0 - spec.beta ** 2 / (4.0 * spec.kappa_sq)) ** (2.0 / (p - 1.0))
    return -spec.omega * norm_sq - 0.5 * a * phi0_sq


def charge(spec, method="auto"):
    """Charge Q(Phi_omega) = -omega ||phi||^2 - (alpha/2) phi(0)^2 of the standing wave.

    ``method`` is "closed" (p = 3 only), "quadrature", or "auto" (closed form
    when p == 3).
    """
    _require(spec)
    if method == "auto":
        method = "closed" if spec.params.p == 3 else "quadrature"
    if method == "closed":
        if spec.params.p != 3:
            raise DomainError("p", "closed-form charge needs p = 3")
        return _charge_closed_p3(spec.params, spec.omega)
    if method == "quadrature":
        return _charge_quadrature(spec)
    raise ValueError(f"unknown method {method!r}")


def _slope_closed_p3(params, omega):
    m, a, g = params.m, params.alpha, params.gamma
    k = math.sqrt(m * m - omega * omega)
    return 4.0 * omega ** 2 / k - 4.0 * k + (0.5 * a ** 3 + 6.0 * a) * omega - g * (2.0 + 0.5 * a * a)


def slope_step(spec):
    """Finite-difference step for the numeric slope at ``spec``.

    The full five-point stencil must stay within half the distance to the
    edge of the admissible interval.
    """
    lo, hi = admissible_interval(spec.params)
    dist = min(spec.omega - lo, hi - spec.omega)
    h = min(_MAX_STEP, dist / 4.0)
    if h < _MIN_STEP:
        raise StencilOutOfRange(
            f"omega={spec.omega!r} is within {dist:.3g} of the admissibility boundary"
        )
    return h


def charge_slope(spec, method="auto"):
    """d Q(Phi_omega) / d omega.

    "closed" uses the p = 3 formula; "numeric" differentiates the quadrature
    charge with a five-point stencil; "auto" picks closed when p == 3.
    """
    _require(spec)
    if method == "auto":
        method = "closed" if spec.params.p == 3 else "numeric"
    if method == "closed":
        if spec.params.p != 3:
            raise DomainError("p", "closed-form slope needs p = 3")
        return _slope_closed_p3(spec.params, spec.omega)
    if method == "numeric":
        h = slope_step(spec)
        params = spec.params
        return quadrature.central_diff(
            lambda w: _charge_quadrature(WaveSpec(params, w)), spec.omega, h
        )
    raise ValueError(f"unknown method {method!r}")


def threshold_omega_tilde(params):
    """Frequency where the p = 3, alpha = 0 slope changes sign."""
    if params.p != 3:
        raise DomainError("p", "threshold needs p = 3")
    if params.alpha != 0:
        raise DomainError("alpha", "threshold needs alpha = 0")
    m, g = params.m, params.gamma
    if not abs(g) < 2 * m:
        raise DomainError("gamma", "threshold needs |gamma| < 2m")
    return m * math.sqrt(0.5 + g / (math.sqrt(g * g + 32.0 * m * m) + g))


ALPHA_PM_LIMIT = 2.0 * math.sqrt(math.sqrt(5.0) - 2.0)


def threshold_omega_alpha_pm(params):
    """(omega_alpha^-, omega_alpha^+) for p = 3, gamma = 0.

    Note omega^+ < omega^-. For alpha < 0 the slope vanishes at -omega^+ and
    +omega^-; for alpha > 0 at -omega^- and +omega^+.
    """
    if params.p != 3:
        raise DomainError("p", "threshold needs p = 3")
    if params.gamma != 0:
        raise DomainError("gamma", "threshold needs gamma = 0")
    a = params.alpha
    if not abs(a) < ALPHA_PM_LIMIT:
        raise DomainError(
            "alpha", f"|alpha| must be below 2*sqrt(sqrt(5)-2) = {ALPHA_PM_LIMIT:.6f}"
        )
    kap = 0.25 * (0.5 * a ** 3 + 6.0 * a)
    r = abs(kap) / math.sqrt(4.0 + kap * kap)
    base = params.m / math.sqrt(2.0)
    return base * math.sqrt(1.0 + r), base * math.sqrt(1.0 - r)


def gamma_tilde(alpha, omega, m):
    """Coupling gamma at which the p = 3 slope vanishes.

    sign(dQ/domega) = -sign(gamma - gamma_tilde).
    """
    if not abs(omega) < m:
        raise DomainError("omega", f"|omega| must be below m={m}")
    k = math.sqrt(m * m - omega * omega)
    return 2.0 / (4.0 + alpha ** 2) * (
        4.0 * omega ** 2 / k - 4.0 * k + (0.5 * alpha ** 3 + 6.0 * alpha) * omega
    )


def n_omega(spec):
    """Negative-eigenvalue count of the linearization: 1 if beta <= 0 else 2."""
    _require(spec)
    return 1 if spec.beta <= 0 else 2


class Verdict(str, enum.Enum):
    ORBITALLY_STABLE = "OrbitallyStable"
    ORBITALLY_UNSTABLE = "OrbitallyUnstable"
    LINEARLY_UNSTABLE = "LinearlyUnstable"
    ORBITALLY_UNSTABLE_RADIAL = "OrbitallyUnstableRadial"
    INCONCLUSIVE = "Inconclusive"


class SlopeSource(str, enum.Enum):
    CLOSED_FORM_P3 = "ClosedFormP3"
    NUMERIC_QUADRATURE = "NumericQuadrature"


_TABLE = {
    (1, 1): Verdict.ORBITALLY_STABLE,
    (1, -1): Verdict.ORBITALLY_UNSTABLE,
    (2, 1): Verdict.LINEARLY_UNSTABLE,
    (2, -1): Verdict.ORBITALLY_UNSTABLE_RADIAL,
}


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Verdict
    n_omega: int
    slope: float
    slope_source: SlopeSource
    evidence: dict = field(default_factory=dict)


def _in(x, lo, hi):
    return lo < x < hi


def _window_evidence(spec, ev):
    """Cross-check the slope sign against the same-sign-coupling windows (1 < p < 5)."""
    params, w = spec.params, spec.omega
    m, a, g, p = params.m, params.alpha, params.gamma, params.p
    if not (1 < p < 5) or a * g <= 0:
        return
    w_c = 0.5 * m * math.sqrt(p - 1.0)
    left, right = a * g / (4.0 + a * a), a * m * m / g
    predicted = None
    if a > 0:
        if _in(w, -w_c, 0.0):
            predicted = -1
        elif _in(w, left, right) and _in(w, w_c, m):
            predicted = 1
    else:
        if _in(w, 0.0, w_c) and _in(w, left, right):
            predicted = -1
        elif _in(w, right, left) and _in(w, w_c, m):
            predicted = 1
    if predicted is not None:
        ev["window_slope_sign"] = predicted

    # m = 1 existence windows claimed stable/unstable for same-sign couplings;
    # advisory only, the table above decides.
    if m == 1:
        claim = None
        if a > 0 and _in(w, a * g / (4 + a * a), a / g) and _in(w, w_c, 1.0):
            claim = Verdict.ORBITALLY_STABLE
        elif a > 0 and _in(w, -w_c, 0.0):
            claim = Verdict.ORBITALLY_UNSTABLE
        elif a < 0 and _in(w, a / g, a * g / (4 + a * a)) and _in(w, w_c, 1.0):
            claim = Verdict.ORBITALLY_STABLE
        elif a < 0 and _in(w, 0.0, w_c) and _in(w, a * g / (4 + a * a), a / g):
            claim = Verdict.ORBITALLY_UNSTABLE
        if claim is not None:
            ev["coupled_window_claim"] = claim.value


def classify(spec, slope_tolerance=None):
    """Stability verdict from the (n_omega, sign of slope) table.

    Named thresholds are recomputed as cross-checks and placed in
    ``evidence``; they never override the table.
    """
    _require(spec)
    params = spec.params
    n = n_omega(spec)
    if params.p == 3:
        slope = charge_slope(spec, "closed")
        source = SlopeSource.CLOSED_FORM_P3
        tol = SLOPE_TOL_CLOSED if slope_tolerance is None else slope_tolerance
    else:
        slope = charge_slope(spec, "numeric")
        source = SlopeSource.NUMERIC_QUADRATURE
        tol = SLOPE_TOL_QUADRATURE if slope_tolerance is None else slope_tolerance

    if abs(slope) <= tol:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = _TABLE[(n, 1 if slope > 0 else -1)]

    ev = {"beta": spec.beta, "beta_max": spec.beta_max, "slope": slope, "tolerance": tol}
    if params.p == 3:
        g_t = gamma_tilde(params.alpha, spec.omega, params.m)
        ev["gamma_tilde"] = g_t
        ev["gamma_tilde_agrees"] = bool(np.sign(slope) == -np.sign(params.gamma - g_t))
        if params.alpha == 0 and abs(params.gamma) < 2 * params.m:
            w_t = threshold_omega_tilde(params)
            ev["omega_tilde"] = w_t
            ev["omega_tilde_agrees"] = bool(np.sign(slope) == np.sign(abs(spec.omega) - w_t))
        if params.gamma == 0 and abs(params.alpha) < ALPHA_PM_LIMIT:
            w_minus, w_plus = threshold_omega_alpha_pm(params)
            ev["omega_alpha_minus"] = w_minus
            ev["omega_alpha_plus"] = w_plus
    _window_evidence(spec, ev)
    if "window_slope_sign" in ev:
        ev["window_agrees"] = bool(ev["window_slope_sign"] == np.sign(slope))
    if "coupled_window_claim" in ev:
        ev["coupled_window_agrees"] = ev["coupled_window_claim"] == verdict.value
    return StabilityVerdict(verdict, n, float(slope), source, ev)
