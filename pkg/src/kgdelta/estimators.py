"""scikit-learn style wrappers around the per-frequency computations.

Each row of ``X`` is one frequency (a single column) for the model
parameters fixed at construction. ``fit`` only validates; there is
nothing to learn.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import discretization as disc
from . import model, spectra
from .exceptions import StencilOutOfRange

__all__ = ["StabilityClassifier", "SpectralCounter"]

INADMISSIBLE = "NotAdmissible"


def _omegas(X):
    X = check_array(X, ensure_2d=True, dtype=float)
    if X.shape[1] != 1:
        raise ValueError(f"expected one column of frequencies, got {X.shape[1]}")
    return X[:, 0]


class StabilityClassifier(ClassifierMixin, BaseEstimator):
    """Predict the stability verdict of the standing wave at each frequency.

    Inadmissible frequencies are labelled ``"NotAdmissible"``.
    :meth:`transform` returns the columns (beta, n_omega, slope), with NaN
    where the wave does not exist.
    """

    def __init__(self, m=1.0, alpha=0.0, gamma=0.0, p=3.0, slope_tolerance=None):
        self.m = m
        self.alpha = alpha
        self.gamma = gamma
        self.p = p
        self.slope_tolerance = slope_tolerance

    def fit(self, X, y=None):
        _omegas(X)
        self.params_ = model.validate_params(self.m, self.alpha, self.gamma, self.p)
        self.classes_ = np.array([v.value for v in model.Verdict] + [INADMISSIBLE])
        self.n_features_in_ = 1
        return self

    def _verdict(self, omega):
        spec = self.params_.at(omega)
        if not model.admissible(spec):
            return INADMISSIBLE
        try:
            return model.classify(spec, self.slope_tolerance).verdict.value
        except StencilOutOfRange:
            return model.Verdict.INCONCLUSIVE.value

    def predict(self, X):
        check_is_fitted(self, "params_")
        return np.array([self._verdict(w) for w in _omegas(X)], dtype=object)

    def transform(self, X):
        check_is_fitted(self, "params_")
        out = []
        for w in _omegas(X):
            spec = self.params_.at(w)
            if not model.admissible(spec):
                out.append((spec.beta, np.nan, np.nan))
            else:
                out.append((spec.beta, model.n_omega(spec), model.charge_slope(spec)))
        return np.array(out, dtype=float)


class SpectralCounter(TransformerMixin, BaseEstimator):
    """Map frequencies to discrete (n_plus, n_minus, n_radial) counts.

    ``h`` is the target grid spacing; the half-length is 30 decay lengths.
    """

    def __init__(self, m=1.0, alpha=0.0, gamma=0.0, p=3.0, h=0.01):
        self.m = m
        self.alpha = alpha
        self.gamma = gamma
        self.p = p
        self.h = h

    def fit(self, X, y=None):
        _omegas(X)
        self.params_ = model.validate_params(self.m, self.alpha, self.gamma, self.p)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        rows = []
        for w in _omegas(X):
            spec = self.params_.at(w)
            if not model.admissible(spec):
                rows.append((np.nan, np.nan, np.nan))
                continue
            grid = disc.grid_for(spec, h=self.h)
            ph = disc.discrete_profile(grid, spec)
            n_plus, n_minus = spectra.count_negative_Lpm(grid, spec, ph)
            rows.append((n_plus, n_minus, spectra.count_negative_radial(grid, spec, ph)))
        return np.array(rows, dtype=float)
