"""scikit-learn compatible wrappers.

``KerrJPATransformer`` maps signal phasors, given as (I, Q) columns, through
a pumped resonator so it can sit in a :class:`sklearn.pipeline.Pipeline`.
``AddedNoiseRegressor`` fits the chain noise model to (T_vts, T_fridge) -> PSD
data.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .calibration import NoiseSample, fit_added_noise, noise_model
from .constants import TWO_PI
from .core import DeviceParams, jacobian, steady_output
from .gain import OperatingPoint


class KerrJPATransformer(TransformerMixin, BaseEstimator):
    """Signal transformation of a pumped Kerr resonator.

    Parameters
    ----------
    omega0, gamma, kerr : float
        Device parameters (rad/s).
    f_p : float
        Pump frequency (Hz).
    pump_amp : float
        Input pump amplitude (sqrt(photons/s)).
    model : {"jpa", "linearized"}, default="jpa"
        Exact steady-state map or its small-signal Jacobian.
    """

    def __init__(self, omega0, gamma, kerr, f_p, pump_amp, model="jpa"):
        self.omega0 = omega0
        self.gamma = gamma
        self.kerr = kerr
        self.f_p = f_p
        self.pump_amp = pump_amp
        self.model = model

    def fit(self, X=None, y=None):
        self.device_ = DeviceParams(self.omega0, self.gamma, self.kerr)
        self.op_ = OperatingPoint.at(self.device_, self.f_p, self.pump_amp)
        if self.model not in ("jpa", "linearized"):
            raise ValueError(f"unknown model {self.model!r}")
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "device_")
        X = check_array(X)
        if X.shape[1] != 2:
            raise ValueError(f"expected (I, Q) columns, got {X.shape[1]} features")
        delta = self.device_.omega0 - TWO_PI * self.f_p
        if self.model == "linearized":
            return X @ jacobian(self.pump_amp, delta, self.device_).T
        b = X[:, 0] + 1j * X[:, 1]
        out = steady_output(np.append(self.pump_amp + b, self.pump_amp + 0j), delta, self.device_)
        sig = out[:-1] - out[-1]
        return np.column_stack([sig.real, sig.imag])


class AddedNoiseRegressor(RegressorMixin, BaseEstimator):
    """Chain noise model ``G (lam S(T_vts) + (1 - lam) S(T_f) + N_add)``.

    ``X`` has columns (T_vts, T_fridge) in kelvin and ``y`` is the integrated
    output noise in quanta.

    Attributes
    ----------
    result_ : FitResult
    n_add_, lambda_, chain_gain_db_ : float
    """

    def __init__(self, omega=TWO_PI * 7.0e9, init_guess=None, max_nfev=200):
        self.omega = omega
        self.init_guess = init_guess
        self.max_nfev = max_nfev

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        data = [NoiseSample(a, b, c) for (a, b), c in zip(X, y)]
        self.result_ = fit_added_noise(data, self.omega, self.init_guess, self.max_nfev)
        self.n_add_ = self.result_.n_add
        self.lambda_ = self.result_.lam
        self.chain_gain_db_ = self.result_.chain_gain_db
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = check_array(X)
        return noise_model(X[:, 0], X[:, 1], self.n_add_, self.lambda_, self.chain_gain_db_, self.omega)
