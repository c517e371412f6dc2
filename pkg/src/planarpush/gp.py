"""Small-data Gaussian process regression with fixed hyperparameters.

Squared-exponential kernel with per-input-dimension lengthscales shared
across outputs; signal and noise variances are per output dimension. The
prior mean is zero after subtracting the per-dimension training mean,
which is added back at prediction. Hyperparameters are never optimized:
with ~10-60 samples, marginal-likelihood fits are unstable.
"""
from __future__ import annotations

import numpy as np


class GpFitError(RuntimeError):
    """Kernel matrix factorization failed even with jitter escalation."""

    def __init__(self, message: str, condition_estimate: float):
        super().__init__(f"{message} (condition estimate {condition_estimate:.3e})")
        self.condition_estimate = condition_estimate


class GpRegressor:
    """Posterior-mean regressor over P outputs from n training points.

    Attributes are read-only after fit; predictions are pure and may be
    issued concurrently.
    """

    def __init__(self, inputs, targets, lengthscales, signal_var, noise_var,
                 ymean, chol_factors, alpha, mean_weights):
        self.inputs = inputs                # (n, D)
        self.targets = targets              # (n, P)
        self.lengthscales = lengthscales    # (D,)
        self.signal_var = signal_var        # (P,)
        self.noise_var = noise_var          # (P,)
        self.ymean = ymean                  # (P,)
        self.chol_factors = chol_factors    # (P, n, n) lower triangular
        self.alpha = alpha                  # (P, n): (K_p + sn_p^2 I)^-1 (y_p - ymean_p)
        self.mean_weights = mean_weights    # (n, P): unit-kernel dot weights

    @property
    def n_train(self) -> int:
        return self.inputs.shape[0]

    def unit_kernel_vector(self, queries: np.ndarray) -> np.ndarray:
        """exp(-0.5 * sum_d ((q_d - x_d) / ls_d)^2), shape (m, n)."""
        diff = (queries[:, None, :] - self.inputs[None, :, :]) / self.lengthscales
        return np.exp(-0.5 * np.einsum("mnd,mnd->mn", diff, diff))

    def predict_mean(self, query) -> np.ndarray:
        """Posterior mean at one (D,) query or a batch (m, D) of queries."""
        q = np.atleast_2d(np.asarray(query, dtype=np.float64))
        mean = self.unit_kernel_vector(q) @ self.mean_weights + self.ymean
        return mean[0] if np.ndim(query) == 1 else mean

    def predict_variance(self, query) -> np.ndarray:
        """Posterior variance per output (diagnostics only; the controller
        uses deterministic mean predictions)."""
        q = np.atleast_2d(np.asarray(query, dtype=np.float64))
        ku = self.unit_kernel_vector(q)
        var = np.empty((q.shape[0], self.signal_var.size))
        for p, sf2 in enumerate(self.signal_var):
            kv = sf2 * ku
            w = np.linalg.solve(self.chol_factors[p], kv.T)
            var[:, p] = np.maximum(sf2 - np.einsum("nm,nm->m", w, w), 0.0)
        return var[0] if np.ndim(query) == 1 else var

    def factorization_residual(self) -> float:
        """max_p ||L_p L_p^T - (K_p + sn_p^2 I)||_inf / ||K_p||_inf."""
        ku = self.unit_kernel_vector(self.inputs)
        worst = 0.0
        for p, sf2 in enumerate(self.signal_var):
            k = sf2 * ku
            a = k + self.noise_var[p] * np.eye(self.n_train)
            r = np.abs(self.chol_factors[p] @ self.chol_factors[p].T - a).max()
            worst = max(worst, r / max(np.abs(k).max(), 1e-300))
        return worst


def gp_fit(inputs, targets, lengthscales, noise_std, signal_std=None,
           signal_floor: float = 1e-4) -> GpRegressor:
    """Fit independent per-output GPs with a shared unit kernel.

    signal_std defaults to the per-dimension sample std of the targets,
    floored at signal_floor. noise_std may be scalar or per-output.
    """
    x = np.ascontiguousarray(np.atleast_2d(inputs), dtype=np.float64)
    y = np.ascontiguousarray(np.atleast_2d(targets), dtype=np.float64)
    if x.shape[0] < 1:
        raise ValueError("need at least one training sample")
    if y.shape[0] != x.shape[0]:
        raise ValueError("inputs and targets disagree on sample count")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("training data must be finite")
    ls = np.asarray(lengthscales, dtype=np.float64)
    if ls.shape != (x.shape[1],) or np.any(ls <= 0.0):
        raise ValueError("need one positive lengthscale per input dimension")
    n, p = y.shape

    sn = np.broadcast_to(np.asarray(noise_std, dtype=np.float64), (p,)).copy()
    if np.any(sn <= 0.0):
        raise ValueError("noise_std must be positive")
    if signal_std is None:
        sf = np.maximum(np.std(y, axis=0), signal_floor)
    else:
        sf = np.broadcast_to(np.asarray(signal_std, dtype=np.float64), (p,)).copy()
        if np.any(sf <= 0.0):
            raise ValueError("signal_std must be positive")

    ymean = np.mean(y, axis=0)
    yc = y - ymean
    diff = (x[:, None, :] - x[None, :, :]) / ls
    k_unit = np.exp(-0.5 * np.einsum("ijd,ijd->ij", diff, diff))

    chol = np.empty((p, n, n))
    alpha = np.empty((p, n))
    for j in range(p):
        a = sf[j] ** 2 * k_unit + sn[j] ** 2 * np.eye(n)
        chol[j] = _cholesky_with_jitter(a)
        alpha[j] = _chol_solve(chol[j], yc[:, j])
    mean_weights = (alpha * sf[:, None] ** 2).T.copy()

    return GpRegressor(x, y, ls, sf ** 2, sn ** 2, ymean, chol, alpha, mean_weights)


def gp_predict_mean(reg: GpRegressor, query) -> np.ndarray:
    return reg.predict_mean(query)


def _cholesky_with_jitter(a: np.ndarray) -> np.ndarray:
    scale = float(np.max(np.diag(a)))
    for jitter in (0.0, 1e-12, 1e-10, 1e-8, 1e-6):
        try:
            return np.linalg.cholesky(a + jitter * scale * np.eye(a.shape[0]))
        except np.linalg.LinAlgError:
            continue
    try:
        cond = float(np.linalg.cond(a))
    except np.linalg.LinAlgError:
        cond = float("inf")
    raise GpFitError("kernel matrix is not positive definite despite jitter", cond)


def _chol_solve(chol: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.linalg.solve(chol.T, np.linalg.solve(chol, b))
