"""Dense ReLU network regressor trained with the Adam update rule.

Written against the scikit-learn estimator contract (verbatim constructor
params, trailing-underscore fitted state, get_params/set_params via
BaseEstimator) so it composes with pipelines and model selection.  The
network is fixed at two hidden layers, which together with the output
projection gives three weight layers.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted


class TrainingDivergedError(RuntimeError):
    """Training loss became non-finite."""


def _relu(x):
    return np.maximum(x, 0.0)


class MlpRegressor(BaseEstimator, RegressorMixin):
    """Two-hidden-layer ReLU MLP minimizing mean squared error with Adam.

    Parameters
    ----------
    hidden_width : neurons per hidden layer.
    epochs : full passes over the training data.
    learning_rate : Adam step size.
    batch_size : minibatch size; the last batch per epoch may be smaller.
    beta1, beta2, eps : Adam moment decay rates and stabilizer.
    clip_range : (lo, hi) applied to predictions only, never to the
        training loss, or None for unclipped output.
    random_state : seed for weight init and batch shuffling.
    """

    def __init__(self, hidden_width=64, epochs=200, learning_rate=1e-3,
                 batch_size=64, beta1=0.9, beta2=0.999, eps=1e-8,
                 clip_range=None, random_state=0):
        self.hidden_width = hidden_width
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.clip_range = clip_range
        self.random_state = random_state

    # -- core network ---------------------------------------------------

    def _forward(self, X):
        W1, W2, W3 = self.coefs_
        b1, b2, b3 = self.intercepts_
        h1 = _relu(X @ W1 + b1)
        h2 = _relu(h1 @ W2 + b2)
        return h1, h2, h2 @ W3 + b3

    def loss_and_grads(self, X, y):
        """Mean squared error and its analytic gradients on one batch.

        Returns (loss, {"W1": ..., "b1": ..., ..., "W3": ..., "b3": ...}).
        Exposed so the gradients can be verified against finite differences.
        """
        check_is_fitted(self, "coefs_")
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        W1, W2, W3 = self.coefs_
        h1, h2, out = self._forward(X)
        err = out - y
        loss = float(np.mean(err ** 2))
        dout = 2.0 * err / err.size
        dW3 = h2.T @ dout
        db3 = dout.sum(axis=0)
        dh2 = dout @ W3.T
        dh2[h2 <= 0] = 0.0
        dW2 = h1.T @ dh2
        db2 = dh2.sum(axis=0)
        dh1 = dh2 @ W2.T
        dh1[h1 <= 0] = 0.0
        dW1 = X.T @ dh1
        db1 = dh1.sum(axis=0)
        return loss, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2,
                      "W3": dW3, "b3": db3}

    def mse_loss(self, X, y) -> float:
        """Raw (unclipped) mean squared error of the current weights."""
        check_is_fitted(self, "coefs_")
        _, _, out = self._forward(np.asarray(X, dtype=float))
        return float(np.mean((out - np.asarray(y, dtype=float)) ** 2))

    # -- estimator API ----------------------------------------------------

    def fit(self, X, y):
        X = check_array(X, dtype=float)
        y = check_array(y, dtype=float, ensure_2d=False)
        if y.ndim == 1:
            y = y[:, None]
        if y.shape[0] != X.shape[0]:
            raise ValueError("X and y have inconsistent numbers of rows")
        n, d = X.shape
        k = y.shape[1]
        h = self.hidden_width
        rng = np.random.default_rng(self.random_state)

        # He init for the ReLU layers, smaller fan-in scaling for the output
        self.coefs_ = [
            rng.normal(0.0, np.sqrt(2.0 / d), size=(d, h)),
            rng.normal(0.0, np.sqrt(2.0 / h), size=(h, h)),
            rng.normal(0.0, np.sqrt(1.0 / h), size=(h, k)),
        ]
        self.intercepts_ = [np.zeros(h), np.zeros(h), np.zeros(k)]
        self.n_features_in_ = d
        self.n_outputs_ = k

        names = ("W1", "b1", "W2", "b2", "W3", "b3")
        params = {"W1": self.coefs_[0], "b1": self.intercepts_[0],
                  "W2": self.coefs_[1], "b2": self.intercepts_[1],
                  "W3": self.coefs_[2], "b3": self.intercepts_[2]}
        m = {p: np.zeros_like(params[p]) for p in names}
        v = {p: np.zeros_like(params[p]) for p in names}
        step = 0

        self.loss_curve_ = []
        batch = max(1, int(self.batch_size))
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, batch):
                idx = order[start : start + batch]
                loss, grads = self.loss_and_grads(X[idx], y[idx])
                if not np.isfinite(loss):
                    raise TrainingDivergedError(
                        f"loss became {loss} at epoch {epoch}, step {step}; "
                        f"lower the learning rate ({self.learning_rate})"
                    )
                step += 1
                b1c = 1.0 - self.beta1 ** step
                b2c = 1.0 - self.beta2 ** step
                for p in names:
                    g = grads[p]
                    m[p] = self.beta1 * m[p] + (1.0 - self.beta1) * g
                    v[p] = self.beta2 * v[p] + (1.0 - self.beta2) * g * g
                    params[p] -= self.learning_rate * (m[p] / b1c) / (
                        np.sqrt(v[p] / b2c) + self.eps
                    )
            self.loss_curve_.append(self.mse_loss(X, y))
        return self

    def predict(self, X):
        check_is_fitted(self, "coefs_")
        X = check_array(X, dtype=float)
        _, _, out = self._forward(X)
        if self.clip_range is not None:
            out = np.clip(out, self.clip_range[0], self.clip_range[1])
        return out
