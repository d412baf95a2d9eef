"""Learner #5: single-hidden-layer network with weight decay.

Trained by full-batch gradient descent with a backtracking line
search, so the seed only enters through the initial weights. Biases
are excluded from the decay penalty (otherwise the constant optimum
would not sit at the sample mean / prevalence).
"""

from __future__ import annotations

import numpy as np

from ..core import EPS, Dataset, Family, FitError, Learner, Predictor


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -700, 700)))


def pack_params(W1, b1, W2, b2):
    return np.concatenate([W1.ravel(), b1, W2.ravel(), b2])


def unpack_params(theta, d, h):
    i = 0
    W1 = theta[i:i + d * h].reshape(h, d); i += d * h
    b1 = theta[i:i + h]; i += h
    W2 = theta[i:i + h]; i += h
    b2 = theta[i:i + 1]
    return W1, b1, W2, b2


def loss_and_grad(theta, Xs, y, hidden, decay, family):
    """Penalized loss and its analytic gradient.

    Gaussian: 0.5*sum((y-f)^2); Bernoulli: cross-entropy. Penalty:
    0.5*decay*(|W1|^2 + |W2|^2), biases unpenalized.
    """
    n, d = Xs.shape
    W1, b1, W2, b2 = unpack_params(theta, d, hidden)
    A = _sigmoid(Xs @ W1.T + b1)          # n x h
    z = A @ W2 + b2[0]
    if family is Family.BERNOULLI:
        f = _sigmoid(z)
        fc = np.clip(f, EPS, 1 - EPS)
        loss = -float(np.sum(y * np.log(fc) + (1 - y) * np.log1p(-fc)))
        dz = f - y
    else:
        f = z
        loss = 0.5 * float(np.sum((y - f) ** 2))
        dz = f - y
    loss += 0.5 * decay * (float(np.sum(W1**2)) + float(np.sum(W2**2)))
    gW2 = A.T @ dz + decay * W2
    gb2 = np.array([dz.sum()])
    dA = np.outer(dz, W2) * A * (1.0 - A)
    gW1 = dA.T @ Xs + decay * W1
    gb1 = dA.sum(axis=0)
    return loss, pack_params(gW1, gb1, gW2, gb2)


class MlpPredictor(Predictor):
    def __init__(self, theta, hidden, family, x_mean, x_scale, warnings=()):
        self.theta = theta
        self.hidden = hidden
        self.family = family
        self.x_mean = x_mean
        self.x_scale = x_scale
        self.warnings = tuple(warnings)
        self.self_dof = None

    def expectation(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Xs = (X - self.x_mean) / self.x_scale
        W1, b1, W2, b2 = unpack_params(self.theta, X.shape[1], self.hidden)
        z = _sigmoid(Xs @ W1.T + b1) @ W2 + b2[0]
        if self.family is Family.BERNOULLI:
            return np.clip(_sigmoid(z), EPS, 1 - EPS)
        return z


class MlpLearner(Learner):
    stochastic = True

    def __init__(self, hidden: int = 7, decay: float = 0.03,
                 max_iter: int = 2000, tol: float = 1e-5):
        if hidden < 1:
            raise ValueError("hidden must be >= 1")
        self.hidden = hidden
        self.decay = decay
        self.max_iter = max_iter
        self.tol = tol
        self.name = "mlp"

    def fit(self, data: Dataset, seed: int = 0) -> MlpPredictor:
        X, y = data.X, data.y
        x_mean = X.mean(axis=0)
        x_scale = X.std(axis=0)
        x_scale[x_scale == 0] = 1.0
        Xs = (X - x_mean) / x_scale
        rng = np.random.default_rng(np.random.SeedSequence((seed, 0x313)))
        n_par = self.hidden * (X.shape[1] + 2) + 1
        theta = rng.uniform(-0.7, 0.7, size=n_par)
        # start the output bias at the constant optimum; the badly
        # conditioned decay-dominated regime then converges cleanly
        if data.family is Family.BERNOULLI:
            prev = np.clip(y.mean(), 1e-6, 1 - 1e-6)
            theta[-1] = np.log(prev / (1 - prev))
        else:
            theta[-1] = y.mean()
        theta, warns = self._descend(theta, Xs, y, data.family)
        return MlpPredictor(theta, self.hidden, data.family, x_mean, x_scale,
                            warns)

    def _descend(self, theta, Xs, y, family):
        loss, grad = loss_and_grad(theta, Xs, y, self.hidden, self.decay,
                                   family)
        step = 1.0 / max(1.0, np.linalg.norm(grad))
        best = (loss, theta)
        for _ in range(self.max_iter):
            gnorm = np.linalg.norm(grad)
            if gnorm < self.tol:
                return theta, ()
            accepted = False
            for _ in range(40):
                cand = theta - step * grad
                cl, cg = loss_and_grad(cand, Xs, y, self.hidden, self.decay,
                                       family)
                if cl <= loss - 1e-4 * step * gnorm**2:
                    theta, loss, grad = cand, cl, cg
                    if cl < best[0]:
                        best = (cl, cand)
                    step *= 1.3
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break  # line search stalled; keep the best iterate
        return best[1], ("mlp_not_converged",)
