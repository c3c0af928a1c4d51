"""Shared pieces of both classifiers: initialisers, softmax, loss, Adam."""
from __future__ import annotations

import numpy as np

from ..core import N_FEATURES, WINDOW, Taxonomy, ValidationError


def glorot_uniform(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


def orthogonal(rng, rows, cols):
    a = rng.normal(size=(max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q.T if rows < cols else q


def softmax(z, axis=-1):
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def sigmoid(z):
    out = np.multiply(z, 0.5)
    np.tanh(out, out=out)
    out += 1.0
    out *= 0.5
    return out


def cross_entropy(probs, targets):
    """Mean categorical cross-entropy for integer targets."""
    p = probs[np.arange(len(targets)), targets]
    return float(-np.mean(np.log(np.clip(p, 1e-300, None))))


def rank_labels(probs):
    """Label indices by descending probability; ties keep the lower index first."""
    return np.argsort(-np.asarray(probs), axis=-1, kind="stable")


class Classifier:
    """Parameter container with the forward/backward contract both models share.

    Subclasses fill ``self.params`` (an ordered name -> array mapping) and
    implement ``_forward(X) -> (probs, cache)`` and ``_backward(cache, dlogits)``.
    """

    architecture = ""

    def __init__(self, taxonomy=Taxonomy.FINE13, seed=0):
        self.taxonomy = Taxonomy.parse(taxonomy)
        self.n_classes = self.taxonomy.size
        self.seed = seed
        self.params = {}

    def param_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def copy(self):
        other = self.__class__.__new__(self.__class__)
        other.__dict__.update(self.__dict__)
        other.params = {k: v.copy() for k, v in self.params.items()}
        return other

    def zero_(self):
        for v in self.params.values():
            v[...] = 0.0
        return self

    def _check_input(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3 or X.shape[1:] != (WINDOW, N_FEATURES):
            raise ValidationError("window", f"expected (batch, {WINDOW}, {N_FEATURES}), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("window", "input contains non-finite values")
        return np.ascontiguousarray(X)

    def forward(self, X):
        """Class probabilities, shape (batch, L); a single window gives (1, L)."""
        probs, _ = self._forward(self._check_input(X))
        return probs

    def predict_proba(self, X, chunk=512):
        X = np.asarray(X)
        if len(X) == 0:
            return np.zeros((0, self.n_classes))
        return np.concatenate([self.forward(X[i:i + chunk]) for i in range(0, len(X), chunk)])

    def loss_and_grads(self, X, targets):
        """Mean cross-entropy over the batch and its gradient for every parameter."""
        loss, grads, _ = self.loss_grads_probs(X, targets)
        return loss, grads

    def loss_grads_probs(self, X, targets):
        X = self._check_input(X)
        targets = np.asarray(targets, dtype=np.int64)
        probs, cache = self._forward(X)
        loss = cross_entropy(probs, targets)
        dlogits = probs.copy()
        dlogits[np.arange(len(targets)), targets] -= 1.0
        dlogits /= len(targets)
        return loss, self._backward(cache, dlogits), probs


class Adam:
    """Adam with the bias correction folded into the step size."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-7):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        self.t += 1
        lr_t = self.lr * np.sqrt(1.0 - self.beta2 ** self.t) / (1.0 - self.beta1 ** self.t)
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[k] -= lr_t * m / (np.sqrt(v) + self.eps)
