"""Two stacked 64-unit LSTM layers, last hidden state, dense softmax head."""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..core import N_FEATURES, Taxonomy
from .common import Classifier, glorot_uniform, orthogonal, softmax

HIDDEN = 64


class LSTMClassifier(Classifier):
    """Gate order inside every 4H-wide block is input, forget, candidate, output."""

    architecture = "lstm"

    def __init__(self, taxonomy=Taxonomy.FINE13, seed=0, hidden=HIDDEN):
        super().__init__(taxonomy, seed)
        self.hidden = hidden
        rng = np.random.default_rng(seed)
        H, L = hidden, self.n_classes
        for name, n_in in (("lstm1", N_FEATURES), ("lstm2", H)):
            b = np.zeros(4 * H)
            b[H:2 * H] = 1.0  # forget gate
            self.params[f"{name}/W"] = glorot_uniform(rng, n_in, 4 * H)
            self.params[f"{name}/U"] = orthogonal(rng, H, 4 * H)
            self.params[f"{name}/b"] = b
        self.params["head/W"] = glorot_uniform(rng, H, L)
        self.params["head/b"] = np.zeros(L)

    def _layer(self, x, name):
        p = self.params
        xw = np.ascontiguousarray(x @ p[f"{name}/W"] + p[f"{name}/b"])
        return kernels.lstm_recurrence(xw, np.ascontiguousarray(p[f"{name}/U"]))

    def _forward(self, X):
        hs1, cs1, a1 = self._layer(X, "lstm1")
        hs2, cs2, a2 = self._layer(hs1, "lstm2")
        last = hs2[:, -1]
        probs = softmax(last @ self.params["head/W"] + self.params["head/b"])
        return probs, (X, hs1, cs1, a1, hs2, cs2, a2)

    def _layer_backward(self, name, x, hs, cs, acts, dhs, grads):
        p = self.params
        H = self.hidden
        U = np.ascontiguousarray(p[f"{name}/U"])
        dg = kernels.lstm_recurrence_backward(np.ascontiguousarray(dhs), U, cs, acts)
        G = dg.reshape(-1, 4 * H)
        grads[f"{name}/W"] = x.reshape(-1, x.shape[-1]).T @ G
        h_prev = np.zeros_like(hs)
        h_prev[:, 1:] = hs[:, :-1]
        grads[f"{name}/U"] = h_prev.reshape(-1, H).T @ G
        grads[f"{name}/b"] = G.sum(axis=0)
        return dg @ p[f"{name}/W"].T

    def _backward(self, cache, dlogits):
        X, hs1, cs1, a1, hs2, cs2, a2 = cache
        p = self.params
        grads = {}
        grads["head/W"] = hs2[:, -1].T @ dlogits
        grads["head/b"] = dlogits.sum(axis=0)
        dhs2 = np.zeros_like(hs2)
        dhs2[:, -1] = dlogits @ p["head/W"].T
        dhs1 = self._layer_backward("lstm2", hs1, hs2, cs2, a2, dhs2, grads)
        self._layer_backward("lstm1", X, hs1, cs1, a1, dhs1, grads)
        return {k: grads[k] for k in p}


def lstm_param_count(n_classes: int, n_features: int = N_FEATURES, hidden: int = HIDDEN) -> int:
    """Closed-form count: two gate stacks plus the dense head."""
    layer = lambda n_in: 4 * ((n_in + hidden) * hidden + hidden)  # noqa: E731
    return layer(n_features) + layer(hidden) + hidden * n_classes + n_classes
