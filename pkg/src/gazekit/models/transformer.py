"""Single post-norm encoder block over the 30x28 window with max pooling.

(input + learned positions) -> 2-head attention -> add -> norm
-> swish(1024) -> swish(28) -> add -> norm -> max over time -> softmax head
"""
from __future__ import annotations

import numpy as np

from ..core import N_FEATURES, WINDOW, Taxonomy
from .common import Classifier, glorot_uniform, sigmoid, softmax

HEADS = 2
HEAD_DIM = 28
FFN_DIM = 1024
NORM_EPS = 1e-6


def _layernorm(x, gamma, beta):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + NORM_EPS)
    xhat = xc * inv
    return xhat * gamma + beta, (xhat, inv)


def _layernorm_backward(dy, gamma, cache):
    xhat, inv = cache
    dgamma = (dy * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
    dbeta = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    dxhat = dy * gamma
    dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return dx, dgamma, dbeta


def _swish(u):
    s = sigmoid(u)
    return u * s, s


def _swish_grad(u, s):
    # d/du [u * s(u)] = s + u * s * (1 - s)
    g = 1.0 - s
    g *= u
    g += 1.0
    g *= s
    return g


class TransformerClassifier(Classifier):
    architecture = "transformer"

    def __init__(self, taxonomy=Taxonomy.FINE13, seed=0):
        super().__init__(taxonomy, seed)
        rng = np.random.default_rng(seed)
        D, A, L = N_FEATURES, HEADS * HEAD_DIM, self.n_classes
        P = self.params
        P["pos/embedding"] = rng.uniform(-0.05, 0.05, size=(WINDOW, D))
        for n in ("q", "k", "v"):
            P[f"attn/W{n}"] = glorot_uniform(rng, D, A)
            P[f"attn/b{n}"] = np.zeros(A)
        P["attn/Wo"] = glorot_uniform(rng, A, D)
        P["attn/bo"] = np.zeros(D)
        P["norm1/gamma"] = np.ones(D)
        P["norm1/beta"] = np.zeros(D)
        P["ffn/W1"] = glorot_uniform(rng, D, FFN_DIM)
        P["ffn/b1"] = np.zeros(FFN_DIM)
        P["ffn/W2"] = glorot_uniform(rng, FFN_DIM, D)
        P["ffn/b2"] = np.zeros(D)
        P["norm2/gamma"] = np.ones(D)
        P["norm2/beta"] = np.zeros(D)
        P["head/W"] = glorot_uniform(rng, D, L)
        P["head/b"] = np.zeros(L)

    @staticmethod
    def _split(x):
        B, T, _ = x.shape
        return x.reshape(B, T, HEADS, HEAD_DIM).transpose(0, 2, 1, 3)

    @staticmethod
    def _merge(x):
        B, _, T, _ = x.shape
        return x.transpose(0, 2, 1, 3).reshape(B, T, HEADS * HEAD_DIM)

    def encode(self, X, positional=True):
        """Pre-pool activations (batch, 30, 28) and the backward cache."""
        P = self.params
        z = X + P["pos/embedding"] if positional else X.copy()
        q = self._split(z @ P["attn/Wq"] + P["attn/bq"])
        k = self._split(z @ P["attn/Wk"] + P["attn/bk"])
        v = self._split(z @ P["attn/Wv"] + P["attn/bv"])
        scale = 1.0 / np.sqrt(HEAD_DIM)
        att = softmax((q @ k.transpose(0, 1, 3, 2)) * scale)
        ctx = self._merge(att @ v)
        r1 = z + ctx @ P["attn/Wo"] + P["attn/bo"]
        n1, ln1 = _layernorm(r1, P["norm1/gamma"], P["norm1/beta"])
        # the feed-forward path runs on (batch*time, width) matrices
        u1 = n1.reshape(-1, N_FEATURES) @ P["ffn/W1"] + P["ffn/b1"]
        f1, s1 = _swish(u1)
        u2 = f1 @ P["ffn/W2"] + P["ffn/b2"]
        f2, s2 = _swish(u2)
        n2, ln2 = _layernorm(n1 + f2.reshape(n1.shape), P["norm2/gamma"], P["norm2/beta"])
        return n2, (z, q, k, v, att, ctx, ln1, n1, u1, f1, s1, u2, s2, ln2)

    def _forward(self, X):
        P = self.params
        n2, enc = self.encode(X)
        arg = n2.argmax(axis=1)  # (B, D)
        pooled = np.take_along_axis(n2, arg[:, None, :], axis=1)[:, 0]
        probs = softmax(pooled @ P["head/W"] + P["head/b"])
        return probs, (X, n2.shape, arg, pooled, enc)

    def _backward(self, cache, dlogits):
        P = self.params
        X, n2_shape, arg, pooled, enc = cache
        z, q, k, v, att, ctx, ln1, n1, u1, f1, s1, u2, s2, ln2 = enc
        g = {}
        g["head/W"] = pooled.T @ dlogits
        g["head/b"] = dlogits.sum(axis=0)
        dpooled = dlogits @ P["head/W"].T
        dn2 = np.zeros(n2_shape)
        np.put_along_axis(dn2, arg[:, None, :], dpooled[:, None, :], axis=1)

        dr2, g["norm2/gamma"], g["norm2/beta"] = _layernorm_backward(dn2, P["norm2/gamma"], ln2)
        du2 = dr2.reshape(-1, N_FEATURES) * _swish_grad(u2, s2)
        g["ffn/W2"] = f1.T @ du2
        g["ffn/b2"] = du2.sum(axis=0)
        du1 = du2 @ P["ffn/W2"].T
        du1 *= _swish_grad(u1, s1)
        g["ffn/W1"] = n1.reshape(-1, N_FEATURES).T @ du1
        g["ffn/b1"] = du1.sum(axis=0)
        dn1 = dr2 + (du1 @ P["ffn/W1"].T).reshape(dr2.shape)

        dr1, g["norm1/gamma"], g["norm1/beta"] = _layernorm_backward(dn1, P["norm1/gamma"], ln1)
        A = HEADS * HEAD_DIM
        g["attn/Wo"] = ctx.reshape(-1, A).T @ dr1.reshape(-1, N_FEATURES)
        g["attn/bo"] = dr1.reshape(-1, N_FEATURES).sum(axis=0)
        dctx = self._split(dr1 @ P["attn/Wo"].T)
        datt = dctx @ v.transpose(0, 1, 3, 2)
        dv = att.transpose(0, 1, 3, 2) @ dctx
        dscores = att * (datt - (datt * att).sum(axis=-1, keepdims=True)) / np.sqrt(HEAD_DIM)
        dq = dscores @ k
        dk = dscores.transpose(0, 1, 3, 2) @ q
        dz = dr1.copy()
        zf = z.reshape(-1, N_FEATURES)
        for name, d in (("q", dq), ("k", dk), ("v", dv)):
            d = self._merge(d)
            g[f"attn/W{name}"] = zf.T @ d.reshape(-1, A)
            g[f"attn/b{name}"] = d.reshape(-1, A).sum(axis=0)
            dz += d @ P[f"attn/W{name}"].T
        g["pos/embedding"] = dz.sum(axis=0)
        return {key: g[key] for key in P}


def transformer_param_count(n_classes: int) -> int:
    D, A = N_FEATURES, HEADS * HEAD_DIM
    positional = WINDOW * D
    attention = 3 * (D * A + A) + (A * D + D)
    norms = 2 * (2 * D)
    ffn = (D * FFN_DIM + FFN_DIM) + (FFN_DIM * D + D)
    head = D * n_classes + n_classes
    return positional + attention + norms + ffn + head
