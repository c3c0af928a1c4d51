"""Pure numpy implementations of the hot kernels.

Mirrors the API of the compiled ``gazekit._kernels`` module exactly; used when
the extension is unavailable or ``GAZEKIT_PURE_PYTHON=1`` is set.

Gate layout for the LSTM kernels is ``[input, forget, candidate, output]``
along the last axis, each block ``H`` wide.
"""
import numpy as np


def _sigmoid(z):
    return 0.5 * (np.tanh(0.5 * z) + 1.0)


def lstm_recurrence(xw, U):
    """Run the LSTM recurrence given precomputed input projections.

    xw : (B, T, 4H) array, ``x_t @ W + b`` for every step.
    U  : (H, 4H) recurrent kernel.

    Returns ``(hs, cs, acts)`` with shapes (B, T, H), (B, T, H), (B, T, 4H);
    ``acts`` holds post-activation gate values.
    """
    B, T, G = xw.shape
    H = G // 4
    hs = np.empty((B, T, H))
    cs = np.empty((B, T, H))
    acts = np.empty((B, T, G))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(T):
        z = xw[:, t, :] + h @ U
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H:2 * H])
        g = np.tanh(z[:, 2 * H:3 * H])
        o = _sigmoid(z[:, 3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        hs[:, t] = h
        cs[:, t] = c
        acts[:, t, :H] = i
        acts[:, t, H:2 * H] = f
        acts[:, t, 2 * H:3 * H] = g
        acts[:, t, 3 * H:] = o
    return hs, cs, acts


def lstm_recurrence_backward(dhs, U, cs, acts):
    """Backpropagate through time.

    dhs holds the loss gradient arriving at every hidden output from above.
    Returns pre-activation gate gradients, shape (B, T, 4H).
    """
    B, T, H = dhs.shape
    dgates = np.empty((B, T, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        i = acts[:, t, :H]
        f = acts[:, t, H:2 * H]
        g = acts[:, t, 2 * H:3 * H]
        o = acts[:, t, 3 * H:]
        c = cs[:, t]
        c_prev = cs[:, t - 1] if t > 0 else np.zeros((B, H))
        tc = np.tanh(c)
        dh = dhs[:, t] + dh_next
        dc = dh * o * (1.0 - tc * tc) + dc_next
        dgates[:, t, :H] = dc * g * i * (1.0 - i)
        dgates[:, t, H:2 * H] = dc * c_prev * f * (1.0 - f)
        dgates[:, t, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dgates[:, t, 3 * H:] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dh_next = dgates[:, t] @ U.T
    return dgates


def resample_means(xs, ys, valid):
    """Average 100-sample blocks into three frames (33, 33, 34 samples).

    A frame is invalid if any sample in its sub-window is invalid; invalid
    frames carry NaN coordinates.
    """
    n_blocks = len(xs) // 100
    n = n_blocks * 100
    if n_blocks == 0:
        return np.empty(0), np.empty(0), np.zeros(0, dtype=np.uint8)
    x = np.asarray(xs[:n], dtype=np.float64).reshape(n_blocks, 100)
    y = np.asarray(ys[:n], dtype=np.float64).reshape(n_blocks, 100)
    v = np.asarray(valid[:n], dtype=bool).reshape(n_blocks, 100)
    out_x = np.empty((n_blocks, 3))
    out_y = np.empty((n_blocks, 3))
    out_v = np.empty((n_blocks, 3), dtype=bool)
    for k, (lo, hi) in enumerate(((0, 33), (33, 66), (66, 100))):
        out_x[:, k] = x[:, lo:hi].mean(axis=1)
        out_y[:, k] = y[:, lo:hi].mean(axis=1)
        out_v[:, k] = v[:, lo:hi].all(axis=1)
    out_x[~out_v] = np.nan
    out_y[~out_v] = np.nan
    return out_x.ravel(), out_y.ravel(), out_v.ravel().astype(np.uint8)


def run_lengths(codes):
    """Fixation runs of a label-code sequence; negative codes are gaps.

    Returns ``(lengths, shifts)``: the length of every maximal run of one
    repeated label, and the number of label changes between adjacent
    labeled frames.
    """
    codes = np.asarray(codes, dtype=np.int64)
    if codes.size == 0:
        return np.zeros(0, dtype=np.int64), 0
    labeled = codes >= 0
    prev_same = np.zeros(codes.size, dtype=bool)
    prev_same[1:] = (codes[1:] == codes[:-1]) & labeled[1:] & labeled[:-1]
    starts = labeled & ~prev_same
    change = np.zeros(codes.size, dtype=bool)
    change[1:] = labeled[1:] & labeled[:-1] & (codes[1:] != codes[:-1])
    run_id = np.cumsum(starts) - 1
    lengths = np.bincount(run_id[labeled], minlength=int(starts.sum()))
    return lengths.astype(np.int64), int(change.sum())


def window_starts(valid, has_target, window):
    """Start indices s where frames s..s+window are valid and s+window has a target."""
    valid = np.asarray(valid, dtype=bool)
    has_target = np.asarray(has_target, dtype=bool)
    n = valid.size
    if n <= window:
        return np.zeros(0, dtype=np.int64)
    bad = np.concatenate([[0], np.cumsum(~valid)])
    s = np.arange(n - window)
    # frames s .. s+window inclusive, i.e. window inputs plus the target frame
    ok = (bad[s + window + 1] - bad[s]) == 0
    ok &= has_target[s + window]
    return s[ok].astype(np.int64)
