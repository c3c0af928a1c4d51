"""Central finite-difference checks of analytic parameter gradients."""
import numpy as np

STEP = 1e-5
# below this both sides are rounding noise: the true gradient is zero
ZERO_FLOOR = 1e-8


def _loss(model, X, y):
    return model.loss_and_grads(X, y)[0]


def fd_entry(model, X, y, name, idx, step=STEP):
    p = model.params[name]
    old = p[idx]
    p[idx] = old + step
    up = _loss(model, X, y)
    p[idx] = old - step
    down = _loss(model, X, y)
    p[idx] = old
    return (up - down) / (2 * step)


def fd_direction(model, X, y, name, direction, step=STEP):
    p = model.params[name]
    old = p.copy()
    p += step * direction
    up = _loss(model, X, y)
    p[...] = old - step * direction
    down = _loss(model, X, y)
    p[...] = old
    return (up - down) / (2 * step)


def check_block(model, X, y, name, grads, rng, max_entries=128):
    """Relative errors (entry-sample, directional) for one parameter block.

    Every entry is checked when the block is small; otherwise the entries
    with the largest analytic gradient plus a random sample. The directional
    derivative along a random unit vector covers the whole block at once.
    """
    g = grads[name]
    flat = g.ravel()
    if flat.size <= max_entries:
        picks = np.arange(flat.size)
    else:
        top = np.argsort(-np.abs(flat))[: max_entries // 2]
        rand = rng.choice(flat.size, max_entries - len(top), replace=False)
        picks = np.unique(np.concatenate([top, rand]))
    an = flat[picks]
    fd = np.array([fd_entry(model, X, y, name, np.unravel_index(i, g.shape)) for i in picks])
    denom = np.linalg.norm(an) + np.linalg.norm(fd)
    if max(np.abs(an).max(), np.abs(fd).max()) < ZERO_FLOOR:
        entry_err = 0.0
    else:
        entry_err = float(np.linalg.norm(an - fd) / denom)
    v = rng.normal(size=g.shape)
    v /= np.linalg.norm(v)
    d_an = float(np.sum(g * v))
    d_fd = fd_direction(model, X, y, name, v)
    ddenom = abs(d_an) + abs(d_fd)
    dir_err = 0.0 if max(abs(d_an), abs(d_fd)) < ZERO_FLOOR else abs(d_an - d_fd) / ddenom
    return entry_err, dir_err


def check_model(model, X, y, seed=0, max_entries=128):
    """``{block: (entry_err, dir_err)}`` over every parameter block."""
    rng = np.random.default_rng(seed)
    _, grads = model.loss_and_grads(X, y)
    return {name: check_block(model, X, y, name, grads, rng, max_entries) for name in model.params}
