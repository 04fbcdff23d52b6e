"""Pure-numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_numba``. The two
agree to floating-point round-off; each is deterministic on its own.
"""
import numpy as np

# splitmix64 constants
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_ROW = np.uint64(0xD1B54A32D192ED03)
_COL = np.uint64(0x8CB92BA72F3D8DD7)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53

# largest number of (pixel, look) pairs materialised at once by scene_draws
_DRAW_CHUNK = 1 << 20


def _clip_bounds(length, w):
    h = w // 2
    idx = np.arange(length)
    lo = np.clip(idx - h, 0, length)
    hi = np.clip(idx + h + 1, 0, length)
    return lo, hi


def box_sum(planes, w):
    """Clipped w x w window sums of a (rows, cols, channels) stack.

    Returns ``(sums, counts)`` where ``counts[y, x]`` is the number of valid
    pixels inside the window centred on ``(y, x)``.
    """
    planes = np.asarray(planes, dtype=np.float64)
    rows, cols = planes.shape[:2]
    lo0, hi0 = _clip_bounds(rows, w)
    lo1, hi1 = _clip_bounds(cols, w)

    # separable: cumulative sums along one axis at a time keep magnitudes small
    cs = np.zeros((rows + 1,) + planes.shape[1:])
    np.cumsum(planes, axis=0, out=cs[1:])
    tmp = cs[hi0] - cs[lo0]
    cs = np.zeros((rows, cols + 1) + planes.shape[2:])
    np.cumsum(tmp, axis=1, out=cs[:, 1:])
    sums = cs[:, hi1] - cs[:, lo1]
    counts = np.outer(hi0 - lo0, hi1 - lo1).astype(np.float64)
    return sums, counts


def _mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


def _pixel_keys(seed, ys, xs):
    k0 = _mix64(np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _GOLDEN]))[0]
    ky = _mix64(k0 + ys.astype(np.uint64) * _ROW)
    return _mix64(ky + xs.astype(np.uint64) * _COL)


def scene_draws(seed, chol, class_index, looks):
    """Multilook sample covariances from counter-based complex Gaussian draws.

    ``chol`` is a (K, 3, 3) stack of lower Cholesky factors, ``class_index``
    a (rows, cols) int array indexing into it (-1 leaves the pixel at zero).
    Draw ``d`` of pixel ``(y, x)`` is the ``d``-th output of a splitmix64
    stream keyed by ``(seed, y, x)``, so results do not depend on traversal
    order. Returns ``(diag, off)`` with off-diagonals ordered 12, 13, 23.
    """
    rows, cols = class_index.shape
    diag = np.zeros((rows, cols, 3))
    off = np.zeros((rows, cols, 3), dtype=np.complex128)
    ys, xs = np.nonzero(class_index >= 0)
    if ys.size == 0:
        return diag, off
    keys = _pixel_keys(seed, ys, xs)
    counters = (np.arange(6 * looks, dtype=np.uint64) + np.uint64(1)) * _GOLDEN
    per_chunk = max(1, _DRAW_CHUNK // looks)
    inv_n = 1.0 / looks
    for start in range(0, ys.size, per_chunk):
        sl = slice(start, start + per_chunk)
        u = _mix64(keys[sl, None] + counters[None, :])
        u = ((u >> _S11).astype(np.float64) + 1.0) * _TWO_M53
        u = u.reshape(-1, looks, 3, 2)
        g = np.sqrt(-np.log(u[..., 0])) * np.exp(2j * np.pi * u[..., 1])
        L = chol[class_index[ys[sl], xs[sl]]]
        s = np.einsum("pij,pkj->pki", L, g)
        s0, s1, s2 = s[..., 0], s[..., 1], s[..., 2]
        y, x = ys[sl], xs[sl]
        diag[y, x, 0] = (s0.real ** 2 + s0.imag ** 2).sum(axis=1) * inv_n
        diag[y, x, 1] = (s1.real ** 2 + s1.imag ** 2).sum(axis=1) * inv_n
        diag[y, x, 2] = (s2.real ** 2 + s2.imag ** 2).sum(axis=1) * inv_n
        off[y, x, 0] = (s0 * s1.conj()).sum(axis=1) * inv_n
        off[y, x, 1] = (s0 * s2.conj()).sum(axis=1) * inv_n
        off[y, x, 2] = (s1 * s2.conj()).sum(axis=1) * inv_n
    return diag, off


def lee_masks(w):
    """The eight edge-aligned half windows of the refined Lee filter.

    Order: right, left, lower, upper, lower-right, upper-left, upper-right,
    lower-left. Pairs (0, 1), (2, 3), (4, 5), (6, 7) belong to edge
    directions 0..3. Each mask keeps the dividing line, so it holds
    w * (w + 1) / 2 pixels.
    """
    h = w // 2
    i, j = np.mgrid[-h:h + 1, -h:h + 1]
    return np.stack([
        j >= 0,
        j <= 0,
        i >= 0,
        i <= 0,
        i + j >= 0,
        i + j <= 0,
        j >= i,
        j <= i,
    ])


def _masked_sum(planes, mask):
    rows, cols = planes.shape[:2]
    h = mask.shape[0] // 2
    padded = np.zeros((rows + 2 * h, cols + 2 * h) + planes.shape[2:])
    padded[h:h + rows, h:h + cols] = planes
    out = np.zeros_like(planes)
    for di, dj in zip(*np.nonzero(mask)):
        out += padded[di:di + rows, dj:dj + cols]
    return out


def directional_lee(span, planes, w, looks):
    """Refined Lee filter with edge-aligned windows (w >= 5).

    Edge direction comes from 3x3 means of ``span`` sampled on a 3 x 3 grid
    with spacing (w - 3) / 2; of the two half windows aligned with the
    strongest edge, the one whose span mean is closer to the centre 3x3 mean
    is used for the MMSE update.
    """
    rows, cols = span.shape
    step = (w - 3) // 2
    sig2 = 1.0 / looks

    s3, c3 = box_sum(span[:, :, None], 3)
    pav = s3[:, :, 0] / c3

    yy, xx = np.mgrid[0:rows, 0:cols]

    def sample(di, dj):
        return pav[np.clip(yy + di * step, 0, rows - 1), np.clip(xx + dj * step, 0, cols - 1)]

    p = {(di, dj): sample(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)}
    grads = np.stack([
        (p[-1, 1] + p[0, 1] + p[1, 1]) - (p[-1, -1] + p[0, -1] + p[1, -1]),
        (p[1, -1] + p[1, 0] + p[1, 1]) - (p[-1, -1] + p[-1, 0] + p[-1, 1]),
        (p[0, 1] + p[1, 0] + p[1, 1]) - (p[-1, -1] + p[-1, 0] + p[0, -1]),
        (p[0, -1] + p[1, -1] + p[1, 0]) - (p[-1, 0] + p[-1, 1] + p[0, 1]),
    ])
    direction = np.argmax(np.abs(grads), axis=0)

    stack = np.concatenate([span[:, :, None], span[:, :, None] ** 2, planes], axis=2)
    ones = np.ones((rows, cols, 1))
    masks = lee_masks(w)
    sums = np.empty((8, rows, cols, stack.shape[2]))
    counts = np.empty((8, rows, cols))
    for k in range(8):
        sums[k] = _masked_sum(stack, masks[k])
        counts[k] = _masked_sum(ones, masks[k])[:, :, 0]
    means = sums / counts[..., None]

    first = 2 * direction
    second = first + 1
    d_first = np.abs(np.take_along_axis(means[..., 0], first[None], 0)[0] - pav)
    d_second = np.abs(np.take_along_axis(means[..., 0], second[None], 0)[0] - pav)
    choice = np.where(d_second < d_first, second, first)

    sel = np.take_along_axis(means, choice[None, :, :, None], 0)[0]
    mu = sel[:, :, 0]
    var = sel[:, :, 1] - mu ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        b = (var - sig2 * mu ** 2) / ((1.0 + sig2) * var)
    b = np.where(var > 0, np.maximum(b, 0.0), 0.0)
    mean_planes = sel[:, :, 2:]
    return mean_planes + b[:, :, None] * (planes - mean_planes)


def smo_solve(K, r, C, tol, max_iter):
    """Sequential minimal optimisation of the soft-margin SVM dual.

    Working pair: maximal KKT violators (first index on ties). Returns
    ``(alpha, bias, n_iter, converged)``.
    """
    n = r.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    QD = np.diag(K).copy()
    converged = False
    it = 0
    while it < max_iter:
        v = -r * G
        up = ((r > 0) & (alpha < C)) | ((r < 0) & (alpha > 0))
        low = ((r < 0) & (alpha < C)) | ((r > 0) & (alpha > 0))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, v, -np.inf)))
        j = int(np.argmin(np.where(low, v, np.inf)))
        if v[i] - v[j] < tol:
            converged = True
            break
        it += 1
        Qi = r[i] * r * K[i]
        Qj = r[j] * r * K[j]
        ai, aj = alpha[i], alpha[j]
        if r[i] != r[j]:
            quad = QD[i] + QD[j] + 2.0 * Qi[j]
            if quad <= 0.0:
                quad = 1e-12
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0.0:
                if nj < 0.0:
                    nj, ni = 0.0, diff
            elif ni < 0.0:
                ni, nj = 0.0, -diff
            if diff > 0.0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Qi[j]
            if quad <= 0.0:
                quad = 1e-12
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0.0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0.0:
                ni, nj = 0.0, total
        alpha[i], alpha[j] = ni, nj
        G += Qi * (ni - ai) + Qj * (nj - aj)
    return alpha, _bias(alpha, G, r, C), it, converged


def _bias(alpha, G, r, C):
    yG = r * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return -float(yG[free].mean())
    at_upper = alpha >= C
    ub_mask = (at_upper & (r < 0)) | (~at_upper & (r > 0))
    lb_mask = (at_upper & (r > 0)) | (~at_upper & (r < 0))
    ub = yG[ub_mask].min() if ub_mask.any() else np.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
    return -float((ub + lb) / 2.0)


def rbf_matrix(X, Y, gamma):
    """exp(-gamma * ||x - y||^2) for every row pair of X and Y."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    out = np.empty((X.shape[0], Y.shape[0]))
    chunk = max(1, (1 << 21) // max(1, Y.shape[0] * X.shape[1]))
    for start in range(0, X.shape[0], chunk):
        d = X[start:start + chunk, None, :] - Y[None, :, :]
        out[start:start + chunk] = np.exp(-gamma * np.einsum("ijk,ijk->ij", d, d))
    return out


def decision_values(X, sv, coef, gamma, bias):
    """sum_i coef_i K(sv_i, x) + bias for every row x of X."""
    if sv.shape[0] == 0:
        return np.full(X.shape[0], float(bias))
    return rbf_matrix(X, sv, gamma) @ coef + bias
