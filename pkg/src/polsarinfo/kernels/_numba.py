"""numba-compiled twins of the kernels in ``_numpy``.

Pixel loops use ``prange`` over rows; every pixel is computed independently,
so the output does not depend on the thread count.
"""
import math
import os

import numba
import numpy as np
from numba import njit, prange

from ._numpy import lee_masks

# Prefer OpenMP (thread-safe, so sweep cells may call kernels concurrently)
# and skip the TBB probe unless the user picked a layer themselves.
if not {"NUMBA_THREADING_LAYER", "NUMBA_THREADING_LAYER_PRIORITY"} & set(os.environ):
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_ROW = np.uint64(0xD1B54A32D192ED03)
_COL = np.uint64(0x8CB92BA72F3D8DD7)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO_M53 = 2.0 ** -53
_TWO_PI = 2.0 * math.pi


@njit(cache=True, parallel=True)
def _box_sum(planes, w):
    rows, cols, nch = planes.shape
    h = w // 2
    vert = np.zeros((rows, cols, nch))
    for y in prange(rows):
        y0 = max(0, y - h)
        y1 = min(rows, y + h + 1)
        for yy in range(y0, y1):
            for x in range(cols):
                for c in range(nch):
                    vert[y, x, c] += planes[yy, x, c]
    sums = np.zeros((rows, cols, nch))
    counts = np.empty((rows, cols))
    for y in prange(rows):
        ny = min(rows, y + h + 1) - max(0, y - h)
        for x in range(cols):
            x0 = max(0, x - h)
            x1 = min(cols, x + h + 1)
            for xx in range(x0, x1):
                for c in range(nch):
                    sums[y, x, c] += vert[y, xx, c]
            counts[y, x] = ny * (x1 - x0)
    return sums, counts


def box_sum(planes, w):
    """Clipped w x w window sums of a (rows, cols, channels) stack."""
    return _box_sum(np.ascontiguousarray(planes, dtype=np.float64), int(w))


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(inline="always")
def _uniform(key, counter):
    u = _mix64(key + counter * _GOLDEN)
    return (np.float64(u >> _S11) + 1.0) * _TWO_M53


@njit(cache=True, parallel=True)
def _scene_draws(seed_key, chol, class_index, looks):
    rows, cols = class_index.shape
    diag = np.zeros((rows, cols, 3))
    off = np.zeros((rows, cols, 3), dtype=np.complex128)
    k0 = _mix64(seed_key ^ _GOLDEN)
    inv_n = 1.0 / looks
    for y in prange(rows):
        ky = _mix64(k0 + np.uint64(y) * _ROW)
        g = np.empty(3, dtype=np.complex128)
        for x in range(cols):
            k = class_index[y, x]
            if k < 0:
                continue
            key = _mix64(ky + np.uint64(x) * _COL)
            L = chol[k]
            a0 = 0.0
            a1 = 0.0
            a2 = 0.0
            c01 = 0j
            c02 = 0j
            c12 = 0j
            for d in range(looks):
                for c in range(3):
                    base = np.uint64(6 * d + 2 * c)
                    u1 = _uniform(key, base + _ONE)
                    u2 = _uniform(key, base + _ONE + _ONE)
                    rad = math.sqrt(-math.log(u1))
                    th = _TWO_PI * u2
                    g[c] = complex(rad * math.cos(th), rad * math.sin(th))
                s0 = L[0, 0] * g[0]
                s1 = L[1, 0] * g[0] + L[1, 1] * g[1]
                s2 = L[2, 0] * g[0] + L[2, 1] * g[1] + L[2, 2] * g[2]
                a0 += s0.real * s0.real + s0.imag * s0.imag
                a1 += s1.real * s1.real + s1.imag * s1.imag
                a2 += s2.real * s2.real + s2.imag * s2.imag
                c01 += s0 * s1.conjugate()
                c02 += s0 * s2.conjugate()
                c12 += s1 * s2.conjugate()
            diag[y, x, 0] = a0 * inv_n
            diag[y, x, 1] = a1 * inv_n
            diag[y, x, 2] = a2 * inv_n
            off[y, x, 0] = c01 * inv_n
            off[y, x, 1] = c02 * inv_n
            off[y, x, 2] = c12 * inv_n
    return diag, off


def scene_draws(seed, chol, class_index, looks):
    """Multilook sample covariances from counter-based complex Gaussian draws."""
    return _scene_draws(
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
        np.ascontiguousarray(chol, dtype=np.complex128),
        np.ascontiguousarray(class_index, dtype=np.int64),
        int(looks),
    )


@njit(cache=True, parallel=True)
def _directional_lee(span, planes, w, looks, masks):
    rows, cols = span.shape
    nch = planes.shape[2]
    h = w // 2
    step = (w - 3) // 2
    sig2 = 1.0 / looks

    pav = np.empty((rows, cols))
    for y in prange(rows):
        for x in range(cols):
            acc = 0.0
            cnt = 0
            for yy in range(max(0, y - 1), min(rows, y + 2)):
                for xx in range(max(0, x - 1), min(cols, x + 2)):
                    acc += span[yy, xx]
                    cnt += 1
            pav[y, x] = acc / cnt

    out = np.empty_like(planes)
    for y in prange(rows):
        p = np.empty((3, 3))
        mean_planes = np.empty(nch)
        for x in range(cols):
            for di in range(3):
                for dj in range(3):
                    yy = min(max(y + (di - 1) * step, 0), rows - 1)
                    xx = min(max(x + (dj - 1) * step, 0), cols - 1)
                    p[di, dj] = pav[yy, xx]
            g0 = (p[0, 2] + p[1, 2] + p[2, 2]) - (p[0, 0] + p[1, 0] + p[2, 0])
            g1 = (p[2, 0] + p[2, 1] + p[2, 2]) - (p[0, 0] + p[0, 1] + p[0, 2])
            g2 = (p[1, 2] + p[2, 1] + p[2, 2]) - (p[0, 0] + p[0, 1] + p[1, 0])
            g3 = (p[1, 0] + p[2, 0] + p[2, 1]) - (p[0, 1] + p[0, 2] + p[1, 2])
            direction = 0
            best = abs(g0)
            if abs(g1) > best:
                direction = 1
                best = abs(g1)
            if abs(g2) > best:
                direction = 2
                best = abs(g2)
            if abs(g3) > best:
                direction = 3

            # span mean over both candidate masks; the closer one to pav wins
            chosen = 2 * direction
            dist_first = 0.0
            for cand in range(2):
                k = 2 * direction + cand
                acc = 0.0
                cnt = 0
                for i in range(-h, h + 1):
                    yy = y + i
                    if yy < 0 or yy >= rows:
                        continue
                    for j in range(-h, h + 1):
                        xx = x + j
                        if xx < 0 or xx >= cols or not masks[k, i + h, j + h]:
                            continue
                        acc += span[yy, xx]
                        cnt += 1
                dist = abs(acc / cnt - pav[y, x])
                if cand == 0:
                    dist_first = dist
                elif dist < dist_first:
                    chosen = k

            s1 = 0.0
            s2 = 0.0
            cnt = 0
            for c in range(nch):
                mean_planes[c] = 0.0
            for i in range(-h, h + 1):
                yy = y + i
                if yy < 0 or yy >= rows:
                    continue
                for j in range(-h, h + 1):
                    xx = x + j
                    if xx < 0 or xx >= cols or not masks[chosen, i + h, j + h]:
                        continue
                    v = span[yy, xx]
                    s1 += v
                    s2 += v * v
                    cnt += 1
                    for c in range(nch):
                        mean_planes[c] += planes[yy, xx, c]
            mu = s1 / cnt
            var = s2 / cnt - mu * mu
            b = 0.0
            if var > 0.0:
                b = max(0.0, (var - sig2 * mu * mu) / ((1.0 + sig2) * var))
            for c in range(nch):
                m = mean_planes[c] / cnt
                out[y, x, c] = m + b * (planes[y, x, c] - m)
    return out


def directional_lee(span, planes, w, looks):
    """Refined Lee filter with edge-aligned windows (w >= 5)."""
    return _directional_lee(
        np.ascontiguousarray(span, dtype=np.float64),
        np.ascontiguousarray(planes, dtype=np.float64),
        int(w),
        float(looks),
        lee_masks(int(w)),
    )


@njit(cache=True)
def _smo_solve(K, r, C, tol, max_iter):
    n = r.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    converged = False
    it = 0
    while it < max_iter:
        i = -1
        j = -1
        vmax = -np.inf
        vmin = np.inf
        for t in range(n):
            v = -r[t] * G[t]
            if (r[t] > 0 and alpha[t] < C) or (r[t] < 0 and alpha[t] > 0):
                if v > vmax:
                    vmax = v
                    i = t
            if (r[t] < 0 and alpha[t] < C) or (r[t] > 0 and alpha[t] > 0):
                if v < vmin:
                    vmin = v
                    j = t
        if i < 0 or j < 0 or vmax - vmin < tol:
            converged = True
            break
        it += 1
        ai = alpha[i]
        aj = alpha[j]
        qij = r[i] * r[j] * K[i, j]
        if r[i] != r[j]:
            quad = K[i, i] + K[j, j] + 2.0 * qij
            if quad <= 0.0:
                quad = 1e-12
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni = ai + delta
            nj = aj + delta
            if diff > 0.0:
                if nj < 0.0:
                    nj = 0.0
                    ni = diff
            elif ni < 0.0:
                ni = 0.0
                nj = -diff
            if diff > 0.0:
                if ni > C:
                    ni = C
                    nj = C - diff
            elif nj > C:
                nj = C
                ni = C + diff
        else:
            quad = K[i, i] + K[j, j] - 2.0 * qij
            if quad <= 0.0:
                quad = 1e-12
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni = ai - delta
            nj = aj + delta
            if total > C:
                if ni > C:
                    ni = C
                    nj = total - C
            elif nj < 0.0:
                nj = 0.0
                ni = total
            if total > C:
                if nj > C:
                    nj = C
                    ni = total - C
            elif ni < 0.0:
                ni = 0.0
                nj = total
        alpha[i] = ni
        alpha[j] = nj
        dai = ni - ai
        daj = nj - aj
        for t in range(n):
            G[t] += (r[i] * r[t] * K[i, t]) * dai + (r[j] * r[t] * K[j, t]) * daj

    nfree = 0
    sfree = 0.0
    ub = np.inf
    lb = -np.inf
    for t in range(n):
        yG = r[t] * G[t]
        if alpha[t] >= C:
            if r[t] < 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        elif alpha[t] <= 0.0:
            if r[t] > 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        else:
            nfree += 1
            sfree += yG
    if nfree > 0:
        bias = -sfree / nfree
    else:
        bias = -(ub + lb) / 2.0
    return alpha, bias, it, converged


def smo_solve(K, r, C, tol, max_iter):
    """Sequential minimal optimisation of the soft-margin SVM dual."""
    alpha, bias, it, converged = _smo_solve(
        np.ascontiguousarray(K, dtype=np.float64),
        np.ascontiguousarray(r, dtype=np.float64),
        float(C),
        float(tol),
        int(max_iter),
    )
    return alpha, float(bias), int(it), bool(converged)


@njit(cache=True, parallel=True)
def _rbf_matrix(X, Y, gamma):
    n = X.shape[0]
    m = Y.shape[0]
    p = X.shape[1]
    out = np.empty((n, m))
    for a in prange(n):
        for b in range(m):
            d2 = 0.0
            for k in range(p):
                d = X[a, k] - Y[b, k]
                d2 += d * d
            out[a, b] = math.exp(-gamma * d2)
    return out


def rbf_matrix(X, Y, gamma):
    """exp(-gamma * ||x - y||^2) for every row pair of X and Y."""
    return _rbf_matrix(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(Y, dtype=np.float64),
        float(gamma),
    )


@njit(cache=True, parallel=True)
def _decision_values(X, sv, coef, gamma, bias):
    n = X.shape[0]
    m = sv.shape[0]
    p = X.shape[1]
    out = np.empty(n)
    for a in prange(n):
        acc = 0.0
        for b in range(m):
            d2 = 0.0
            for k in range(p):
                d = X[a, k] - sv[b, k]
                d2 += d * d
            acc += coef[b] * math.exp(-gamma * d2)
        out[a] = acc + bias
    return out


def decision_values(X, sv, coef, gamma, bias):
    """sum_i coef_i K(sv_i, x) + bias for every row x of X."""
    return _decision_values(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(sv, dtype=np.float64).reshape(-1, np.shape(X)[1]),
        np.ascontiguousarray(coef, dtype=np.float64),
        float(gamma),
        float(bias),
    )
