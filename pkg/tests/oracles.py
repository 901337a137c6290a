"""Brute-force reference implementations used as test oracles.

Written from the definitions with explicit loops so they share no code
with the modules under test.
"""
from collections import deque
import math

import numpy as np


def bilinear(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    in_h, in_w = plane.shape
    out = np.zeros((out_h, out_w))
    for i in range(out_h):
        for j in range(out_w):
            y = min(max((i + 0.5) * in_h / out_h - 0.5, 0.0), in_h - 1)
            x = min(max((j + 0.5) * in_w / out_w - 0.5, 0.0), in_w - 1)
            y0, x0 = int(math.floor(y)), int(math.floor(x))
            y1, x1 = min(y0 + 1, in_h - 1), min(x0 + 1, in_w - 1)
            fy, fx = y - y0, x - x0
            top = plane[y0, x0] * (1 - fx) + plane[y0, x1] * fx
            bottom = plane[y1, x0] * (1 - fx) + plane[y1, x1] * fx
            out[i, j] = top * (1 - fy) + bottom * fy
    return out


# ── Metrics ───────────────────────────────────────────────────────────────────


def sad(pred, gt, region=None):
    total = 0.0
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            if region is None or region[i, j]:
                total += abs(pred[i, j] - gt[i, j])
    return total / 1000.0


def mse(pred, gt, region=None):
    total, n = 0.0, 0
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            if region is None or region[i, j]:
                total += (pred[i, j] - gt[i, j]) ** 2
                n += 1
    return 1e3 * total / n if n else 0.0


def _gauss_kernels(sigma=1.4, truncate=4.0):
    r = int(truncate * sigma + 0.5)
    xs = np.arange(-r, r + 1, dtype=np.float64)
    phi = np.exp(-0.5 * xs ** 2 / sigma ** 2)
    phi /= phi.sum()
    return r, phi, -xs / sigma ** 2 * phi


def _convolve_axis(plane, kernel, r, axis):
    """out[i] = sum_x k(x) * in[i - x] with half-sample symmetric borders."""
    pad = [(0, 0), (0, 0)]
    pad[axis] = (r, r)
    padded = np.pad(plane, pad, mode="symmetric")
    out = np.zeros_like(plane)
    h, w = plane.shape
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for x in range(-r, r + 1):
                if axis == 0:
                    acc += kernel[x + r] * padded[i - x + r, j]
                else:
                    acc += kernel[x + r] * padded[i, j - x + r]
            out[i, j] = acc
    return out


def gradient_magnitude(plane, sigma=1.4, truncate=4.0):
    r, smooth, deriv = _gauss_kernels(sigma, truncate)
    gx = _convolve_axis(_convolve_axis(plane, smooth, r, 0), deriv, r, 1)
    gy = _convolve_axis(_convolve_axis(plane, deriv, r, 0), smooth, r, 1)
    return np.sqrt(gx ** 2 + gy ** 2)


def grad(pred, gt, region=None):
    diff = (gradient_magnitude(pred) - gradient_magnitude(gt)) ** 2
    total = 0.0
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            if region is None or region[i, j]:
                total += diff[i, j]
    return total * 0.1


def _flood(inside, seeds):
    """4-connected flood fill from seed pixels within `inside`."""
    h, w = inside.shape
    seen = np.zeros_like(inside, dtype=bool)
    queue = deque()
    for i, j in seeds:
        if inside[i, j] and not seen[i, j]:
            seen[i, j] = True
            queue.append((i, j))
    while queue:
        i, j = queue.popleft()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if 0 <= a < h and 0 <= b < w and inside[a, b] and not seen[a, b]:
                seen[a, b] = True
                queue.append((a, b))
    return seen


def source_region(pred, gt):
    """Largest 4-connected component of both-opaque pixels (first in raster order on ties)."""
    opaque = (pred >= 1.0) & (gt >= 1.0)
    claimed = np.zeros_like(opaque)
    best = np.zeros_like(opaque)
    for i in range(opaque.shape[0]):
        for j in range(opaque.shape[1]):
            if opaque[i, j] and not claimed[i, j]:
                comp = _flood(opaque, [(i, j)])
                claimed |= comp
                if comp.sum() > best.sum():
                    best = comp
    return best


def conn(pred, gt, region=None):
    omega = source_region(pred, gt)
    if not omega.any():
        return 0.0
    seeds = list(zip(*np.nonzero(omega)))
    level = np.full(pred.shape, 1.0)
    decided = np.zeros(pred.shape, dtype=bool)
    previous = 0.0
    for k in range(1, 11):
        theta = k / 10
        reached = _flood((pred >= theta) & (gt >= theta), seeds)
        newly = ~reached & ~decided
        level[newly] = previous
        decided |= newly
        previous = theta
    total = 0.0
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            if region is not None and not region[i, j]:
                continue
            dp = pred[i, j] - level[i, j]
            dg = gt[i, j] - level[i, j]
            phi_p = 1 - dp if dp >= 0.15 else 1.0
            phi_g = 1 - dg if dg >= 0.15 else 1.0
            total += abs(phi_p - phi_g)
    return total / 1000.0


# ── Pyramid ───────────────────────────────────────────────────────────────────


_TAPS = [1 / 16, 4 / 16, 6 / 16, 4 / 16, 1 / 16]


def _blur5(plane, gain=1.0):
    padded = np.pad(plane, 2, mode="reflect")
    h, w = plane.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc = 0.0
            for u in range(5):
                for v in range(5):
                    acc += _TAPS[u] * _TAPS[v] * padded[i + u, j + v]
            out[i, j] = gain * acc
    return out


def pyramid(plane, levels=5):
    out = []
    cur = plane
    for _ in range(levels - 1):
        small = _blur5(cur)[::2, ::2]
        up = np.zeros((2 * small.shape[0], 2 * small.shape[1]))
        for i in range(small.shape[0]):
            for j in range(small.shape[1]):
                up[2 * i, 2 * j] = small[i, j]
        expanded = _blur5(up, gain=4.0)[: cur.shape[0], : cur.shape[1]]
        out.append(cur - expanded)
        cur = small
    out.append(cur)
    return out


def laplacian(pred, gt, g, levels=5):
    pa = pyramid(pred * g, levels)
    pb = pyramid(gt * g, levels)
    return sum((2 ** k) * np.mean(np.abs(a - b)) for k, (a, b) in enumerate(zip(pa, pb)))


# ── Network primitives ────────────────────────────────────────────────────────


def conv2d(x, weights, bias):
    c_out, c_in, kh, kw = weights.shape
    _, h, w = x.shape
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    out = np.zeros((c_out, h, w))
    for o in range(c_out):
        for i in range(h):
            for j in range(w):
                acc = bias[o]
                for c in range(c_in):
                    for u in range(kh):
                        for v in range(kw):
                            a, b = i + u - ph, j + v - pw
                            if 0 <= a < h and 0 <= b < w:
                                acc += weights[o, c, u, v] * x[c, a, b]
                out[o, i, j] = acc
    return out


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))
