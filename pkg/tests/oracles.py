"""Independent brute-force references used by the tests."""
import math

import numpy as np

STEP = 1e-4  # 0.1 ms


def kernel_density(u, shape, bw):
    u = np.asarray(u, float)
    if shape == "gaussian":
        k = np.exp(-0.5 * (u / bw) ** 2) / (bw * math.sqrt(2 * math.pi))
        return np.where(np.abs(u) <= 4 * bw, k, 0.0)
    return np.where(np.abs(u) <= bw, (1 - np.abs(u) / bw) / bw, 0.0)


def smoothing_oracle(segments, total, fps, shape="gaussian", bw=0.03):
    """Riemann (midpoint, 0.1 ms) convolution of segment indicators.

    Segment boundaries on the 0.1 ms grid are classified exactly; time not
    covered by any segment counts as the neutral class.
    """
    n_tau = int(round(total / STEP))
    taus = (np.arange(n_tau) + 0.5) * STEP
    cls = np.zeros(n_tau, dtype=int)
    for s in segments:
        cls[(taus >= s.start) & (taus < s.end)] = s.viseme_id
    n = math.ceil(total * fps - 1e-9)
    out = np.zeros((n, 20))
    onehot = np.eye(20)[cls]
    for k in range(n):
        w = kernel_density(k / fps - taus, shape, bw)
        tot = w.sum()
        if tot * STEP < 1e-6:
            out[k, 0] = 1.0
        else:
            out[k] = (w @ onehot) / tot
    return out


def random_timeline(rng, max_segments=10, max_total_ms=2000, classes=range(20), gap_prob=0.3):
    """Random ms-aligned viseme timeline: (segments, total seconds)."""
    from maskface.viseme import VisemeSegment

    n = int(rng.integers(1, max_segments + 1))
    cuts = np.sort(rng.choice(np.arange(1, max_total_ms), size=2 * n, replace=False))
    total_ms = int(rng.integers(cuts[-1] + 1, max_total_ms + 1))
    classes = list(classes)
    segs, prev_end = [], None
    for i in range(n):
        a, b = int(cuts[2 * i]), int(cuts[2 * i + 1])
        if prev_end is not None and rng.random() > gap_prob:
            a = prev_end
        segs.append(VisemeSegment(int(rng.choice(classes)), a / 1000, b / 1000))
        prev_end = b
    return segs, total_ms / 1000


def expected_pure_frame(seg, fps, n):
    mid = 0.5 * (seg.start + seg.end)
    return min(range(n), key=lambda k: (abs(k / fps - mid), k))


def random_homography(rng, width=640.0, height=480.0):
    """Random well-conditioned projective map of a pixel-sized screen."""
    a = math.radians(rng.uniform(-30, 30))
    s = rng.uniform(0.6, 1.6)
    lin = s * np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    lin = lin @ np.array([[1, rng.uniform(-0.3, 0.3)], [0, rng.uniform(0.7, 1.3)]])
    h = np.eye(3)
    h[:2, :2] = lin
    h[:2, 2] = rng.uniform(-100, 100, 2)
    h[2, :2] = rng.uniform(-4e-4, 4e-4, 2)
    return h


def well_spread_quad(rng, width=640.0, height=480.0):
    base = np.array([[0, 0], [width, 0], [width, height], [0, height]], float)
    return base + rng.uniform(-0.15, 0.15, (4, 2)) * [width, height]


def apply_homography_naive(h, pts):
    out = []
    for x, y in pts:
        u = h[0, 0] * x + h[0, 1] * y + h[0, 2]
        v = h[1, 0] * x + h[1, 1] * y + h[1, 2]
        w = h[2, 0] * x + h[2, 1] * y + h[2, 2]
        out.append((u / w, v / w))
    return np.array(out)


def invert_by_sampling(forward, targets, lo, hi, step=4.0, iters=8):
    """Invert a 2-D map by dense grid search then finite-difference Newton.

    ``forward`` maps (n, 2) arrays; only forward evaluations are used.
    """
    xs = np.arange(lo[0], hi[0] + step / 2, step)
    ys = np.arange(lo[1], hi[1] + step / 2, step)
    gx, gy = np.meshgrid(xs, ys)
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    images = forward(grid)
    out = []
    for t in np.asarray(targets, float):
        q = grid[np.argmin(((images - t) ** 2).sum(axis=1))].copy()
        for _ in range(iters):
            f = forward(q[None])[0] - t
            eps = 1e-4
            jac = np.column_stack([
                (forward((q + [eps, 0])[None])[0] - forward((q - [eps, 0])[None])[0]) / (2 * eps),
                (forward((q + [0, eps])[None])[0] - forward((q - [0, eps])[None])[0]) / (2 * eps),
            ])
            q = q - np.linalg.solve(jac, f)
        out.append(q)
    return np.array(out)
