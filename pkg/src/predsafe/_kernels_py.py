"""NumPy implementations of the hot kernels.

These are the reference fallback used when the compiled ``_kernels`` extension
is unavailable (or disabled with ``PREDSAFE_PURE_PYTHON=1``).  Both versions
must agree to rounding on every input.
"""

import numpy as np


def clip_area(subjects, clips, clip_index):
    """Area of each subject quadrilateral intersected with a convex clip quad.

    Args:
        subjects: (N, 4, 2) subject polygons (any orientation, simple).
        clips: (M, 4, 2) convex clip polygons, counter-clockwise.
        clip_index: (N,) index into ``clips`` for each subject.

    Returns:
        (N,) intersection areas.
    """
    subjects = np.asarray(subjects, dtype=np.float64)
    clips = np.asarray(clips, dtype=np.float64)
    clip_index = np.asarray(clip_index, dtype=np.intp)
    n = subjects.shape[0]
    if n == 0:
        return np.zeros(0)

    poly = subjects.copy()
    count = np.full(n, 4, dtype=np.intp)
    rows = np.arange(n)
    c = clips[clip_index]

    for e in range(4):
        c0 = c[:, e]
        edge = c[:, (e + 1) % 4] - c0
        k = poly.shape[1]
        slots = np.zeros((n, 2 * k, 2))
        valid = np.zeros((n, 2 * k), dtype=bool)
        for i in range(k):
            live = i < count
            nxt_i = np.where(live, (i + 1) % np.maximum(count, 1), 0)
            cur = poly[:, i]
            nxt = poly[rows, nxt_i]
            s_cur = edge[:, 0] * (cur[:, 1] - c0[:, 1]) - edge[:, 1] * (cur[:, 0] - c0[:, 0])
            s_nxt = edge[:, 0] * (nxt[:, 1] - c0[:, 1]) - edge[:, 1] * (nxt[:, 0] - c0[:, 0])
            in_cur = s_cur >= 0.0
            in_nxt = s_nxt >= 0.0
            slots[:, 2 * i] = cur
            valid[:, 2 * i] = live & in_cur
            crossing = live & (in_cur != in_nxt)
            denom = np.where(crossing, s_cur - s_nxt, 1.0)
            u = np.where(crossing, s_cur / denom, 0.0)
            slots[:, 2 * i + 1] = cur + (nxt - cur) * u[:, None]
            valid[:, 2 * i + 1] = crossing
        order = np.argsort(~valid, axis=1, kind="stable")[:, : k + 1]
        poly = np.take_along_axis(slots, order[:, :, None], axis=1)
        count = np.minimum(valid.sum(axis=1), k + 1)
        # pad unused slots with the first vertex so the shoelace sum ignores them
        pad = np.arange(k + 1)[None, :] >= count[:, None]
        poly = np.where(pad[:, :, None], poly[:, :1], poly)

    x = poly[:, :, 0]
    y = poly[:, :, 1]
    xn = np.roll(x, -1, axis=1)
    yn = np.roll(y, -1, axis=1)
    area = 0.5 * np.abs(np.sum(x * yn - xn * y, axis=1))
    return np.where(count >= 3, area, 0.0)


def segment_products(ptr, cells, frac, values):
    """Per-segment product of ``1 - frac * values[cells]``.

    Segment ``i`` spans ``ptr[i]:ptr[i + 1]``; empty segments yield 1.
    """
    ptr = np.asarray(ptr, dtype=np.intp)
    nseg = ptr.shape[0] - 1
    if nseg <= 0:
        return np.ones(0)
    factors = 1.0 - np.asarray(frac, dtype=np.float64) * np.asarray(values, dtype=np.float64)[cells]
    factors = np.append(factors, 1.0)
    out = np.multiply.reduceat(factors, ptr[:-1])
    out[ptr[1:] == ptr[:-1]] = 1.0
    return out
