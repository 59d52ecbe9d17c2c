"""Queue-based reconstruction kernel (numba-compiled).

Hybrid algorithm: one forward raster scan, one backward raster scan that
also seeds a FIFO queue, then queue-driven propagation until no pixel can
grow further.  Produces the same fixpoint as iterating geodesic dilation
to stability, in roughly two passes plus local queue work instead of
O(propagation distance) full-image sweeps.

Pixels outside the ROI are never read or written by the scans; they keep
whatever value the caller pre-filled (min(marker, mask), matching the
naive method's copy-through behavior).
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _reconstruct_hybrid(result, mask, roi, offsets):  # pragma: no cover - jitted
    h, w = result.shape
    n_off = offsets.shape[0]

    # Forward raster scan: propagate from neighbors earlier in scan order.
    for r in range(h):
        for c in range(w):
            if not roi[r, c]:
                continue
            v = result[r, c]
            for k in range(n_off):
                dy = offsets[k, 0]
                dx = offsets[k, 1]
                if dy > 0 or (dy == 0 and dx > 0):
                    continue
                rr = r + dy
                cc = c + dx
                if 0 <= rr < h and 0 <= cc < w and roi[rr, cc]:
                    nv = result[rr, cc]
                    if nv > v:
                        v = nv
            m = mask[r, c]
            if v > m:
                v = m
            result[r, c] = v

    # Backward raster scan; seed the queue with pixels whose value could
    # still flow into an unsaturated neighbor.
    cap = h * w
    queue = np.empty(cap, dtype=np.int64)
    head = 0
    tail = 0
    for r in range(h - 1, -1, -1):
        for c in range(w - 1, -1, -1):
            if not roi[r, c]:
                continue
            v = result[r, c]
            for k in range(n_off):
                dy = offsets[k, 0]
                dx = offsets[k, 1]
                if dy < 0 or (dy == 0 and dx < 0):
                    continue
                rr = r + dy
                cc = c + dx
                if 0 <= rr < h and 0 <= cc < w and roi[rr, cc]:
                    nv = result[rr, cc]
                    if nv > v:
                        v = nv
            m = mask[r, c]
            if v > m:
                v = m
            result[r, c] = v
            for k in range(n_off):
                dy = offsets[k, 0]
                dx = offsets[k, 1]
                if dy < 0 or (dy == 0 and dx < 0):
                    continue
                rr = r + dy
                cc = c + dx
                if 0 <= rr < h and 0 <= cc < w and roi[rr, cc]:
                    if result[rr, cc] < v and result[rr, cc] < mask[rr, cc]:
                        if tail == queue.shape[0]:
                            grown = np.empty(queue.shape[0] * 2, dtype=np.int64)
                            grown[: tail - head] = queue[head:tail]
                            tail -= head
                            head = 0
                            queue = grown
                        queue[tail] = r * w + c
                        tail += 1
                        break

    # FIFO propagation.
    while head < tail:
        p = queue[head]
        head += 1
        r = p // w
        c = p - r * w
        v = result[r, c]
        for k in range(n_off):
            rr = r + offsets[k, 0]
            cc = c + offsets[k, 1]
            if 0 <= rr < h and 0 <= cc < w and roi[rr, cc]:
                cur = result[rr, cc]
                if cur < v and cur < mask[rr, cc]:
                    nv = v
                    m = mask[rr, cc]
                    if nv > m:
                        nv = m
                    result[rr, cc] = nv
                    if tail == queue.shape[0]:
                        if head > 0:
                            queue[: tail - head] = queue[head:tail]
                            tail -= head
                            head = 0
                        else:
                            grown = np.empty(queue.shape[0] * 2, dtype=np.int64)
                            grown[:tail] = queue[:tail]
                            queue = grown
                    queue[tail] = rr * w + cc
                    tail += 1
    return result


def reconstruct_queue(clipped_marker: np.ndarray, mask: np.ndarray,
                      roi: np.ndarray, offsets) -> np.ndarray:
    """Run the hybrid kernel. ``clipped_marker`` must already be <= mask."""
    result = np.ascontiguousarray(clipped_marker, dtype=np.float64).copy()
    mask = np.ascontiguousarray(mask, dtype=np.float64)
    roi = np.ascontiguousarray(roi, dtype=np.bool_)
    offs = np.asarray(offsets, dtype=np.int64).reshape(-1, 2)
    return _reconstruct_hybrid(result, mask, roi, offs)
