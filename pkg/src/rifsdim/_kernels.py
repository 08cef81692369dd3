"""numba inner loops for log-scaled products along random letter sequences.

Vectors are kept with their largest entry in [1/2, 1) by multiplying with
powers of two every ``every`` steps, so the scaling is exact and the
accumulated binary exponent is an integer.
"""

import math

import numba as nb
import numpy as np

LEFTMOST, RIGHTMOST, RANDOM, FIXED, MAX_BLOCK, MIN_BLOCK = 0, 1, 2, 3, 4, 5


@nb.njit(cache=True)
def _renorm(v, k):
    mx = 0.0
    for i in range(k):
        if v[i] > mx:
            mx = v[i]
    if mx == 0.0:
        return 0
    _, e = math.frexp(mx)
    s = math.ldexp(1.0, -e)
    for i in range(k):
        v[i] *= s
    return e


@nb.njit(cache=True)
def matrix_product_log2(mats, letters, every):
    """(E, s) with 1^T A_{w_1} ... A_{w_n} 1 = s * 2**E."""
    nn = mats.shape[1]
    v = np.ones(nn)
    w = np.empty(nn)
    exp2 = 0
    for t in range(letters.shape[0]):
        a = mats[letters[t]]
        for u in range(nn):
            acc = 0.0
            for i in range(nn):
                acc += v[i] * a[i, u]
            w[u] = acc
        v, w = w, v
        if (t + 1) % every == 0:
            exp2 += _renorm(v, nn)
    return exp2, v.sum()


@nb.njit(cache=True)
def _step(v, k, mats, e, kc, w):
    for u in range(kc):
        acc = 0.0
        for i in range(k):
            acc += v[i] * mats[e, i, u]
        w[u] = acc


@nb.njit(cache=True)
def _best_window(node, v, k, letters, t0, length, nbr, e_start, e_end, e_child, mats,
                 maximize, out):
    """Exhaustive search of the child path over ``length`` letters; fills ``out``.

    Returns False when every path dies before the window ends.
    """
    maxj = mats.shape[1]
    vecs = np.zeros((length + 1, maxj))
    nodes = np.empty(length + 1, np.int64)
    cur = np.empty(length, np.int64)
    stop = np.empty(length, np.int64)
    for i in range(k):
        vecs[0, i] = v[i]
    nodes[0] = node
    best = -1.0
    found = False
    d = 0
    cur[0] = e_start[node, letters[t0]]
    stop[0] = e_end[node, letters[t0]]
    while d >= 0:
        if cur[d] >= stop[d]:
            d -= 1
            if d >= 0:
                cur[d] += 1
            continue
        e = cur[d]
        child = e_child[e]
        kc = nbr[child]
        _step(vecs[d], nbr[nodes[d]], mats, e, kc, vecs[d + 1])
        nodes[d + 1] = child
        if d + 1 == length:
            score = 0.0
            for u in range(kc):
                score += vecs[length, u]
            better = (not found) or (score > best if maximize else score < best)
            if better:
                best = score
                found = True
                for i in range(length):
                    out[i] = cur[i]
            cur[d] += 1
        else:
            d += 1
            cur[d] = e_start[child, letters[t0 + d]]
            stop[d] = e_end[child, letters[t0 + d]]
    return found


@nb.njit(cache=True)
def walk_log2(start, v0, nbr, e_start, e_end, e_child, mats, letters, uniforms,
              mode_before, mode_after, switch, fixed, window_end, every):
    """Walk the graph along ``letters``; returns (E, s, steps before the switch, t_dead).

    ``mode_before`` applies until the walk reaches a node with ``switch``
    set, ``mode_after`` from then on.  For block modes ``window_end[t]``
    marks the last step of each search window.  ``t_dead`` is -1, or the
    step at which the current node had no child for the letter.
    """
    n = letters.shape[0]
    maxj = mats.shape[1]
    v = np.zeros(maxj)
    w = np.zeros(maxj)
    node = start
    k = nbr[node]
    for i in range(k):
        v[i] = v0[i]
    exp2 = 0
    plan = np.empty(n, np.int64)
    plan_upto = -1
    switched = switch[node]
    lead = 0 if switched else -1
    for t in range(n):
        mode = mode_after if switched else mode_before
        j = letters[t]
        a = e_start[node, j]
        b = e_end[node, j]
        if a == b:
            return exp2, 0.0, lead, t
        if mode == LEFTMOST:
            e = a
        elif mode == RIGHTMOST:
            e = b - 1
        elif mode == FIXED:
            e = a + fixed[t]
        elif mode == RANDOM:
            tot = 0.0
            for c in range(a, b):
                kc = nbr[e_child[c]]
                for u in range(kc):
                    for i in range(k):
                        tot += v[i] * mats[c, i, u]
            target = uniforms[t] * tot
            e = b - 1
            acc = 0.0
            for c in range(a, b):
                kc = nbr[e_child[c]]
                for u in range(kc):
                    for i in range(k):
                        acc += v[i] * mats[c, i, u]
                if acc > target:
                    e = c
                    break
        else:
            if t > plan_upto:
                stop = t
                while not window_end[stop]:
                    stop += 1
                if not _best_window(node, v, k, letters, t, stop - t + 1, nbr, e_start, e_end,
                                    e_child, mats, mode == MAX_BLOCK, plan[t:stop + 1]):
                    return exp2, 0.0, lead, t
                plan_upto = stop
            e = plan[t]
        child = e_child[e]
        kc = nbr[child]
        _step(v, k, mats, e, kc, w)
        for u in range(kc):
            v[u] = w[u]
        for u in range(kc, maxj):
            v[u] = 0.0
        node = child
        k = kc
        if (t + 1) % every == 0:
            exp2 += _renorm(v, k)
        if not switched and switch[node]:
            switched = True
            lead = t + 1
            plan_upto = t  # restart block search at the switch
    tot = 0.0
    for i in range(k):
        tot += v[i]
    return exp2, tot, lead, -1
