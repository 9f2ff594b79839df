"""Exact maximum-weight matching on dense general graphs (blossom algorithm).

Array-based primal-dual implementation, O(n^3) over a complete weight
matrix. Node ids are 1-based; ids above ``n`` denote contracted blossoms,
id 0 is the null node. Edge weights are doubled inside the dual system so
that all half-updates stay exact in binary floating point; the remaining
rounding is absorbed by an absolute slack tolerance scaled to the weight
range. All functions are compiled with numba when it is available and run
as plain Python otherwise (identical results, much slower).

The solver is deterministic: ties between equally slack edges are resolved
by fixed scan order, so equal-weight optima resolve as a pure function of
the input ordering.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

_JIT = dict(cache=True, nogil=True)


@njit(**_JIT)
def _edge_delta(lab, gw, gu, gv, i, j):
    # Slack of the representative edge between nodes i and j (doubled weights).
    return lab[gu[i, j]] + lab[gv[i, j]] - 2.0 * gw[i, j]


@njit(**_JIT)
def _slack_cur(slack_adj, S, acc, x):
    # Current slack of the cached best edge into x. Dual rounds shift every
    # candidate edge for a fixed target uniformly, so one accumulator per
    # status class keeps the cache exact between resets.
    k = 1.0 if S[x] == -1 else 2.0
    return slack_adj[x] - k * acc[0]


@njit(**_JIT)
def _store_slack(slack_src, slack_adj, S, acc, x, u, delta_cur):
    k = 1.0 if S[x] == -1 else 2.0
    slack_src[x] = u
    slack_adj[x] = delta_cur + k * acc[0]


@njit(**_JIT)
def _update_slack(lab, gw, gu, gv, slack_src, slack_adj, S, acc, u, x, delta_cur):
    if slack_src[x] == 0 or delta_cur < _slack_cur(slack_adj, S, acc, x):
        _store_slack(slack_src, slack_adj, S, acc, x, u, delta_cur)


@njit(**_JIT)
def _set_slack(lab, gw, gu, gv, slack_src, slack_adj, st, S, acc, n, x):
    slack_src[x] = 0
    for u in range(1, n + 1):
        if gw[u, x] > 0.0 and st[u] != x and S[st[u]] == 0:
            delta_cur = _edge_delta(lab, gw, gu, gv, u, x)
            _update_slack(
                lab, gw, gu, gv, slack_src, slack_adj, S, acc, u, x, delta_cur
            )


@njit(**_JIT)
def _q_push(queue, qtail, flower, flower_len, scratch, n, x):
    # Push all real vertices contained in node x onto the BFS queue.
    top = 0
    scratch[top] = x
    top += 1
    while top > 0:
        top -= 1
        y = scratch[top]
        if y <= n:
            queue[qtail[0]] = y
            qtail[0] += 1
        else:
            for k in range(flower_len[y]):
                scratch[top] = flower[y, k]
                top += 1


@njit(**_JIT)
def _set_st(st, flower, flower_len, scratch, n, x, b):
    # Mark every node contained in x (inclusive) as belonging to top node b.
    top = 0
    scratch[top] = x
    top += 1
    while top > 0:
        top -= 1
        y = scratch[top]
        st[y] = b
        if y > n:
            for k in range(flower_len[y]):
                scratch[top] = flower[y, k]
                top += 1


@njit(**_JIT)
def _get_pr(flower, flower_len, b, xr):
    pr = 0
    for k in range(flower_len[b]):
        if flower[b, k] == xr:
            pr = k
            break
    if pr % 2 == 1:
        # Reverse flower[b][1:] so the path to xr has even length.
        lo = 1
        hi = flower_len[b] - 1
        while lo < hi:
            tmp = flower[b, lo]
            flower[b, lo] = flower[b, hi]
            flower[b, hi] = tmp
            lo += 1
            hi -= 1
        return flower_len[b] - pr
    return pr


@njit(**_JIT)
def _set_match(match, gw, gu, gv, flower, flower_len, flower_from, rotbuf, n, u, v):
    match[u] = gv[u, v]
    if u > n:
        xr = flower_from[u, gu[u, v]]
        pr = _get_pr(flower, flower_len, u, xr)
        for i in range(pr):
            _set_match(
                match, gw, gu, gv, flower, flower_len, flower_from, rotbuf, n,
                flower[u, i], flower[u, i ^ 1],
            )
        _set_match(
            match, gw, gu, gv, flower, flower_len, flower_from, rotbuf, n, xr, v
        )
        # Rotate so xr becomes the blossom base.
        ln = flower_len[u]
        for i in range(ln):
            rotbuf[i] = flower[u, (pr + i) % ln]
        for i in range(ln):
            flower[u, i] = rotbuf[i]


@njit(**_JIT)
def _augment(
    match, st, pa, gw, gu, gv, flower, flower_len, flower_from, rotbuf, n, u, v
):
    while True:
        xnv = st[match[u]]
        _set_match(
            match, gw, gu, gv, flower, flower_len, flower_from, rotbuf, n, u, v
        )
        if xnv == 0:
            return
        _set_match(
            match, gw, gu, gv, flower, flower_len, flower_from, rotbuf, n,
            xnv, st[pa[xnv]],
        )
        u = st[pa[xnv]]
        v = xnv


@njit(**_JIT)
def _get_lca(st, match, pa, vis, vtime, u, v):
    vtime[0] += 1
    t = vtime[0]
    while u != 0 or v != 0:
        if u != 0:
            if vis[u] == t:
                return u
            vis[u] = t
            u = st[match[u]]
            if u != 0:
                u = st[pa[u]]
        tmp = u
        u = v
        v = tmp
    return 0


@njit(**_JIT)
def _add_blossom(
    lab, gw, gu, gv, match, slack_src, slack_adj, acc, st, pa, S,
    flower, flower_len, flower_from, queue, qtail, scratch, nx, n, u, lca, v,
):
    b = n + 1
    while b <= nx[0] and st[b] != 0:
        b += 1
    if b > nx[0]:
        nx[0] = b
    lab[b] = 0.0
    S[b] = 0
    match[b] = match[lca]
    ln = 0
    flower[b, ln] = lca
    ln += 1
    x = u
    while x != lca:
        flower[b, ln] = x
        ln += 1
        y = st[match[x]]
        flower[b, ln] = y
        ln += 1
        _q_push(queue, qtail, flower, flower_len, scratch, n, y)
        x = st[pa[y]]
    # Reverse flower[b][1:ln] so the u-side path runs from lca outward.
    lo = 1
    hi = ln - 1
    while lo < hi:
        tmp = flower[b, lo]
        flower[b, lo] = flower[b, hi]
        flower[b, hi] = tmp
        lo += 1
        hi -= 1
    x = v
    while x != lca:
        flower[b, ln] = x
        ln += 1
        y = st[match[x]]
        flower[b, ln] = y
        ln += 1
        _q_push(queue, qtail, flower, flower_len, scratch, n, y)
        x = st[pa[y]]
    flower_len[b] = ln
    _set_st(st, flower, flower_len, scratch, n, b, b)
    for x in range(1, nx[0] + 1):
        gw[b, x] = 0.0
        gw[x, b] = 0.0
    for x in range(1, n + 1):
        flower_from[b, x] = 0
    for k in range(ln):
        xs = flower[b, k]
        for x in range(1, nx[0] + 1):
            if gw[xs, x] > 0.0 and (
                gw[b, x] == 0.0
                or _edge_delta(lab, gw, gu, gv, xs, x)
                < _edge_delta(lab, gw, gu, gv, b, x)
            ):
                gw[b, x] = gw[xs, x]
                gu[b, x] = gu[xs, x]
                gv[b, x] = gv[xs, x]
                gw[x, b] = gw[x, xs]
                gu[x, b] = gu[x, xs]
                gv[x, b] = gv[x, xs]
        for x in range(1, n + 1):
            if flower_from[xs, x] != 0:
                flower_from[b, x] = xs
    _set_slack(lab, gw, gu, gv, slack_src, slack_adj, st, S, acc, n, b)


@njit(**_JIT)
def _expand_blossom(
    lab, gw, gu, gv, slack_src, slack_adj, acc, st, pa, S,
    flower, flower_len, flower_from, queue, qtail, scratch, n, b,
):
    for k in range(flower_len[b]):
        c = flower[b, k]
        _set_st(st, flower, flower_len, scratch, n, c, c)
    xr = flower_from[b, gu[b, pa[b]]]
    pr = _get_pr(flower, flower_len, b, xr)
    i = 0
    while i < pr:
        xs = flower[b, i]
        xns = flower[b, i + 1]
        pa[xs] = gu[xns, xs]
        S[xs] = 1
        S[xns] = 0
        slack_src[xs] = 0
        _set_slack(lab, gw, gu, gv, slack_src, slack_adj, st, S, acc, n, xns)
        _q_push(queue, qtail, flower, flower_len, scratch, n, xns)
        i += 2
    S[xr] = 1
    pa[xr] = pa[b]
    for k in range(pr + 1, flower_len[b]):
        xs = flower[b, k]
        S[xs] = -1
        _set_slack(lab, gw, gu, gv, slack_src, slack_adj, st, S, acc, n, xs)
    st[b] = 0
    flower_len[b] = 0


@njit(**_JIT)
def _on_found_edge(
    lab, gw, gu, gv, match, slack_src, slack_adj, acc, st, pa, S, vis, vtime,
    flower, flower_len, flower_from, queue, qtail, scratch, rotbuf, nx, n, eu, ev,
):
    u = st[eu]
    v = st[ev]
    if S[v] == -1:
        pa[v] = eu
        S[v] = 1
        nu = st[match[v]]
        slack_src[v] = 0
        slack_src[nu] = 0
        S[nu] = 0
        _q_push(queue, qtail, flower, flower_len, scratch, n, nu)
    elif S[v] == 0:
        lca = _get_lca(st, match, pa, vis, vtime, u, v)
        if lca == 0:
            _augment(
                match, st, pa, gw, gu, gv, flower, flower_len, flower_from,
                rotbuf, n, u, v,
            )
            _augment(
                match, st, pa, gw, gu, gv, flower, flower_len, flower_from,
                rotbuf, n, v, u,
            )
            return True
        _add_blossom(
            lab, gw, gu, gv, match, slack_src, slack_adj, acc, st, pa, S,
            flower, flower_len, flower_from, queue, qtail, scratch, nx, n,
            u, lca, v,
        )
    return False


@njit(**_JIT)
def _matching_phase(
    lab, gw, gu, gv, match, slack_src, slack_adj, acc, st, pa, S, vis, vtime,
    flower, flower_len, flower_from, queue, qtail, scratch, rotbuf, nx, n, tol,
):
    acc[0] = 0.0
    for x in range(1, nx[0] + 1):
        S[x] = -1
        slack_src[x] = 0
    qtail[0] = 0
    qhead = 0
    for x in range(1, nx[0] + 1):
        if st[x] == x and match[x] == 0:
            pa[x] = 0
            S[x] = 0
            _q_push(queue, qtail, flower, flower_len, scratch, n, x)
    if qtail[0] == 0:
        return False
    while True:
        while qhead < qtail[0]:
            u = queue[qhead]
            qhead += 1
            if S[st[u]] == 1:
                continue
            lab_u = lab[u]
            for v in range(1, n + 1):
                w = gw[u, v]
                if w > 0.0 and st[u] != st[v]:
                    # Real-real entries keep their original endpoints, so the
                    # slack can be computed without the representative lookup.
                    delta = lab_u + lab[v] - 2.0 * w
                    if delta <= tol:
                        if _on_found_edge(
                            lab, gw, gu, gv, match, slack_src, slack_adj, acc, st, pa, S,
                            vis, vtime, flower, flower_len, flower_from,
                            queue, qtail, scratch, rotbuf, nx, n, u, v,
                        ):
                            return True
                    else:
                        _update_slack(
                            lab, gw, gu, gv, slack_src, slack_adj, S, acc,
                            u, st[v], delta,
                        )
        d = np.inf
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b and S[b] == 1:
                d = min(d, 0.5 * lab[b])
        for x in range(1, nx[0] + 1):
            if st[x] == x and slack_src[x] != 0:
                if S[x] == -1:
                    d = min(d, _slack_cur(slack_adj, S, acc, x))
                elif S[x] == 0:
                    d = min(d, 0.5 * _slack_cur(slack_adj, S, acc, x))
        if d == np.inf:
            return False
        if d < 0.0:
            d = 0.0
        for u in range(1, n + 1):
            if S[st[u]] == 0:
                if lab[u] <= d:
                    return False
                lab[u] -= d
            elif S[st[u]] == 1:
                lab[u] += d
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b:
                if S[b] == 0:
                    lab[b] += 2.0 * d
                elif S[b] == 1:
                    lab[b] -= 2.0 * d
        acc[0] += d
        qtail[0] = 0
        qhead = 0
        for x in range(1, nx[0] + 1):
            if (
                st[x] == x
                and slack_src[x] != 0
                and st[slack_src[x]] != x
                and _slack_cur(slack_adj, S, acc, x) <= tol
            ):
                if _on_found_edge(
                    lab, gw, gu, gv, match, slack_src, slack_adj, acc, st, pa, S, vis, vtime,
                    flower, flower_len, flower_from, queue, qtail, scratch,
                    rotbuf, nx, n,
                    gu[slack_src[x], x], gv[slack_src[x], x],
                ):
                    return True
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b and S[b] == 1 and lab[b] <= tol:
                _expand_blossom(
                    lab, gw, gu, gv, slack_src, slack_adj, acc, st, pa, S,
                    flower, flower_len, flower_from, queue, qtail, scratch, n, b,
                )


@njit(**_JIT)
def _max_weight_matching(weights):
    # weights: (n+1, n+1) float64, 1-indexed, 0 on diagonal/absent edges.
    n = weights.shape[0] - 1
    n2 = 2 * n + 1
    gw = np.zeros((n2, n2), np.float64)
    gu = np.zeros((n2, n2), np.int64)
    gv = np.zeros((n2, n2), np.int64)
    wmax = 0.0
    for u in range(1, n + 1):
        for v in range(1, n + 1):
            gu[u, v] = u
            gv[u, v] = v
            if u != v:
                gw[u, v] = weights[u, v]
                if gw[u, v] > wmax:
                    wmax = gw[u, v]
    lab = np.empty(n2, np.float64)
    lab[0] = np.inf
    for u in range(1, n2):
        lab[u] = wmax
    match = np.zeros(n2, np.int64)
    slack_src = np.zeros(n2, np.int64)
    slack_adj = np.zeros(n2, np.float64)
    acc = np.zeros(1, np.float64)
    st = np.zeros(n2, np.int64)
    for u in range(n + 1):
        st[u] = u
    pa = np.zeros(n2, np.int64)
    S = np.full(n2, -1, np.int64)
    vis = np.zeros(n2, np.int64)
    vtime = np.zeros(1, np.int64)
    flower = np.zeros((n2, n + 2), np.int64)
    flower_len = np.zeros(n2, np.int64)
    flower_from = np.zeros((n2, n + 1), np.int64)
    for u in range(1, n + 1):
        flower_from[u, u] = u
    queue = np.zeros(max(64, n * n * 4), np.int64)
    qtail = np.zeros(1, np.int64)
    scratch = np.empty(n2, np.int64)
    rotbuf = np.empty(n + 2, np.int64)
    nx = np.zeros(1, np.int64)
    nx[0] = n
    tol = 1e-10 * max(1.0, wmax)
    while _matching_phase(
        lab, gw, gu, gv, match, slack_src, slack_adj, acc, st, pa, S, vis, vtime,
        flower, flower_len, flower_from, queue, qtail, scratch, rotbuf, nx, n, tol,
    ):
        pass
    return match[1 : n + 1]


def min_weight_perfect_matching_pairs(dist: np.ndarray) -> list[tuple[int, int]]:
    """Exact minimum-weight perfect matching of a symmetric weight matrix.

    Flips weights to ``(wmax - w) + 1`` so every edge is strictly positive;
    on a complete graph with an even vertex count the maximum-weight
    matching of the flipped instance is then perfect and minimizes the
    original total weight. Returns pairs ``(i, j)`` with ``i < j``, sorted.
    """
    n = dist.shape[0]
    if n % 2 != 0:
        raise ValueError(f"need an even number of points, got {n}")
    if n == 0:
        return []
    wmax = float(dist.max())
    w = np.zeros((n + 1, n + 1))
    w[1:, 1:] = (wmax - dist) + 1.0
    np.fill_diagonal(w, 0.0)
    match = _max_weight_matching(w)
    pairs = []
    for i in range(n):
        j = int(match[i]) - 1
        if j < 0:
            raise RuntimeError("solver returned a non-perfect matching")
        if i < j:
            pairs.append((i, j))
    return pairs


def warm_up() -> None:
    """Trigger JIT compilation with a tiny instance (one-time cost)."""
    min_weight_perfect_matching_pairs(np.array([[0.0, 1.0], [1.0, 0.0]]))
