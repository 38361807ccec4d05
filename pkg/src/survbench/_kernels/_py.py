"""Pure-numpy implementations of the hot kernels.

Each function mirrors its counterpart in ``_fast.pyx`` step for step (same
node order, same random draws), so both backends grow the same trees up to
floating-point summation order.
"""

import numpy as np

_MASK = (1 << 64) - 1


class SplitMix64:
    """Tiny counter-based generator shared with the compiled backend."""

    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n):
        return self.next() % n


def _partial_shuffle(rng, n, k):
    a = list(range(n))
    for i in range(k):
        j = i + rng.below(n - i)
        a[i], a[j] = a[j], a[i]
    return a[:k]


def _node_tables(kt, ev, idx):
    """Node-local event times and risk-set tables."""
    loc_ev = np.unique(kt[idx][ev[idx]] - 1)
    lk = np.searchsorted(loc_ev, kt[idx] - 1, side="right")
    tn = loc_ev.size
    cnt = np.bincount(lk, minlength=tn + 1).astype(float)
    n_at = np.cumsum(cnt[::-1])[::-1][1:]
    d = np.bincount(lk[ev[idx]] - 1, minlength=tn).astype(float) if tn else np.zeros(0)
    return loc_ev, lk, n_at, d


def _logrank_stats(cntL_rows, dL_rows, n_at, d):
    """Vectorised log-rank statistic for a batch of candidate left groups."""
    atL = np.cumsum(cntL_rows[:, :0:-1], axis=1)[:, ::-1]
    aR = n_at - atL
    dR = d - dL_rows
    num = ((dL_rows * aR - dR * atL) / n_at).sum(axis=1)
    denom = n_at * n_at * (n_at - 1.0)
    ok = n_at > 1
    var = np.where(ok, d * atL * aR * (n_at - d) / np.where(ok, denom, 1.0), 0.0).sum(axis=1)
    stat = np.zeros_like(num)
    pos = var > 0
    stat[pos] = np.abs(num[pos]) / np.sqrt(var[pos])
    return stat


def _best_logrank(X, kt, ev, idx, feats, min_leaf, max_cand, cand_cap_n, rng):
    n = idx.size
    loc_ev, lk, n_at, d = _node_tables(kt, ev, idx)
    tn = loc_ev.size
    evn = ev[idx]
    nev = int(evn.sum())
    best = (-1, 0.0, 0.0)
    for f in feats:
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        pos = np.flatnonzero(vs[1:] > vs[:-1]) + 1
        m = pos.size
        if n > cand_cap_n and m > max_cand:
            chosen = sorted(_partial_shuffle(rng, m, max_cand))
            pos = pos[chosen]
        if pos.size == 0:
            continue
        lko = lk[order]
        eo = evn[order]
        onehot = np.zeros((n, tn + 1))
        onehot[np.arange(n), lko] = 1.0
        cnt_cum = np.cumsum(onehot, axis=0)
        ev_rows = np.flatnonzero(eo)
        donehot = np.zeros((n, max(tn, 1)))
        donehot[ev_rows, lko[ev_rows] - 1] = 1.0
        d_cum = np.cumsum(donehot, axis=0)[:, :tn]
        nev_cum = np.cumsum(eo)
        rows = pos - 1
        ok = (pos >= min_leaf) & (n - pos >= min_leaf) & (nev_cum[rows] >= 1) & (nev - nev_cum[rows] >= 1)
        if not ok.any():
            continue
        pos, rows = pos[ok], rows[ok]
        stats = _logrank_stats(cnt_cum[rows], d_cum[rows], n_at, d)
        k = int(np.argmax(stats))
        if stats[k] > best[2]:
            s = pos[k]
            best = (int(f), 0.5 * (vs[s - 1] + vs[s]), float(stats[k]))
    return best


def grow_logrank_tree(X, kt, ev, samples, mtry, min_leaf, max_depth, max_cand, cand_cap_n, seed):
    """Grow one survival tree by log-rank splitting.

    Returns ``(feature, threshold, left, right, leaf_id, leaf_ptr, leaf_k, leaf_h)``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    kt = np.asarray(kt, dtype=np.int64)
    ev = np.asarray(ev, dtype=bool)
    p = X.shape[1]
    rng = SplitMix64(seed)
    feature, threshold, left, right, leaf_id = [-1], [0.0], [-1], [-1], [-1]
    leaf_ptr, leaf_k, leaf_h = [0], [], []
    stack = [(0, np.asarray(samples, dtype=np.int64), 0)]
    while stack:
        node, idx, depth = stack.pop()
        n = idx.size
        best = (-1, 0.0, 0.0)
        if (max_depth < 0 or depth < max_depth) and n >= 2 * min_leaf and ev[idx].sum() >= 2:
            feats = _partial_shuffle(rng, p, mtry)
            best = _best_logrank(X, kt, ev, idx, feats, min_leaf, max_cand, cand_cap_n, rng)
        if best[0] >= 0:
            f, thr = best[0], best[1]
            mask = X[idx, f] <= thr
            lnode, rnode = len(feature), len(feature) + 1
            for _ in range(2):
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                leaf_id.append(-1)
            feature[node], threshold[node] = f, thr
            left[node], right[node] = lnode, rnode
            stack.append((rnode, idx[~mask], depth + 1))
            stack.append((lnode, idx[mask], depth + 1))
        else:
            loc_ev, _, n_at, d = _node_tables(kt, ev, idx)
            leaf_id[node] = len(leaf_ptr) - 1
            leaf_k.extend(loc_ev.tolist())
            leaf_h.extend(np.cumsum(d / n_at).tolist() if loc_ev.size else [])
            leaf_ptr.append(len(leaf_k))
    return (
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(leaf_id, dtype=np.int64),
        np.array(leaf_ptr, dtype=np.int64),
        np.array(leaf_k, dtype=np.int64),
        np.array(leaf_h, dtype=np.float64),
    )


def apply_tree(X, feature, threshold, left, right):
    """Terminal node reached by each row of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = np.flatnonzero(feature[node] >= 0)
    while active.size:
        nd = node[active]
        go_left = X[active, feature[nd]] <= threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
        active = active[feature[node[active]] >= 0]
    return node


def best_ls_splits(X, order, node_of, target, n_nodes, min_leaf):
    """Best least-squares split for every active node of one tree level.

    ``order[:, f]`` lists rows sorted by feature ``f``; rows with
    ``node_of < 0`` are skipped. Returns per-node ``(feature, threshold,
    gain)`` with ``feature = -1`` where no split improves the fit.
    """
    X = np.asarray(X, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    p = X.shape[1]
    act = node_of >= 0
    cnt = np.bincount(node_of[act], minlength=n_nodes).astype(float)
    tot = np.bincount(node_of[act], weights=target[act], minlength=n_nodes)
    best_f = np.full(n_nodes, -1, dtype=np.int64)
    best_t = np.zeros(n_nodes)
    best_g = np.zeros(n_nodes)
    for f in range(p):
        o = order[:, f]
        o = o[node_of[o] >= 0]
        nd = node_of[o]
        grp = np.argsort(nd, kind="stable")
        o, nd = o[grp], nd[grp]
        v = X[o, f]
        y = target[o]
        starts = np.searchsorted(nd, np.arange(n_nodes))
        csum = np.cumsum(y)
        ccnt = np.arange(1, o.size + 1, dtype=float)
        base_s = np.where(starts > 0, csum[starts - 1], 0.0)[nd]
        base_c = starts[nd].astype(float)
        nl = ccnt - base_c
        sl = csum - base_s
        # a split after position r separates v[r] from v[r+1] within one node
        same_node = np.zeros(o.size, dtype=bool)
        same_node[:-1] = nd[1:] == nd[:-1]
        distinct = np.zeros(o.size, dtype=bool)
        distinct[:-1] = v[1:] > v[:-1]
        k = nd
        nr = cnt[k] - nl
        valid = same_node & distinct & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        r = np.flatnonzero(valid)
        kk = k[r]
        g = sl[r] ** 2 / nl[r] + (tot[kk] - sl[r]) ** 2 / nr[r] - tot[kk] ** 2 / cnt[kk]
        for node in np.unique(kk):
            sel = np.flatnonzero(kk == node)
            j = sel[np.argmax(g[sel])]
            if g[j] > best_g[node]:
                best_g[node] = g[j]
                best_f[node] = f
                best_t[node] = 0.5 * (v[r[j]] + v[r[j] + 1])
    return best_f, best_t, best_g


def concordance_counts(score, col, times, events):
    """Weighted count of concordant pairs and the number of comparable pairs.

    Subject ``i`` (with an observed event) is compared against every ``j``
    with ``t_j > t_i`` or ``t_j == t_i`` and ``j`` censored, using column
    ``col[i]`` of ``score`` for both subjects; higher score means higher
    risk. Tied scores contribute one half.
    """
    score = np.asarray(score, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=bool)
    col = np.asarray(col, dtype=np.int64)
    anchors = np.flatnonzero(events)
    conc = 0.0
    comp = 0
    for start in range(0, anchors.size, 256):
        a = anchors[start:start + 256]
        ti = times[a][:, None]
        comparable = (times[None, :] > ti) | ((times[None, :] == ti) & ~events[None, :])
        si = score[a, col[a]][:, None]
        sj = score[:, col[a]].T
        comp += int(comparable.sum())
        conc += float(((si > sj) & comparable).sum()) + 0.5 * float(((si == sj) & comparable).sum())
    return conc, comp
