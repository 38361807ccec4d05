# distutils: language = c++
"""Compiled kernels: log-rank tree growth, level-wise least-squares split
search and pairwise concordance counting.

Semantics match ``_py.py`` exactly; see the docstrings there.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdint cimport uint64_t, int64_t
from libcpp.vector cimport vector
from libcpp.pair cimport pair
from libcpp.algorithm cimport sort as cpp_sort

cnp.import_array()


cdef inline uint64_t _next(uint64_t* state) nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline int64_t _below(uint64_t* state, int64_t n) nogil:
    return <int64_t>(_next(state) % <uint64_t>n)


cdef void _partial_shuffle(uint64_t* state, vector[int64_t]& a, int64_t n, int64_t k) nogil:
    cdef int64_t i, j, tmp
    a.resize(n)
    for i in range(n):
        a[i] = i
    for i in range(k):
        j = i + _below(state, n - i)
        tmp = a[i]
        a[i] = a[j]
        a[j] = tmp
    a.resize(k)


cdef int64_t _upper_bound(vector[int64_t]& v, int64_t x) nogil:
    cdef int64_t lo = 0, hi = v.size(), mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if v[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef int64_t _node_tables(const int64_t[::1] kt, const unsigned char[::1] ev,
                          vector[int64_t]& idx, vector[int64_t]& loc_ev,
                          vector[int64_t]& lk, vector[double]& n_at,
                          vector[double]& d) nogil:
    cdef int64_t n = idx.size(), i, j, k, tn, prev
    cdef vector[int64_t] raw
    for i in range(n):
        if ev[idx[i]]:
            raw.push_back(kt[idx[i]] - 1)
    cpp_sort(raw.begin(), raw.end())
    loc_ev.clear()
    prev = -1
    for i in range(<int64_t>raw.size()):
        if raw[i] != prev:
            loc_ev.push_back(raw[i])
            prev = raw[i]
    tn = loc_ev.size()
    lk.resize(n)
    cdef vector[double] cnt
    cnt.assign(tn + 1, 0.0)
    d.assign(tn, 0.0)
    for i in range(n):
        k = _upper_bound(loc_ev, kt[idx[i]] - 1)
        lk[i] = k
        cnt[k] += 1.0
        if ev[idx[i]]:
            d[k - 1] += 1.0
    n_at.assign(tn, 0.0)
    cdef double acc = 0.0
    for j in range(tn - 1, -1, -1):
        acc += cnt[j + 1]
        n_at[j] = acc
    return tn


cdef double _best_logrank(const double[:, ::1] X, const int64_t[::1] kt,
                          const unsigned char[::1] ev, vector[int64_t]& idx,
                          vector[int64_t]& feats, int64_t min_leaf,
                          int64_t max_cand, int64_t cand_cap_n, uint64_t* state,
                          int64_t* best_f, double* best_thr) nogil:
    cdef int64_t n = idx.size(), tn, i, j, s, f, fi, m, ptr, nevL, nev = 0
    cdef vector[int64_t] loc_ev, lk, pos, chosen, order
    cdef vector[double] n_at, d, cntL, dL
    cdef vector[pair[double, int64_t]] vp
    cdef double best = 0.0, atL, aR, num, var, nj, dj, stat
    tn = _node_tables(kt, ev, idx, loc_ev, lk, n_at, d)
    for i in range(n):
        nev += ev[idx[i]]
    best_f[0] = -1
    vp.resize(n)
    order.resize(n)
    for fi in range(<int64_t>feats.size()):
        f = feats[fi]
        for i in range(n):
            vp[i].first = X[idx[i], f]
            vp[i].second = i
        cpp_sort(vp.begin(), vp.end())
        for i in range(n):
            order[i] = vp[i].second
        pos.clear()
        for s in range(1, n):
            if vp[s].first > vp[s - 1].first:
                pos.push_back(s)
        m = pos.size()
        if n > cand_cap_n and m > max_cand:
            _partial_shuffle(state, chosen, m, max_cand)
            cpp_sort(chosen.begin(), chosen.end())
            for i in range(max_cand):
                chosen[i] = pos[chosen[i]]
            pos.swap(chosen)
            m = pos.size()
        if m == 0:
            continue
        cntL.assign(tn + 1, 0.0)
        dL.assign(tn, 0.0)
        nevL = 0
        ptr = 0
        for s in range(1, n):
            i = order[s - 1]
            cntL[lk[i]] += 1.0
            if ev[idx[i]]:
                dL[lk[i] - 1] += 1.0
                nevL += 1
            if s != pos[ptr]:
                continue
            ptr += 1
            if s >= min_leaf and n - s >= min_leaf and nevL >= 1 and nev - nevL >= 1:
                atL = 0.0
                num = 0.0
                var = 0.0
                for j in range(tn - 1, -1, -1):
                    atL += cntL[j + 1]
                    nj = n_at[j]
                    dj = d[j]
                    aR = nj - atL
                    num += (dL[j] * aR - (dj - dL[j]) * atL) / nj
                    if nj > 1.0:
                        var += dj * atL * aR * (nj - dj) / (nj * nj * (nj - 1.0))
                stat = fabs(num) / sqrt(var) if var > 0.0 else 0.0
                if stat > best:
                    best = stat
                    best_f[0] = f
                    best_thr[0] = 0.5 * (vp[s - 1].first + vp[s].first)
            if ptr == m:
                break
    return best


def grow_logrank_tree(X, kt, ev, samples, int64_t mtry, int64_t min_leaf,
                      int64_t max_depth, int64_t max_cand, int64_t cand_cap_n, seed):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const int64_t[::1] ktv = np.ascontiguousarray(kt, dtype=np.int64)
    cdef const unsigned char[::1] evv = np.ascontiguousarray(ev, dtype=np.uint8)
    cdef const int64_t[::1] sv = np.ascontiguousarray(samples, dtype=np.int64)
    cdef int64_t p = Xv.shape[1]
    cdef uint64_t state = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef vector[int64_t] feature, left, right, leaf_id, leaf_ptr, leaf_k
    cdef vector[double] threshold, leaf_h
    cdef vector[vector[int64_t]] stack_idx
    cdef vector[int64_t] stack_node, stack_depth
    cdef vector[int64_t] idx, feats, li, ri, loc_ev, lk
    cdef vector[double] n_at, d
    cdef int64_t node, depth, n, i, f, nevn, lnode, rnode, tn, j
    cdef double thr, h
    with nogil:
        feature.push_back(-1)
        threshold.push_back(0.0)
        left.push_back(-1)
        right.push_back(-1)
        leaf_id.push_back(-1)
        leaf_ptr.push_back(0)
        idx.resize(sv.shape[0])
        for i in range(sv.shape[0]):
            idx[i] = sv[i]
        stack_idx.push_back(idx)
        stack_node.push_back(0)
        stack_depth.push_back(0)
        while stack_node.size() > 0:
            node = stack_node.back()
            depth = stack_depth.back()
            idx.swap(stack_idx.back())
            stack_idx.pop_back()
            stack_node.pop_back()
            stack_depth.pop_back()
            n = idx.size()
            f = -1
            nevn = 0
            for i in range(n):
                nevn += evv[idx[i]]
            if (max_depth < 0 or depth < max_depth) and n >= 2 * min_leaf and nevn >= 2:
                _partial_shuffle(&state, feats, p, mtry)
                _best_logrank(Xv, ktv, evv, idx, feats, min_leaf, max_cand,
                              cand_cap_n, &state, &f, &thr)
            if f >= 0:
                lnode = feature.size()
                rnode = lnode + 1
                for i in range(2):
                    feature.push_back(-1)
                    threshold.push_back(0.0)
                    left.push_back(-1)
                    right.push_back(-1)
                    leaf_id.push_back(-1)
                feature[node] = f
                threshold[node] = thr
                left[node] = lnode
                right[node] = rnode
                li.clear()
                ri.clear()
                for i in range(n):
                    if Xv[idx[i], f] <= thr:
                        li.push_back(idx[i])
                    else:
                        ri.push_back(idx[i])
                stack_idx.push_back(ri)
                stack_node.push_back(rnode)
                stack_depth.push_back(depth + 1)
                stack_idx.push_back(li)
                stack_node.push_back(lnode)
                stack_depth.push_back(depth + 1)
            else:
                tn = _node_tables(ktv, evv, idx, loc_ev, lk, n_at, d)
                leaf_id[node] = leaf_ptr.size() - 1
                h = 0.0
                for j in range(tn):
                    h += d[j] / n_at[j]
                    leaf_k.push_back(loc_ev[j])
                    leaf_h.push_back(h)
                leaf_ptr.push_back(leaf_k.size())
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
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const int64_t[::1] fv = np.ascontiguousarray(feature, dtype=np.int64)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const int64_t[::1] lv = np.ascontiguousarray(left, dtype=np.int64)
    cdef const int64_t[::1] rv = np.ascontiguousarray(right, dtype=np.int64)
    out = np.zeros(Xv.shape[0], dtype=np.int64)
    cdef int64_t[::1] ov = out
    cdef int64_t i, node
    with nogil:
        for i in range(Xv.shape[0]):
            node = 0
            while fv[node] >= 0:
                if Xv[i, fv[node]] <= tv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            ov[i] = node
    return out


def best_ls_splits(X, order, node_of, target, int64_t n_nodes, int64_t min_leaf):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const int64_t[:, ::1] ov = np.ascontiguousarray(order, dtype=np.int64)
    cdef const int64_t[::1] nv = np.ascontiguousarray(node_of, dtype=np.int64)
    cdef const double[::1] yv = np.ascontiguousarray(target, dtype=np.float64)
    best_f = np.full(n_nodes, -1, dtype=np.int64)
    best_t = np.zeros(n_nodes)
    best_g = np.zeros(n_nodes)
    cdef int64_t[::1] bf = best_f
    cdef double[::1] bt = best_t
    cdef double[::1] bg = best_g
    cdef vector[double] cnt, tot, cl, sl, lastv
    cdef vector[unsigned char] seen
    cdef int64_t n = ov.shape[0], p = Xv.shape[1], f, r, i, k
    cdef double v, nl, nr, g, sr
    with nogil:
        cnt.assign(n_nodes, 0.0)
        tot.assign(n_nodes, 0.0)
        for i in range(yv.shape[0]):
            k = nv[i]
            if k >= 0:
                cnt[k] += 1.0
                tot[k] += yv[i]
        for f in range(p):
            cl.assign(n_nodes, 0.0)
            sl.assign(n_nodes, 0.0)
            lastv.assign(n_nodes, 0.0)
            seen.assign(n_nodes, 0)
            for r in range(n):
                i = ov[r, f]
                k = nv[i]
                if k < 0:
                    continue
                v = Xv[i, f]
                if seen[k] and v > lastv[k]:
                    nl = cl[k]
                    nr = cnt[k] - nl
                    if nl >= min_leaf and nr >= min_leaf:
                        sr = tot[k] - sl[k]
                        g = sl[k] * sl[k] / nl + sr * sr / nr - tot[k] * tot[k] / cnt[k]
                        if g > bg[k]:
                            bg[k] = g
                            bf[k] = f
                            bt[k] = 0.5 * (lastv[k] + v)
                cl[k] += 1.0
                sl[k] += yv[i]
                lastv[k] = v
                seen[k] = 1
    return best_f, best_t, best_g


def concordance_counts(score, col, times, events):
    cdef const double[:, ::1] sv = np.ascontiguousarray(score, dtype=np.float64)
    cdef const int64_t[::1] cv = np.ascontiguousarray(col, dtype=np.int64)
    cdef const double[::1] tv = np.ascontiguousarray(times, dtype=np.float64)
    cdef const unsigned char[::1] ev = np.ascontiguousarray(events, dtype=np.uint8)
    cdef int64_t n = tv.shape[0], i, j, c
    cdef int64_t comp = 0, n_conc = 0, n_tie = 0
    cdef double si, sj, ti
    with nogil:
        for i in range(n):
            if not ev[i]:
                continue
            c = cv[i]
            si = sv[i, c]
            ti = tv[i]
            for j in range(n):
                if tv[j] > ti or (tv[j] == ti and not ev[j]):
                    comp += 1
                    sj = sv[j, c]
                    if si > sj:
                        n_conc += 1
                    elif si == sj:
                        n_tie += 1
    return n_conc + 0.5 * n_tie, comp
