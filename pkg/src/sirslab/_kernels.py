"""Jitted inner loops for the SIRS/SIS engines.

Kernels never draw random numbers themselves. They consume a buffer of
uniforms produced by a numpy ``Generator`` and return ``NEED_RAND`` when it
runs low, so the caller owns the RNG stream and runs stay reproducible.

State layout shared by all kernels:
  states  int8[n]     0 = S, 1 = I, 2 = R
  sus     int64[n]    number of susceptible neighbors of every vertex
  tree    int64[n+1]  Fenwick tree over infected vertices weighted by ``sus``
  inf_list/inf_pos, rec_list/rec_pos   dense index sets for O(1) uniform picks
  ctr     int64[7]    S, I, R, E(I,S), steps, projected I, projected steps
"""

import math

import numpy as np
from numba import njit

SUS, INF, REC = 0, 1, 2

EXTINCT, CAP_TIME, CAP_EVENTS, NEED_RAND, NEED_LOG, BROKEN = 0, 1, 2, 3, 4, 5

EV_INFECT, EV_RECOVER, EV_DEIMMUNIZE = 0, 1, 2

C_S, C_I, C_R, C_E, C_STEPS, C_PI, C_PSTEPS = 0, 1, 2, 3, 4, 5, 6


@njit(cache=True)
def fen_add(tree, i, delta):
    i += 1
    size = tree.shape[0] - 1
    while i <= size:
        tree[i] += delta
        i += i & (-i)


@njit(cache=True)
def fen_find(tree, k):
    """Index ``v`` whose cumulative range contains ``k``, and ``k`` minus the prefix before ``v``."""
    size = tree.shape[0] - 1
    step = 1
    while step * 2 <= size:
        step *= 2
    pos = 0
    while step > 0:
        nxt = pos + step
        if nxt <= size and tree[nxt] <= k:
            pos = nxt
            k -= tree[nxt]
        step >>= 1
    return pos, k


@njit(cache=True)
def fen_build(tree, weights):
    tree[:] = 0
    size = tree.shape[0] - 1
    for i in range(1, size + 1):
        tree[i] += weights[i - 1]
        j = i + (i & (-i))
        if j <= size:
            tree[j] += tree[i]


@njit(cache=True)
def _set_add(lst, pos, count, v):
    lst[count] = v
    pos[v] = count


@njit(cache=True)
def _set_remove(lst, pos, count, v):
    # count is the size before removal
    i = pos[v]
    last = lst[count - 1]
    lst[i] = last
    pos[last] = i
    pos[v] = -1


@njit(cache=True)
def _infect(u, indptr, indices, states, sus, tree, inf_list, inf_pos, ctr, proj):
    states[u] = INF
    ctr[C_S] -= 1
    _set_add(inf_list, inf_pos, ctr[C_I], u)
    ctr[C_I] += 1
    for idx in range(indptr[u], indptr[u + 1]):
        w = indices[idx]
        sus[w] -= 1
        if states[w] == INF:
            fen_add(tree, w, -1)
            ctr[C_E] -= 1
    fen_add(tree, u, sus[u])
    ctr[C_E] += sus[u]
    if proj[u]:
        ctr[C_PI] += 1


@njit(cache=True)
def _become_susceptible(v, indptr, indices, states, sus, tree, ctr):
    states[v] = SUS
    ctr[C_S] += 1
    for idx in range(indptr[v], indptr[v + 1]):
        w = indices[idx]
        sus[w] += 1
        if states[w] == INF:
            fen_add(tree, w, 1)
            ctr[C_E] += 1


@njit(cache=True)
def _recover(v, sis, indptr, indices, states, sus, tree, inf_list, inf_pos, rec_list, rec_pos, ctr, proj):
    _set_remove(inf_list, inf_pos, ctr[C_I], v)
    ctr[C_I] -= 1
    fen_add(tree, v, -sus[v])
    ctr[C_E] -= sus[v]
    if proj[v]:
        ctr[C_PI] -= 1
    if sis:
        _become_susceptible(v, indptr, indices, states, sus, tree, ctr)
    else:
        states[v] = REC
        _set_add(rec_list, rec_pos, ctr[C_R], v)
        ctr[C_R] += 1


@njit(cache=True)
def _deimmunize(v, indptr, indices, states, sus, tree, rec_list, rec_pos, ctr):
    _set_remove(rec_list, rec_pos, ctr[C_R], v)
    ctr[C_R] -= 1
    _become_susceptible(v, indptr, indices, states, sus, tree, ctr)


@njit(cache=True)
def recount_is_edges(indptr, indices, states):
    total = 0
    for v in range(states.shape[0]):
        if states[v] == INF:
            for idx in range(indptr[v], indptr[v + 1]):
                if states[indices[idx]] == SUS:
                    total += 1
    return total


@njit(cache=True)
def _consistent(indptr, indices, states, sus, tree, ctr):
    n = states.shape[0]
    s = 0
    i = 0
    r = 0
    for v in range(n):
        if states[v] == SUS:
            s += 1
        elif states[v] == INF:
            i += 1
        else:
            r += 1
    if s != ctr[C_S] or i != ctr[C_I] or r != ctr[C_R]:
        return False
    e = recount_is_edges(indptr, indices, states)
    if e != ctr[C_E]:
        return False
    acc = 0
    j = tree.shape[0] - 1
    while j > 0:
        acc += tree[j]
        j -= j & (-j)
    return acc == e


@njit(cache=True)
def _log(log_t, log_kind, log_a, log_b, lpos, t, kind, a, b):
    log_t[lpos] = t
    log_kind[lpos] = kind
    log_a[lpos] = a
    log_b[lpos] = b


@njit(cache=True)
def direct_kernel(
    indptr, indices, lam, rho, sis,
    states, sus, tree, inf_list, inf_pos, rec_list, rec_pos, ctr, tnow, proj,
    rand, rpos, t_max, max_steps,
    log_t, log_kind, log_a, log_b, debug,
):
    """Direct-method Gillespie loop over the active rates."""
    nrand = rand.shape[0]
    log_cap = log_t.shape[0]
    lpos = 0
    while True:
        if ctr[C_PI] == 0:
            return EXTINCT, rpos, lpos
        if ctr[C_STEPS] >= max_steps:
            return CAP_EVENTS, rpos, lpos
        if rpos + 2 > nrand:
            return NEED_RAND, rpos, lpos
        if log_cap > 0 and lpos >= log_cap:
            return NEED_LOG, rpos, lpos
        n_e = ctr[C_E]
        n_i = ctr[C_I]
        r_si = lam * n_e
        r_ir = float(n_i)
        r_rs = 0.0 if sis else rho * ctr[C_R]
        rt = r_si + r_ir + r_rs
        u = rand[rpos]
        rpos += 1
        if u == 0.0:
            continue
        t_next = tnow[0] - math.log1p(-u) / rt
        if t_next > t_max:
            tnow[0] = t_max
            return CAP_TIME, rpos, lpos
        tnow[0] = t_next
        x = rand[rpos] * rt
        rpos += 1
        if x < r_si:
            k = int(x / lam)
            if k >= n_e:
                k = n_e - 1
            src, j = fen_find(tree, k)
            target = -1
            for idx in range(indptr[src], indptr[src + 1]):
                w = indices[idx]
                if states[w] == SUS:
                    if j == 0:
                        target = w
                        break
                    j -= 1
            _infect(target, indptr, indices, states, sus, tree, inf_list, inf_pos, ctr, proj)
            changed = target
            if log_cap > 0:
                _log(log_t, log_kind, log_a, log_b, lpos, t_next, EV_INFECT, src, target)
                lpos += 1
        elif x < r_si + r_ir or sis:
            k = int(x - r_si)
            if k >= n_i:
                k = n_i - 1
            v = inf_list[k]
            _recover(v, sis, indptr, indices, states, sus, tree, inf_list, inf_pos, rec_list, rec_pos, ctr, proj)
            changed = v
            if log_cap > 0:
                _log(log_t, log_kind, log_a, log_b, lpos, t_next, EV_RECOVER, v, -1)
                lpos += 1
        else:
            k = int((x - r_si - r_ir) / rho)
            if k >= ctr[C_R]:
                k = ctr[C_R] - 1
            v = rec_list[k]
            _deimmunize(v, indptr, indices, states, sus, tree, rec_list, rec_pos, ctr)
            changed = v
            if log_cap > 0:
                _log(log_t, log_kind, log_a, log_b, lpos, t_next, EV_DEIMMUNIZE, v, -1)
                lpos += 1
        ctr[C_STEPS] += 1
        if proj[changed]:
            ctr[C_PSTEPS] += 1
        if debug and not _consistent(indptr, indices, states, sus, tree, ctr):
            return BROKEN, rpos, lpos


@njit(cache=True)
def clock_kernel(
    indptr, indices, edge_u, edge_v, lam, rho, sis,
    states, sus, tree, inf_list, inf_pos, rec_list, rec_pos, ctr, tnow, proj,
    rand, rpos, t_max, max_steps,
    log_t, log_kind, log_a, log_b, debug,
):
    """Superposition of every edge, recovery and deimmunization clock.

    The total trigger rate is constant; triggers whose precondition fails
    leave the configuration unchanged and are not counted as steps.
    """
    nrand = rand.shape[0]
    log_cap = log_t.shape[0]
    n = states.shape[0]
    m = edge_u.shape[0]
    r_edge = lam * m
    r_rec = float(n)
    r_deim = 0.0 if sis else rho * n
    total = r_edge + r_rec + r_deim
    lpos = 0
    while True:
        if ctr[C_PI] == 0:
            return EXTINCT, rpos, lpos
        if ctr[C_STEPS] >= max_steps:
            return CAP_EVENTS, rpos, lpos
        if rpos + 2 > nrand:
            return NEED_RAND, rpos, lpos
        if log_cap > 0 and lpos >= log_cap:
            return NEED_LOG, rpos, lpos
        u = rand[rpos]
        rpos += 1
        if u == 0.0:
            continue
        t_next = tnow[0] - math.log1p(-u) / total
        if t_next > t_max:
            tnow[0] = t_max
            return CAP_TIME, rpos, lpos
        tnow[0] = t_next
        x = rand[rpos] * total
        rpos += 1
        changed = -1
        src = -1
        if x < r_edge:
            e = int(x / lam)
            if e >= m:
                e = m - 1
            a = edge_u[e]
            b = edge_v[e]
            if states[a] == INF and states[b] == SUS:
                src, changed = a, b
            elif states[b] == INF and states[a] == SUS:
                src, changed = b, a
            if changed >= 0:
                _infect(changed, indptr, indices, states, sus, tree, inf_list, inf_pos, ctr, proj)
                if log_cap > 0:
                    _log(log_t, log_kind, log_a, log_b, lpos, t_next, EV_INFECT, src, changed)
                    lpos += 1
        elif x < r_edge + r_rec or sis:
            v = int(x - r_edge)
            if v >= n:
                v = n - 1
            if states[v] == INF:
                _recover(v, sis, indptr, indices, states, sus, tree, inf_list, inf_pos, rec_list, rec_pos, ctr, proj)
                changed = v
                if log_cap > 0:
                    _log(log_t, log_kind, log_a, log_b, lpos, t_next, EV_RECOVER, v, -1)
                    lpos += 1
        else:
            v = int((x - r_edge - r_rec) / rho)
            if v >= n:
                v = n - 1
            if states[v] == REC:
                _deimmunize(v, indptr, indices, states, sus, tree, rec_list, rec_pos, ctr)
                changed = v
                if log_cap > 0:
                    _log(log_t, log_kind, log_a, log_b, lpos, t_next, EV_DEIMMUNIZE, v, -1)
                    lpos += 1
        if changed >= 0:
            ctr[C_STEPS] += 1
            if proj[changed]:
                ctr[C_PSTEPS] += 1
            if debug and not _consistent(indptr, indices, states, sus, tree, ctr):
                return BROKEN, rpos, lpos


@njit(cache=True)
def _edge_trigger(states, a, b):
    if states[a] == INF and states[b] == SUS:
        states[b] = INF
        return True
    if states[b] == INF and states[a] == SUS:
        states[a] = INF
        return True
    return False


@njit(cache=True)
def coupled_kernel(
    edge_u, edge_v, lam, rho,
    sis_states, sirs_states, cnt, tnow, t_sirs_end,
    rand, rpos, t_max, max_steps,
):
    """SIS and SIRS driven by one shared clock stream.

    ``cnt`` holds: SIS infected, SIRS infected, SIS steps, SIRS steps,
    inclusion violations. ``t_sirs_end[0]`` receives the SIRS extinction time.
    """
    nrand = rand.shape[0]
    n = sis_states.shape[0]
    m = edge_u.shape[0]
    r_edge = lam * m
    r_rec = float(n)
    total = r_edge + r_rec + rho * n
    while True:
        if cnt[1] == 0 and t_sirs_end[0] < 0.0:
            t_sirs_end[0] = tnow[0]
        if cnt[0] == 0:
            if cnt[1] > 0:
                cnt[4] += 1
            return EXTINCT, rpos
        if cnt[2] + cnt[3] >= max_steps:
            return CAP_EVENTS, rpos
        if rpos + 2 > nrand:
            return NEED_RAND, rpos
        u = rand[rpos]
        rpos += 1
        if u == 0.0:
            continue
        t_next = tnow[0] - math.log1p(-u) / total
        if t_next > t_max:
            tnow[0] = t_max
            return CAP_TIME, rpos
        tnow[0] = t_next
        x = rand[rpos] * total
        rpos += 1
        a = -1
        b = -1
        if x < r_edge:
            e = int(x / lam)
            if e >= m:
                e = m - 1
            a = edge_u[e]
            b = edge_v[e]
            if _edge_trigger(sis_states, a, b):
                cnt[0] += 1
                cnt[2] += 1
            if _edge_trigger(sirs_states, a, b):
                cnt[1] += 1
                cnt[3] += 1
        elif x < r_edge + r_rec:
            a = int(x - r_edge)
            if a >= n:
                a = n - 1
            if sis_states[a] == INF:
                sis_states[a] = SUS
                cnt[0] -= 1
                cnt[2] += 1
            if sirs_states[a] == INF:
                sirs_states[a] = REC
                cnt[1] -= 1
                cnt[3] += 1
        else:
            a = int((x - r_edge - r_rec) / rho)
            if a >= n:
                a = n - 1
            if sirs_states[a] == REC:
                sirs_states[a] = SUS
                if cnt[1] > 0:
                    cnt[3] += 1
        # only a and b can have changed, so checking them keeps I_SIRS within I_SIS
        if sirs_states[a] == INF and sis_states[a] != INF:
            cnt[4] += 1
        if b >= 0 and sirs_states[b] == INF and sis_states[b] != INF:
            cnt[4] += 1


def new_log(capacity):
    return (
        np.empty(capacity, dtype=np.float64),
        np.empty(capacity, dtype=np.int8),
        np.empty(capacity, dtype=np.int64),
        np.empty(capacity, dtype=np.int64),
    )
