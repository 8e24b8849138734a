"""Integer-supply flow kernels on the complete bipartite transport graph.

Supplies and demands are int64 (masses pre-scaled by the caller), so every
augmentation is exact.  Costs are float64.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def min_cost_flow(cost, supply, demand):
    """Successive shortest paths with Dijkstra on reduced costs.

    Returns ``(flow, u_pot, v_pot, augmentations)``.  On exit every residual
    arc has nonnegative reduced cost ``cost[i, j] + u_pot[i] - v_pot[j]``
    (forward) or its negation (backward, where flow > 0).
    """
    m, n = cost.shape
    flow = np.zeros((m, n), dtype=np.int64)
    u_pot = np.zeros(m)
    v_pot = np.empty(n)
    for j in range(n):
        best = np.inf
        for i in range(m):
            if cost[i, j] < best:
                best = cost[i, j]
        v_pot[j] = best
    exc = supply.copy()
    dem = demand.copy()
    remaining = 0
    for i in range(m):
        remaining += exc[i]
    du = np.empty(m)
    dv = np.empty(n)
    done_u = np.empty(m, dtype=np.bool_)
    done_v = np.empty(n, dtype=np.bool_)
    pred_u = np.empty(m, dtype=np.int64)
    pred_v = np.empty(n, dtype=np.int64)
    augmentations = 0
    while remaining > 0:
        for i in range(m):
            du[i] = 0.0 if exc[i] > 0 else np.inf
            done_u[i] = False
            pred_u[i] = -1
        for j in range(n):
            dv[j] = np.inf
            done_v[j] = False
            pred_v[j] = -1
        target = -1
        reach = 0.0
        while True:
            best = np.inf
            node = -1
            side = 0
            for i in range(m):
                if not done_u[i] and du[i] < best:
                    best = du[i]
                    node = i
                    side = 0
            for j in range(n):
                if not done_v[j] and dv[j] < best:
                    best = dv[j]
                    node = j
                    side = 1
            if node < 0:
                break
            if side == 0:
                i = node
                done_u[i] = True
                for j in range(n):
                    if done_v[j]:
                        continue
                    rc = cost[i, j] + u_pot[i] - v_pot[j]
                    if rc < 0.0:
                        rc = 0.0
                    cand = du[i] + rc
                    if cand < dv[j]:
                        dv[j] = cand
                        pred_v[j] = i
            else:
                j = node
                done_v[j] = True
                if dem[j] > 0:
                    target = j
                    reach = dv[j]
                    break
                for i in range(m):
                    if done_u[i] or flow[i, j] == 0:
                        continue
                    rc = -cost[i, j] + v_pot[j] - u_pot[i]
                    if rc < 0.0:
                        rc = 0.0
                    cand = dv[j] + rc
                    if cand < du[i]:
                        du[i] = cand
                        pred_u[i] = j
        if target < 0:
            break
        for i in range(m):
            u_pot[i] += du[i] if du[i] < reach else reach
        for j in range(n):
            v_pot[j] += dv[j] if dv[j] < reach else reach
        # bottleneck along the path target <- i <- j' <- i' ... <- root
        amount = dem[target]
        j = target
        while True:
            i = pred_v[j]
            jb = pred_u[i]
            if jb < 0:
                if exc[i] < amount:
                    amount = exc[i]
                break
            if flow[i, jb] < amount:
                amount = flow[i, jb]
            j = jb
        j = target
        while True:
            i = pred_v[j]
            flow[i, j] += amount
            jb = pred_u[i]
            if jb < 0:
                exc[i] -= amount
                break
            flow[i, jb] -= amount
            j = jb
        dem[target] -= amount
        remaining -= amount
        augmentations += 1
    return flow, u_pot, v_pot, augmentations


@njit(cache=True)
def max_flow(allowed, supply, demand):
    """Maximum flow source -> i -> j -> sink with uncapacitated allowed arcs.

    Shortest augmenting paths (BFS); returns ``(flow, value)``.
    """
    m, n = allowed.shape
    flow = np.zeros((m, n), dtype=np.int64)
    exc = supply.copy()
    dem = demand.copy()
    value = 0
    # greedy start
    for i in range(m):
        for j in range(n):
            if exc[i] == 0:
                break
            if allowed[i, j] and dem[j] > 0:
                a = exc[i] if exc[i] < dem[j] else dem[j]
                flow[i, j] += a
                exc[i] -= a
                dem[j] -= a
                value += a
    pred_u = np.empty(m, dtype=np.int64)
    pred_v = np.empty(n, dtype=np.int64)
    seen_u = np.empty(m, dtype=np.bool_)
    seen_v = np.empty(n, dtype=np.bool_)
    queue = np.empty(m, dtype=np.int64)
    while True:
        head = 0
        tail = 0
        for i in range(m):
            seen_u[i] = False
            pred_u[i] = -1
            if exc[i] > 0:
                seen_u[i] = True
                queue[tail] = i
                tail += 1
        for j in range(n):
            seen_v[j] = False
            pred_v[j] = -1
        target = -1
        while head < tail and target < 0:
            i = queue[head]
            head += 1
            for j in range(n):
                if seen_v[j] or not allowed[i, j]:
                    continue
                seen_v[j] = True
                pred_v[j] = i
                if dem[j] > 0:
                    target = j
                    break
                for i2 in range(m):
                    if not seen_u[i2] and flow[i2, j] > 0:
                        seen_u[i2] = True
                        pred_u[i2] = j
                        queue[tail] = i2
                        tail += 1
        if target < 0:
            break
        amount = dem[target]
        j = target
        while True:
            i = pred_v[j]
            jb = pred_u[i]
            if jb < 0:
                if exc[i] < amount:
                    amount = exc[i]
                break
            if flow[i, jb] < amount:
                amount = flow[i, jb]
            j = jb
        j = target
        while True:
            i = pred_v[j]
            flow[i, j] += amount
            jb = pred_u[i]
            if jb < 0:
                exc[i] -= amount
                break
            flow[i, jb] -= amount
            j = jb
        dem[target] -= amount
        value += amount
    return flow, value
