"""Pure-Python 1-D k-means kernels. Same signatures as the compiled module."""

import math


def lloyd_1d(values, centers, max_iter=300):
    """Lloyd iterations on sorted scalars.

    Returns ``(labels, centers, cost, iterations)``. Labels index the sorted
    centers. An emptied cluster is moved onto the point farthest from its
    current center.
    """
    xs = [float(v) for v in values]
    cs = sorted(float(c) for c in centers)
    n, k = len(xs), len(cs)
    labels = [-1] * n
    it = 0
    for it in range(1, max_iter + 1):
        changed = False
        for i in range(n):
            x = xs[i]
            best, best_d = 0, abs(x - cs[0])
            for j in range(1, k):
                d = abs(x - cs[j])
                if d < best_d:
                    best, best_d = j, d
            if labels[i] != best:
                labels[i] = best
                changed = True
        sums = [0.0] * k
        counts = [0] * k
        for i in range(n):
            sums[labels[i]] += xs[i]
            counts[labels[i]] += 1
        for j in range(k):
            if counts[j] == 0:
                far, far_d = 0, -1.0
                for i in range(n):
                    d = abs(xs[i] - cs[labels[i]])
                    if d > far_d and counts[labels[i]] > 1:
                        far, far_d = i, d
                counts[labels[far]] -= 1
                sums[labels[far]] -= xs[far]
                labels[far] = j
                counts[j] = 1
                sums[j] = xs[far]
                changed = True
        cs = [sums[j] / counts[j] for j in range(k)]
        if not changed:
            break
        order = sorted(range(k), key=lambda j: cs[j])
        if order != list(range(k)):
            remap = {old: new for new, old in enumerate(order)}
            cs = [cs[j] for j in order]
            labels = [remap[l] for l in labels]
    cost = 0.0
    for i in range(n):
        cost += (xs[i] - cs[labels[i]]) ** 2
    return labels, cs, cost, it


def dp_kmeans_1d(values, k):
    """Exact minimum within-cluster sum of squares for sorted scalars.

    O(n^2 k) dynamic program over contiguous segments. Returns
    ``(cost, starts)`` where ``starts`` are the first indices of the k
    optimal segments.
    """
    xs = [float(v) for v in values]
    n = len(xs)
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    s1 = [0.0] * (n + 1)
    s2 = [0.0] * (n + 1)
    for i, x in enumerate(xs):
        s1[i + 1] = s1[i] + x
        s2[i + 1] = s2[i] + x * x

    def sse(a, b):  # segment xs[a:b]
        m = b - a
        s = s1[b] - s1[a]
        return max(0.0, (s2[b] - s2[a]) - s * s / m)

    inf = math.inf
    # cost[j][i]: best cost of xs[:i] in j clusters
    cost = [[inf] * (n + 1) for _ in range(k + 1)]
    arg = [[0] * (n + 1) for _ in range(k + 1)]
    cost[0][0] = 0.0
    for j in range(1, k + 1):
        for i in range(j, n + 1):
            best, best_a = inf, j - 1
            for a in range(j - 1, i):
                c = cost[j - 1][a] + sse(a, i)
                if c < best:
                    best, best_a = c, a
            cost[j][i] = best
            arg[j][i] = best_a
    starts = []
    i = n
    for j in range(k, 0, -1):
        a = arg[j][i]
        starts.append(a)
        i = a
    return cost[k][n], starts[::-1]
