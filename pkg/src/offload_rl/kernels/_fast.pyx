# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled 1-D k-means kernels; mirror ``_pure`` exactly."""

from libc.math cimport fabs, INFINITY
from libc.stdlib cimport malloc, free


def lloyd_1d(values, centers, int max_iter=300):
    cdef Py_ssize_t n = len(values), k = len(centers)
    cdef double *xs = <double *> malloc(n * sizeof(double))
    cdef double *cs = <double *> malloc(k * sizeof(double))
    cdef double *sums = <double *> malloc(k * sizeof(double))
    cdef long *counts = <long *> malloc(k * sizeof(long))
    cdef long *labels = <long *> malloc(n * sizeof(long))
    cdef long *order = <long *> malloc(k * sizeof(long))
    cdef double *tmp = <double *> malloc(k * sizeof(double))
    cdef Py_ssize_t i, j, best, far, it = 0, a, b
    cdef double x, d, best_d, far_d, cost
    cdef bint changed, sorted_ok
    if not (xs and cs and sums and counts and labels and order and tmp):
        raise MemoryError()
    try:
        for i in range(n):
            xs[i] = values[i]
            labels[i] = -1
        init = sorted(float(c) for c in centers)
        for j in range(k):
            cs[j] = init[j]
        for it in range(1, max_iter + 1):
            changed = False
            for i in range(n):
                x = xs[i]
                best = 0
                best_d = fabs(x - cs[0])
                for j in range(1, k):
                    d = fabs(x - cs[j])
                    if d < best_d:
                        best = j
                        best_d = d
                if labels[i] != best:
                    labels[i] = best
                    changed = True
            for j in range(k):
                sums[j] = 0.0
                counts[j] = 0
            for i in range(n):
                sums[labels[i]] += xs[i]
                counts[labels[i]] += 1
            for j in range(k):
                if counts[j] == 0:
                    far = 0
                    far_d = -1.0
                    for i in range(n):
                        d = fabs(xs[i] - cs[labels[i]])
                        if d > far_d and counts[labels[i]] > 1:
                            far = i
                            far_d = d
                    counts[labels[far]] -= 1
                    sums[labels[far]] -= xs[far]
                    labels[far] = j
                    counts[j] = 1
                    sums[j] = xs[far]
                    changed = True
            for j in range(k):
                cs[j] = sums[j] / counts[j]
            if not changed:
                break
            # stable insertion sort of center indices by value
            for j in range(k):
                order[j] = j
            for a in range(1, k):
                b = a
                while b > 0 and cs[order[b - 1]] > cs[order[b]]:
                    order[b - 1], order[b] = order[b], order[b - 1]
                    b -= 1
            sorted_ok = True
            for j in range(k):
                if order[j] != j:
                    sorted_ok = False
            if not sorted_ok:
                for j in range(k):
                    tmp[j] = cs[order[j]]
                for j in range(k):
                    cs[j] = tmp[j]
                    counts[order[j]] = j
                for i in range(n):
                    labels[i] = counts[labels[i]]
        cost = 0.0
        for i in range(n):
            d = xs[i] - cs[labels[i]]
            cost += d * d
        return [labels[i] for i in range(n)], [cs[j] for j in range(k)], cost, it
    finally:
        free(xs); free(cs); free(sums); free(counts); free(labels); free(order); free(tmp)


def dp_kmeans_1d(values, int k):
    cdef Py_ssize_t n = len(values)
    if not (1 <= k <= n):
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    cdef double *s1 = <double *> malloc((n + 1) * sizeof(double))
    cdef double *s2 = <double *> malloc((n + 1) * sizeof(double))
    cdef double *cost = <double *> malloc((k + 1) * (n + 1) * sizeof(double))
    cdef long *arg = <long *> malloc((k + 1) * (n + 1) * sizeof(long))
    cdef Py_ssize_t i, j, a, best_a, w = n + 1
    cdef double x, s, m, seg, c, best
    if not (s1 and s2 and cost and arg):
        raise MemoryError()
    try:
        s1[0] = 0.0
        s2[0] = 0.0
        for i in range(n):
            x = values[i]
            s1[i + 1] = s1[i] + x
            s2[i + 1] = s2[i] + x * x
        for i in range((k + 1) * w):
            cost[i] = INFINITY
            arg[i] = 0
        cost[0] = 0.0
        for j in range(1, k + 1):
            for i in range(j, n + 1):
                best = INFINITY
                best_a = j - 1
                for a in range(j - 1, i):
                    m = i - a
                    s = s1[i] - s1[a]
                    seg = (s2[i] - s2[a]) - s * s / m
                    if seg < 0.0:
                        seg = 0.0
                    c = cost[(j - 1) * w + a] + seg
                    if c < best:
                        best = c
                        best_a = a
                cost[j * w + i] = best
                arg[j * w + i] = best_a
        starts = []
        i = n
        for j in range(k, 0, -1):
            a = arg[j * w + i]
            starts.append(a)
            i = a
        return cost[k * w + n], starts[::-1]
    finally:
        free(s1); free(s2); free(cost); free(arg)
