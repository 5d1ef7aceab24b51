"""Reference computations that share no code with the package.

Plain Python loops over lists, so an error in the vectorized code paths
cannot hide behind the same error here.
"""
import math


def sigmoid(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def log_loss(w, b, x, y):
    z = sum(wi * xi for wi, xi in zip(w, x)) + b
    # log(1 + exp(-z)) for y=1, log(1 + exp(z)) for y=0, written stably
    t = -z if y == 1 else z
    return max(t, 0.0) + math.log1p(math.exp(-abs(t)))


def finite_difference_gradient(w, b, x, y, h=1e-6):
    grad = []
    for j in range(len(x)):
        up = list(x)
        down = list(x)
        up[j] += h
        down[j] -= h
        grad.append((log_loss(w, b, up, y) - log_loss(w, b, down, y)) / (2 * h))
    return grad


def gradient_descent_lr(rows, labels, lr, epochs):
    """Full-batch gradient descent on mean log loss from zero weights."""
    n, d = len(rows), len(rows[0])
    w = [0.0] * d
    b = 0.0
    for _ in range(epochs):
        gw = [0.0] * d
        gb = 0.0
        for x, y in zip(rows, labels):
            r = sigmoid(sum(wi * xi for wi, xi in zip(w, x)) + b) - y
            for j in range(d):
                gw[j] += r * x[j]
            gb += r
        w = [wj - lr * g / n for wj, g in zip(w, gw)]
        b -= lr * gb / n
    return w, b


def lr_predict(w, b, x):
    return 1 if sigmoid(sum(wi * xi for wi, xi in zip(w, x)) + b) >= 0.5 else 0


def reference_cv(rows, labels, order, k, lr, epochs):
    """k-fold CV over a given row order; the first n mod k folds hold one extra row."""
    n = len(rows)
    folds, start = [], 0
    for i in range(k):
        size = n // k + (1 if i < n % k else 0)
        folds.append(list(order[start : start + size]))
        start += size
    scores = []
    for i in range(k):
        train = [r for j in range(k) if j != i for r in folds[j]]
        w, b = gradient_descent_lr([rows[r] for r in train], [labels[r] for r in train], lr, epochs)
        hits = sum(lr_predict(w, b, rows[r]) == labels[r] for r in folds[i])
        scores.append(hits / len(folds[i]))
    return sum(scores) / k


def brute_force_ks(a, b):
    """Largest ECDF gap, checked at every sample point of either sample."""
    best = 0.0
    for t in list(a) + list(b):
        fa = sum(1 for v in a if v <= t) / len(a)
        fb = sum(1 for v in b if v <= t) / len(b)
        best = max(best, abs(fa - fb))
    return best
