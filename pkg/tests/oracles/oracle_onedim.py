"""Recompute the one-dimensional orbit constants at 50 digits with mpmath.

Independent of the package: iterates f(x) = x + 1 + e^(-x) from the grid
point x0 = 3.25 and reports the deviation extremes and the geometric tail
bound that tests/test_dynamics.py freezes.

Run:  python3 tests/oracles/oracle_onedim.py
"""

import mpmath as mp

mp.mp.dps = 50

A = mp.mpf(1)
X0 = mp.mpf("3.25")
K = 200
DELTA = mp.mpf("0.1")


def fiber(x0, k_max):
    xs = [x0]
    x = x0
    for _ in range(k_max):
        x = x + A + mp.exp(-x)
        xs.append(x)
    return xs


def main():
    xs = fiber(X0, K)
    devs = [abs(xs[k] - (X0 + k)) for k in range(K + 1)]
    worst_k = max(range(K + 1), key=lambda k: devs[k])
    max_dev = devs[worst_k]

    # Partial sums of e^(-x_j) telescope the deviation exactly:
    # x_k - (x0 + k) = sum_{j<k} e^(-x_j).
    partial = mp.mpf(0)
    max_gap = mp.mpf(0)
    for k in range(1, K + 1):
        partial += mp.exp(-xs[k - 1])
        gap = abs((xs[k] - (X0 + k)) - partial)
        max_gap = max(max_gap, gap)

    # Geometric tail bound: since x_j >= x0 + j/2 on the orbit,
    # sum_j e^(-x_j) <= e^(-x0) / (1 - e^(-1/2)).
    tail = mp.exp(-X0) / (1 - mp.exp(mp.mpf("-0.5")))

    print("x0                    =", X0)
    print("max_deviation         =", mp.nstr(max_dev, 17))
    print("worst_k               =", worst_k)
    print("deviation < delta     =", max_dev < DELTA)
    print("telescoping max gap   =", mp.nstr(max_gap, 5))
    print("geometric tail bound  =", mp.nstr(tail, 17))
    print("tail bound < delta    =", tail < DELTA)
    print("x_200 - (x0 + 200)    =", mp.nstr(xs[K] - (X0 + K), 17))


if __name__ == "__main__":
    main()
