"""Independent least-squares fit for the two-disk benchmark with mpmath.

Approximates the locally-constant target (1 on D(0,1), 0 on D(5,1)) by a
polynomial in the scaled variable (z - 2.5)/3.5 using mpmath's qr_solve at
50 digits on its own boundary samples, then measures the sup error on a
dense grid. This establishes the achievable error level for degrees 10 and
20 without touching numpy or the package's sampling choices; the package's
certified errors must land within a small factor of these.

Run:  python3 tests/oracles/oracle_runge.py   (takes ~10-30 s)
"""

import mpmath as mp

mp.mp.dps = 50

CENTER = mp.mpc("2.5", "0")
SCALE = mp.mpf("3.5")


def circle(center, radius, n, phase=0.0):
    return [
        center + radius * mp.expjpi(2 * (mp.mpf(j) + phase) / n) for j in range(n)
    ]


def fit(degree, per_set):
    pts = circle(mp.mpc(0), 1, per_set) + circle(mp.mpc(5), 1, per_set)
    rhs = [mp.mpf(1)] * per_set + [mp.mpf(0)] * per_set
    rows = len(pts)
    A = mp.matrix(rows, degree + 1)
    for i, z in enumerate(pts):
        u = (z - CENTER) / SCALE
        p = mp.mpc(1)
        for j in range(degree + 1):
            A[i, j] = p
            p *= u
    b = mp.matrix(rhs)
    sol, _ = mp.qr_solve(A, b)
    return [sol[j] for j in range(degree + 1)]


def sup_error(coeffs, n_dense=600):
    worst = mp.mpf(0)
    for center, target in ((mp.mpc(0), mp.mpf(1)), (mp.mpc(5), mp.mpf(0))):
        for z in circle(center, 1, n_dense, phase=0.37):
            u = (z - CENTER) / SCALE
            val = mp.mpc(0)
            for c in reversed(coeffs):
                val = val * u + c
            worst = max(worst, abs(val - target))
    return worst


def main():
    for degree in (0, 10, 20):
        per_set = max(2 * (degree + 1), 8)
        coeffs = fit(degree, per_set)
        err = sup_error(coeffs)
        print(f"degree {degree:2d}: sup error =", mp.nstr(err, 10))


if __name__ == "__main__":
    main()
