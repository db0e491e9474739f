"""Iterate the cubic skew product exactly and check the escape logarithm.

mpmath floats carry bignum exponents, so z_k with Re z ~ exp(10^47) is
directly representable: iterate

    z' = z + 1 + exp(-z) + w * z^3,   w' = w / 2

from (3.25, 0.45) for 100 steps at 60 digits and report log(Re z_100).
One wrinkle: exp(-z) for Re z ~ e^(3^k) has an exponent too large for any
bignum, so past Re z = 10^4 the term is dropped; its relative size there
is e^(-10^4), invisible at 60 digits. The package's certificate continues
the recurrence in log space from the handoff step; its final_log_re must
match this to float accuracy (the log-regime recurrence multiplies
absolute error by d = 3 each step, so ~1e-13 relative agreement is the
honest target, not 1e-16).

Run:  python3 tests/oracles/oracle_escape.py
"""

import mpmath as mp

mp.mp.dps = 60


def step(z, w):
    ez = mp.exp(-z) if z.real < 1e4 else mp.mpc(0)
    return z + 1 + ez + w * z**3, w / 2


def main():
    z = mp.mpc("3.25", "0")
    w = mp.mpc("0.45", "0")
    for k in range(100):
        z, w = step(z, w)
        if k in (0, 4, 6, 9, 19):
            print(f"step {k + 1:3d}: log Re z =", mp.nstr(mp.log(z.real), 17))
    log_re = mp.log(z.real)
    print("step 100: log Re z =", mp.nstr(log_re, 17))
    print("step 100: Im z     =", mp.nstr(z.imag, 5))

    # The two non-bulging probes: w = 2^-7 enters the cubic regime later,
    # 1e-6 later still; confirm both still blow up by step 100.
    for w0 in (mp.mpf(2) ** -7, mp.mpf("1e-6")):
        z = mp.mpc("3.25", "0")
        w = mp.mpc(w0, 0)
        for _ in range(100):
            z, w = step(z, w)
        print(f"w0 = {mp.nstr(w0, 8)}: log Re z_100 =", mp.nstr(mp.log(z.real), 17))


if __name__ == "__main__":
    main()
