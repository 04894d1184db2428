#!/usr/bin/env python3
"""Generate high-precision reference values for the geometric-sum kernels.

Writes data/kernel_fixtures.txt with one record per line:

    p n1 n2 Re(delta) Im(delta) Re(ref) Im(ref)

delta is printed with 17 significant digits so its double value round-trips
exactly; references carry 24 digits.  References are computed by direct
summation — term-by-term accumulation of k^p e^{delta k} — in 300-bit
(~90-digit) interval-free arithmetic via gmpy2.  The running product
e^{delta k} accumulates at most ~n units of 2^-300 relative rounding, which
leaves > 80 correct digits even for n = 2^20.  The closed forms under test
are never used here.

Run from the repository root:  python3 tools/make_kernel_fixtures.py
"""

import math
import os

import gmpy2

gmpy2.get_context().precision = 300


def direct_sums(n1, n2, delta, orders):
    """[sum_{k=n1}^{n2-1} k^p e^{delta k} for p in orders] by accumulation."""
    d = gmpy2.mpc(gmpy2.mpfr(delta.real), gmpy2.mpfr(delta.imag))
    step = gmpy2.exp(d)
    cur = gmpy2.exp(d * n1)
    accs = [gmpy2.mpc(0) for _ in orders]
    for k in range(n1, n2):
        for i, p in enumerate(orders):
            accs[i] += (k ** p) * cur if p else cur
        cur *= step
    return accs


def fmt(x, digits=24):
    return format(x, f".{digits}g")


def main():
    out_path = os.path.join(os.path.dirname(__file__), "..", "data",
                            "kernel_fixtures.txt")
    os.makedirs(os.path.dirname(out_path), exist_ok=True)

    magnitudes = [10.0 ** e for e in range(-18, 1)] + [3.16227766016838e-10, 0.5]
    phases = [math.pi, -0.5 * math.pi, 0.5 * math.pi, 0.75 * math.pi,
              -0.75 * math.pi, 0.9 * math.pi]
    lengths = [16, 256, 1024, 2 ** 20]

    records = []
    for n in lengths:
        for mag in magnitudes:
            for ph in phases:
                delta = complex(mag * math.cos(ph), mag * math.sin(ph))
                s0, s1 = direct_sums(0, n, delta, (0, 1))
                records.append((0, 0, n, delta, s0))
                records.append((1, 0, n, delta, s1))
        print(f"n = {n}: done ({len(records)} records so far)", flush=True)

    # a few higher-order generalized sums at small ranges
    mixed = [(2, 0, 50, complex(-0.03, 0.7)),
             (2, 3, 41, complex(-1.2, 2.0)),
             (3, 2, 37, complex(-0.01, 0.3)),
             (3, 0, 50, complex(-1e-5, 2e-5)),
             (2, 0, 33, complex(0.0, 1e-9)),
             (3, 1, 29, complex(-2.5, -3.0))]
    for p, n1, n2, delta in mixed:
        (ref,) = direct_sums(n1, n2, delta, (p,))
        records.append((p, n1, n2, delta, ref))

    with open(out_path, "w") as f:
        for p, n1, n2, delta, ref in records:
            f.write(f"{p} {n1} {n2} {delta.real:.17g} {delta.imag:.17g} "
                    f"{fmt(ref.real)} {fmt(ref.imag)}\n")
    print(f"wrote {len(records)} records to {out_path}")

    # frozen values used directly in the unit tests
    for p, n, delta in [(0, 2 ** 20, complex(1e-10, 1e-10)),
                        (1, 4096, complex(3e-7, -2e-7))]:
        (ref,) = direct_sums(0, n, delta, (p,))
        print(f"test value p={p} n={n} delta={delta}: "
              f"{fmt(ref.real)} {fmt(ref.imag)}")
    d = gmpy2.mpc(gmpy2.mpfr(0.004), gmpy2.mpfr(0.001))
    n = 100
    lhs = gmpy2.exp(d) / (1 - gmpy2.exp(d)) \
        - n * gmpy2.exp(n * d) / (1 - gmpy2.exp(n * d))
    print(f"test value expdiff n=100 delta=0.004+0.001i: "
          f"{fmt(lhs.real)} {fmt(lhs.imag)}")


if __name__ == "__main__":
    main()
