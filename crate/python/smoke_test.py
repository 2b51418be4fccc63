"""Smoke test for the fockbench_py extension.

Build and install first:  pip install --no-build-isolation ./crates/py
Then run:                 python python/smoke_test.py
"""

import cmath
import json
import math

import fockbench_py as fb


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    # closed-form basis norms
    close(fb.basis_norm([2], "1"), math.sqrt(2.0), 1e-12)
    close(fb.basis_norm([2], "inf"), math.sqrt(2.0) / math.e, 1e-12)
    close(fb.basis_norm([5], "2"), 1.0, 0.0)

    basis = fb.Basis(1.0, 24)
    assert basis.dim == 25 and basis.max_degree == 24

    # Gaussian Toeplitz diagonal d_k = (t + 1)^{-(k + 1)}
    g = fb.Symbol.gaussian(1.0)
    tg = fb.toeplitz(g, basis)
    for k in range(10):
        close(tg.entry(k, k).real, 2.0 ** -(k + 1), 1e-12)
    lo, hi = tg.norm("2")
    close(hi, 0.5, 1e-12)

    # Berezin transform of T_g equals the heat transform at s = t
    z = 0.7 - 0.4j
    close(tg.berezin([z]), g.heat(1.0, [z]), 1e-10)

    # Weyl composition phase on the low block
    wide = fb.Basis(1.0, 48)
    a, b = 0.5 + 0.25j, -0.3 + 0.6j
    lhs = fb.weyl(wide, [a]).compose(fb.weyl(wide, [b])).entry(0, 0)
    rhs = fb.weyl(wide, [a + b]).entry(0, 0)
    close(lhs / rhs, cmath.exp(-1j * (a * b.conjugate()).imag), 1e-10)

    # the symbol JSON round-trips
    ang = fb.Symbol.angular([(1, 1.0)], 1.0)
    assert fb.Symbol.from_json(ang.to_json()).to_json() == ang.to_json()

    # trace identity for f = 1
    lhs, rhs, gap = fb.trace_heat_identity(fb.Symbol.constant(1.0), 0.75, [0j], fb.Basis(1.0, 60))
    assert gap <= 1e-8

    # a cheap suite end to end
    report = json.loads(fb.run_suite("kernels-weyl", seed=7))
    assert report["summary"]["failed"] == 0, report["summary"]
    print("smoke test ok:", report["summary"])


if __name__ == "__main__":
    main()
