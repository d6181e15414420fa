#!/usr/bin/env python3
"""Exact ballot probabilities for a discrete-time Gaussian bridge.

Computes P(max_{k=1..T} S_k <= 0 | S_0 = a, S_T = b) for a random walk with
i.i.d. N(0,1) increments by density propagation with an absorbing barrier at 0:
propagate the killed density of the free walk from a, then divide by the free
bridge density at b.  Used to freeze oracle constants for the Monte Carlo
ballot tests; the continuum analogue 1 - exp(-2ab/T) differs at moderate T by
the usual overshoot correction, so a lattice-exact reference is needed.

Usage: bridge_ballot_dp.py [T a b [dx xmin]]
With no arguments, prints the table of cases referenced by the test suite.
"""
import math
import sys

import numpy as np


def ballot_dp(T, a, b, dx=0.02, xmin=None, taps_sigma=8.0):
    if xmin is None:
        xmin = min(a, b) - 5.0 * math.sqrt(T) - 10.0
    n = int(round(-xmin / dx)) + 1
    x = xmin + dx * np.arange(n)          # grid covers [xmin, 0]
    kt = int(round(taps_sigma / dx))
    t = dx * np.arange(-kt, kt + 1)
    kern = np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)

    # start as a delta at a (nearest grid point), density units 1/dx
    f = np.zeros(n)
    ia = int(round((a - xmin) / dx))
    f[ia] = 1.0 / dx

    for _ in range(T - 1):
        f = np.convolve(f, kern, mode="full")[kt:kt + n] * dx
        # absorbing barrier: the grid itself ends at 0, so mass that would
        # land above the barrier simply leaves the window

    num = float(np.sum(f * np.exp(-0.5 * (b - x) ** 2) / math.sqrt(2.0 * math.pi)) * dx)
    den = math.exp(-0.5 * (b - a) ** 2 / T) / math.sqrt(2.0 * math.pi * T)
    return num / den


def report(T, a, b, dx=0.02):
    p = ballot_dp(T, a, b, dx=dx)
    p_fine = ballot_dp(T, a, b, dx=dx / 2.0)
    # the barrier-edge quadrature error is first order in dx, so one
    # Richardson step removes it
    p_extrap = 2.0 * p_fine - p
    cont = 1.0 - math.exp(-2.0 * a * b / T)
    print(f"T={T:5d} a={a:8.3f} b={b:8.3f}  p={p_extrap:.6f}"
          f"  (grids {p:.6f} / {p_fine:.6f})"
          f"  continuum={cont:.6f}  gap={p_extrap - cont:+.6f}")
    return p_extrap


def main():
    if len(sys.argv) >= 4:
        T, a, b = int(sys.argv[1]), float(sys.argv[2]), float(sys.argv[3])
        dx = float(sys.argv[4]) if len(sys.argv) > 4 else 0.02
        xmin = float(sys.argv[5]) if len(sys.argv) > 5 else None
        print(ballot_dp(T, a, b, dx=dx, xmin=xmin))
        return
    report(100, -5.0, -5.0)
    report(400, -10.0, -10.0, dx=0.04)
    report(1600, -20.0, -20.0, dx=0.08)
    report(400, -3.0, -(400.0 ** 0.3), dx=0.04)


if __name__ == "__main__":
    main()
