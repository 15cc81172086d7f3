"""Tracking error at the attacked fixed point of a pinned agent.

A pinned agent only sees its own output through the attacked channel, so any
controller that drives the received error to zero settles where
y + delta(k, y) = y0. This script solves that equation at every step of each
leader segment's final window and reports the mean ||y - y0|| there.

    python3 tools/tracking_floor.py [--amplitude 0.5] [--period 1500] [--window 100]
"""

import argparse

import numpy as np
from scipy.optimize import fsolve

SEGMENTS = [(0, (5.0, 2.0)), (500, (2.0, 4.0)), (1000, (4.0, 3.0))]
HORIZON = 1500


def fdi(k, y, amplitude, period, mult=(5.0, 4.0, 2.0)):
    t = np.pi * k / period
    cross = np.sin(y[0]) * np.cos(y[1])
    return amplitude * np.array([
        np.cos(mult[0] * t) * np.sin(y[0]) + np.cos(mult[1] * t) * cross,
        np.cos(mult[0] * t) * np.cos(y[0]) + np.sin(mult[2] * t) * cross,
    ])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amplitude", type=float, default=0.5)
    ap.add_argument("--period", type=float, default=HORIZON)
    ap.add_argument("--window", type=int, default=100)
    args = ap.parse_args()

    for s, (start, value) in enumerate(SEGMENTS):
        end = SEGMENTS[s + 1][0] if s + 1 < len(SEGMENTS) else HORIZON
        y0 = np.array(value)
        errors = []
        for k in range(end - args.window, end):
            y = fsolve(lambda y: y + fdi(k, y, args.amplitude, args.period) - y0, y0, xtol=1e-13)
            errors.append(np.linalg.norm(y - y0))
        print(f"segment {s + 1} leader {value}: window [{end - args.window}, {end}) "
              f"mean fixed-point error {np.mean(errors):.4f}")


if __name__ == "__main__":
    main()
