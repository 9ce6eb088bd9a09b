#!/usr/bin/env python3
"""Regenerate the brute-force Monte Carlo reference values used by the tests.

Two caches are produced under tests/data/:

  survival_oracle.json
      Probability that a standard Brownian motion started at the centre of
      (-1, 1) has not yet left the interval at a few fixed times.  Estimated
      from one million paths on a very fine Euler grid (step 1e-5) with a
      per-step Brownian-bridge crossing test against the nearer barrier, so
      the discretisation bias is negligible next to the binomial error.

  exit_oracle.json
      Mean first-exit time of the *earliest* of n independent such motions,
      for several group sizes, from one million independent groups on a
      1e-4 grid, again with per-step bridge crossing tests.

The simulations are deliberately independent of the installed package: they
share no code with it and use plain forward Euler plus the textbook bridge
crossing probability exp(-2(d - |x|)(d - |x'|)/h).  Regeneration is slow
(tens of minutes on one core) but only ever needs to happen when the cache
format or the reference parameters change.  Values, standard errors, and all
generation parameters are stored alongside each other, and the tests read
the cache instead of re-simulating.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numba
import numpy as np

DELTA = 1.0

SURVIVAL_TIMES = (0.1, 0.5, 1.0, 2.0)
SURVIVAL_STEP = 1e-5
SURVIVAL_PATHS = 1_000_000
SURVIVAL_SEED = 20240811

EXIT_GROUP_SIZES = (2, 3, 6)
EXIT_STEP = 1e-4
EXIT_REPLICATIONS = 1_000_000
EXIT_SEED = 20240812

# Bridge probabilities below exp(-44) ~ 8e-20 can never fire over ~1e11
# Bernoulli trials; skipping them avoids the exp() on almost every step.
_QCUT_FACTOR = 22.0


@numba.njit(cache=True)
def _seed_uniforms(seed):
    np.random.seed(seed)


@numba.njit(cache=True)
def _scan_paths(x, g, h, delta, exit_rel):
    """March each path through one chunk of increments.

    x        (m,) current positions, updated in place
    g        (m, C) Gaussian increments, already scaled by sqrt(h)
    exit_rel (m,) out: step index within the chunk where the path left
             (-1 when it survived the whole chunk)

    A path leaves either because the endpoint lands outside (-delta, delta)
    or because the bridge test fires inside the step.
    """
    m, C = g.shape
    qcut = _QCUT_FACTOR * h
    for p in range(m):
        xp = x[p]
        out = -1
        for k in range(C):
            xn = xp + g[p, k]
            axn = abs(xn)
            if axn >= delta:
                out = k
                break
            q = (delta - abs(xp)) * (delta - axn)
            if q < qcut:
                if np.random.random() < math.exp(-2.0 * q / h):
                    out = k
                    break
            xp = xn
        x[p] = xp
        exit_rel[p] = out


@numba.njit(cache=True)
def _scan_groups(x, g, h, delta, exit_rel):
    """Same as _scan_paths but a group dies when its first member leaves."""
    m, C, n = g.shape
    qcut = _QCUT_FACTOR * h
    for p in range(m):
        out = -1
        for k in range(C):
            hit = False
            for j in range(n):
                xo = x[p, j]
                xn = xo + g[p, k, j]
                if abs(xn) >= delta:
                    hit = True
                else:
                    q = (delta - abs(xo)) * (delta - abs(xn))
                    if q < qcut and np.random.random() < math.exp(-2.0 * q / h):
                        hit = True
                x[p, j] = xn
            if hit:
                out = k
                break
        exit_rel[p] = out


def survival_reference(log=sys.stderr):
    """Estimate P(T > t) at SURVIVAL_TIMES; returns dict ready for JSON."""
    h = SURVIVAL_STEP
    total_steps = int(round(max(SURVIVAL_TIMES) / h))
    rng = np.random.Generator(np.random.SFC64(SURVIVAL_SEED))
    _seed_uniforms(SURVIVAL_SEED + 1)

    block = 20_000
    chunk = 1_000
    sqrt_h = math.sqrt(h)
    # absolute step of first exit, total_steps + 1 == survived past the horizon
    exit_step = np.full(SURVIVAL_PATHS, total_steps + 1, dtype=np.int64)

    t0 = time.time()
    for lo in range(0, SURVIVAL_PATHS, block):
        hi = min(lo + block, SURVIVAL_PATHS)
        m = hi - lo
        x = np.zeros(m)
        ids = np.arange(lo, hi)
        base = 0
        while ids.size and base < total_steps:
            c = min(chunk, total_steps - base)
            g = rng.standard_normal((ids.size, c)) * sqrt_h
            rel = np.empty(ids.size, dtype=np.int64)
            _scan_paths(x, g, h, DELTA, rel)
            gone = rel >= 0
            exit_step[ids[gone]] = base + rel[gone]
            keep = ~gone
            ids = ids[keep]
            x = x[keep]
            base += c
        if (lo // block) % 10 == 0:
            el = time.time() - t0
            print(f"[survival] paths {hi}/{SURVIVAL_PATHS} elapsed {el:.0f}s",
                  file=log, flush=True)

    # crossing inside step k => exit time (k+1)*h; survive t <=> exit > t
    exit_time = (exit_step + 1) * h
    out = []
    for t in SURVIVAL_TIMES:
        p = float(np.mean(exit_time > t))
        se = math.sqrt(p * (1.0 - p) / SURVIVAL_PATHS)
        out.append({"time": t, "survival": p, "se": se})
    return {
        "kind": "interval-survival",
        "interval_halfwidth": DELTA,
        "start": "centre",
        "step": h,
        "paths": SURVIVAL_PATHS,
        "seed": SURVIVAL_SEED,
        "bridge_test": "per-step, nearer barrier",
        "entries": out,
        "elapsed_s": round(time.time() - t0, 1),
        "versions": {"numpy": np.__version__, "numba": numba.__version__},
    }


def exit_reference(log=sys.stderr):
    """Estimate E[min exit time of n independent motions] per group size."""
    h = EXIT_STEP
    sqrt_h = math.sqrt(h)
    results = []
    t0 = time.time()
    for gi, n in enumerate(EXIT_GROUP_SIZES):
        rng = np.random.Generator(np.random.SFC64(EXIT_SEED + gi))
        _seed_uniforms(EXIT_SEED + 100 + gi)
        exit_step = np.empty(EXIT_REPLICATIONS, dtype=np.int64)
        block = max(2_000, 20_000 // n)
        chunk = 1_000
        for lo in range(0, EXIT_REPLICATIONS, block):
            hi = min(lo + block, EXIT_REPLICATIONS)
            m = hi - lo
            x = np.zeros((m, n))
            ids = np.arange(lo, hi)
            base = 0
            while ids.size:
                g = rng.standard_normal((ids.size, chunk, n)) * sqrt_h
                rel = np.empty(ids.size, dtype=np.int64)
                _scan_groups(x, g, h, DELTA, rel)
                gone = rel >= 0
                exit_step[ids[gone]] = base + rel[gone]
                keep = ~gone
                ids = ids[keep]
                x = x[keep]
                base += chunk
            if (lo // block) % 20 == 0:
                el = time.time() - t0
                print(f"[exit n={n}] groups {hi}/{EXIT_REPLICATIONS} "
                      f"elapsed {el:.0f}s", file=log, flush=True)
        times = (exit_step + 1) * h
        mean = float(np.mean(times))
        se = float(np.std(times, ddof=1) / math.sqrt(times.size))
        results.append({"group_size": n, "mean_exit": mean, "se": se})
        print(f"[exit n={n}] mean {mean:.6f} +- {se:.2e}", file=log, flush=True)
    return {
        "kind": "min-exit-time",
        "interval_halfwidth": DELTA,
        "step": h,
        "replications": EXIT_REPLICATIONS,
        "seed": EXIT_SEED,
        "bridge_test": "per-step, nearer barrier",
        "entries": results,
        "elapsed_s": round(time.time() - t0, 1),
        "versions": {"numpy": np.__version__, "numba": numba.__version__},
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", choices=("survival", "exit"),
                    help="regenerate a single cache instead of both")
    ap.add_argument("--out-dir",
                    default=os.path.join(os.path.dirname(__file__),
                                         os.pardir, "tests", "data"))
    args = ap.parse_args(argv)
    out_dir = os.path.abspath(args.out_dir)
    os.makedirs(out_dir, exist_ok=True)

    if args.only in (None, "survival"):
        ref = survival_reference()
        path = os.path.join(out_dir, "survival_oracle.json")
        with open(path, "w") as fh:
            json.dump(ref, fh, indent=2)
            fh.write("\n")
        print(f"wrote {path}", file=sys.stderr)
    if args.only in (None, "exit"):
        ref = exit_reference()
        path = os.path.join(out_dir, "exit_oracle.json")
        with open(path, "w") as fh:
            json.dump(ref, fh, indent=2)
            fh.write("\n")
        print(f"wrote {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
