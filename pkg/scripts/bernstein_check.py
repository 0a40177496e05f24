"""Empirical tail of ||R_D - G|| against the Matrix Bernstein tail bound, on a t grid.

    python scripts/bernstein_check.py --out results/bernstein
"""

from __future__ import annotations

import argparse
import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from rffkit import concentration as conc
from rffkit.datasets import gaussian_points
from rffkit.report import atomic_write, dumps


@dataclass
class BernsteinConfig:
    sizes: list[int] = field(default_factory=lambda: [4, 8, 16])
    dims: list[int] = field(default_factory=lambda: [64, 256])
    trials: int = 1000
    grid_points: int = 12
    sigma: float = 1.0
    seed: int = 11
    threads: int = 1


def run(cfg: BernsteinConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    violations = 0
    with open(out / "tail.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "D", "t", "empirical", "wilson_lo", "wilson_hi", "bound", "expectation_bound", "mean_error"])
        for n in cfg.sizes:
            pts = gaussian_points(n, 3, cfg.seed + n)
            for D in cfg.dims:
                res = conc.empirical_matrix_error(pts, cfg.sigma, D, cfg.trials, cfg.seed + D, threads=cfg.threads)
                q = conc.rff_bernstein_query(res.gram_norm, n, D)
                e = conc.bernstein_expectation_bound(q)
                violations += res.mean > e
                for t in np.linspace(0.1, 1.5, cfg.grid_points) * e:
                    tail = conc.tail_from_values(res.errors, float(t))
                    b = conc.bernstein_tail_bound(q, float(t))
                    violations += tail.wilson_interval[0] > b
                    w.writerow([n, D] + [format(float(v), ".17g") for v in (t, tail.frequency, *tail.wilson_interval, b, e, res.mean)])
    atomic_write(out / "config.json", dumps(asdict(cfg)))
    return violations


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("results/bernstein"))
    p.add_argument("--trials", type=int, default=BernsteinConfig.trials)
    p.add_argument("--threads", type=int, default=1)
    a = p.parse_args()
    v = run(BernsteinConfig(trials=a.trials, threads=a.threads), a.out)
    print(f"violations: {v}")


if __name__ == "__main__":
    main()
