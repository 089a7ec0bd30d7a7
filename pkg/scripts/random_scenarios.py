"""Write randomized scenarios (N <= 6, iid or Markov, d in [0.1, 10]) for `rmslyap suite`.

    python scripts/random_scenarios.py out_dir --count 200 --seed 1
    rmslyap suite out_dir --jobs 4
"""
import argparse
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class Config:
    count: int = 200
    seed: int = 1
    max_n: int = 6
    max_states: int = 4
    positive_fraction: float = 0.5
    d_low: float = 0.1
    d_high: float = 10.0


def random_A(rng, n, positive):
    A = rng.uniform(0.05, 2.0, (n, n))
    if positive:
        return A
    kind = rng.integers(4)
    if kind == 0:
        return A * (rng.random((n, n)) < 0.5)
    if kind == 1:
        return A * np.roll(np.eye(n), 1, axis=1)
    if kind == 2:
        return np.triu(A)
    k = max(1, n // 2)
    A[:k, k:] = 0
    A[k:, :k] = 0
    return A


def scenario(rng, cfg: Config, j: int) -> dict:
    n = int(rng.integers(1, cfg.max_n + 1))
    s = int(rng.integers(2, cfg.max_states + 1))
    if rng.random() < 0.5:
        p = rng.uniform(0.2, 1.0, s)
        driver = {"kind": "iid", "p": (p / p.sum()).tolist()}
    else:
        P = rng.uniform(0.05, 1.0, (s, s))
        driver = {"kind": "markov", "P": (P / P.sum(axis=1, keepdims=True)).tolist()}
    return {
        "name": f"random_{j:04d}",
        "A": random_A(rng, n, rng.random() < cfg.positive_fraction).tolist(),
        "driver": driver,
        "d_table": rng.uniform(cfg.d_low, cfg.d_high, (s, n)).tolist(),
        "defaults": {"seed": j},
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--count", type=int, default=Config.count)
    ap.add_argument("--seed", type=int, default=Config.seed)
    args = ap.parse_args()
    cfg = Config(count=args.count, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    for j in range(cfg.count):
        (out / f"random_{j:04d}.json").write_text(json.dumps(scenario(rng, cfg, j)))
    print(f"wrote {cfg.count} scenarios to {out}")


if __name__ == "__main__":
    main()
