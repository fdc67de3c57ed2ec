"""Solve random polynomial ODE systems and compare against the coefficient recursion."""

import random
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from _config import parse_config  # noqa: E402

from powerlin.apps import OdeSystem, ode_recursion_oracle, solve_ode  # noqa: E402
from powerlin.series import Series  # noqa: E402


@dataclass
class Config:
    systems: int = 50
    order: int = 20
    max_n: int = 3
    max_q: int = 3
    max_degree: int = 3
    seed: int = 7


def random_system(rng, cfg):
    n, q = rng.randint(1, cfg.max_n), rng.randint(1, cfg.max_q)
    nv = n * q
    P = []
    for _ in range(n):
        terms = {}
        for _ in range(rng.randint(0, 4)):
            alpha = [0] * nv
            for _ in range(rng.randint(0, cfg.max_degree)):
                alpha[rng.randrange(nv)] += 1
            terms[tuple(alpha)] = Fraction(rng.randint(-3, 3), rng.randint(1, 2))
        P.append(Series(terms, nv))
    init = [[Fraction(rng.randint(-2, 2)) for _ in range(q)] for _ in range(n)]
    return OdeSystem(q, P, init)


def main(cfg):
    rng = random.Random(cfg.seed)
    start = time.perf_counter()
    for k in range(cfg.systems):
        sysm = random_system(rng, cfg)
        x = solve_ode(sysm, cfg.order)
        got = [[c.coeff((j,)) for j in range(cfg.order + 1)] for c in x]
        if got != ode_recursion_oracle(sysm, cfg.order):
            print(f"system {k}: mismatch with the recursion")
            return 1
    print(f"systems={cfg.systems} order={cfg.order} all match, "
          f"{time.perf_counter() - start:.2f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main(parse_config(Config, description=__doc__)))
