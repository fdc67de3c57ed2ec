"""Time invert_id_plus_h on random contractive tactile maps and verify each inverse."""

import random
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from _config import parse_config  # noqa: E402

from powerlin.linearize import invert_id_plus_h  # noqa: E402
from powerlin.series import Series, SeriesVec  # noqa: E402
from powerlin.textile import random_series, tactile_from_poly  # noqa: E402


@dataclass
class Config:
    instances: int = 200
    validity: int = 20
    max_base_vars: int = 2
    max_arity: int = 3
    seed: int = 1


def random_map(rng, cfg):
    n, m = rng.randint(1, cfg.max_base_vars), rng.randint(1, cfg.max_arity)
    comps = []
    for _ in range(m):
        terms = {}
        for _ in range(rng.randint(1, 4)):
            while True:
                ay = [rng.randint(0, 2) for _ in range(m)]
                beta = [rng.randint(0, 2) for _ in range(n)]
                if 2 <= sum(ay) <= 3 or (sum(ay) == 1 and sum(beta) >= 1):
                    break
            terms[tuple(beta + ay)] = Fraction(rng.randint(-3, 3) or 1, rng.randint(1, 3))
        comps.append(Series(terms, n + m))
    return tactile_from_poly(SeriesVec(comps), 1, nbase=n), n, m


def main(cfg):
    rng = random.Random(cfg.seed)
    times = []
    for k in range(cfg.instances):
        h, n, m = random_map(rng, cfg)
        b = SeriesVec(random_series(rng, n, 1, cfg.validity, density=0.3) for _ in range(m))
        start = time.perf_counter()
        g = invert_id_plus_h(h, b, cfg.validity)
        times.append(time.perf_counter() - start)
        if (g + h(g, cfg.validity)).truncate(cfg.validity) != b.truncate(cfg.validity):
            print(f"instance {k}: inverse check failed")
            return 1
    times.sort()
    print(f"instances={cfg.instances} validity={cfg.validity} total={sum(times):.2f}s "
          f"median={times[len(times) // 2] * 1e3:.1f}ms max={times[-1] * 1e3:.1f}ms")
    return 0


if __name__ == "__main__":
    sys.exit(main(parse_config(Config, description=__doc__)))
