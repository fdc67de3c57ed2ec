"""Classify random jets on a plane curve and count liftable vs obstructed jets per stratum."""

import random
import sys
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from _config import parse_config  # noqa: E402

from powerlin.arcspace import Jet, classify_jet, lift_jet_hypersurface  # noqa: E402
from powerlin.errors import PowerlinError  # noqa: E402
from powerlin.series import Series, SeriesVec, parse_poly, substitute_partial  # noqa: E402


@dataclass
class Config:
    poly: str = "y^2 - x^3"
    jets: int = 200
    min_level: int = 2
    max_level: int = 6
    order: int = 16
    perturb: float = 0.3
    seed: int = 0


def random_jet(rng, cfg):
    # points of the cusp (s^2, s^3) with occasional perturbations off the curve
    level = rng.randint(cfg.min_level, cfg.max_level)
    s = Series({(k,): Fraction(rng.randint(-2, 2)) for k in range(1, level + 1)}, 1)
    comps = [s * s, s * s * s]
    if rng.random() < cfg.perturb:
        k = rng.randint(1, level)
        comps[rng.randrange(2)] += Series({(k,): 1}, 1)
    return Jet.from_arcs(SeriesVec(comps), level)


def main(cfg):
    f = parse_poly(cfg.poly, ["x", "y"])
    rng = random.Random(cfg.seed)
    counts = Counter()
    for _ in range(cfg.jets):
        jet = random_jet(rng, cfg)
        try:
            tag = classify_jet(f, jet)
        except PowerlinError as exc:
            counts[("-", exc.code)] += 1
            continue
        try:
            a = lift_jet_hypersurface(f, jet, cfg.order, tag=tag)
            ok = substitute_partial(f, a, 0, check_order=False).truncate(cfg.order).is_zero()
            counts[(tag.e_prime, "lifted" if ok else "RESIDUAL")] += 1
        except PowerlinError as exc:
            counts[(tag.e_prime, exc.code)] += 1
    print(f"poly={cfg.poly} jets={cfg.jets} levels={cfg.min_level}..{cfg.max_level}")
    for (ep, outcome), n in sorted(counts.items(), key=str):
        print(f"  e'={ep!s:>2}  {outcome:<16} {n}")
    return 1 if any(o == "RESIDUAL" for _, o in counts) else 0


if __name__ == "__main__":
    sys.exit(main(parse_config(Config, description=__doc__)))
