"""Regenerate the CSV feature fixtures under tests/data/ (deterministic)."""

from pathlib import Path

import numpy as np

from vidsum.features import write_fixture
from vidsum.synthetic import two_mode_features

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    # 100 frames, 32-d, frames 30..59 in the second mode
    write_fixture(DATA / "two_mode_100.csv", two_mode_features(100, 32))
    # frames 0,2 near the origin, 1,3 near (10, 10, 10): two tight pairs out of temporal order
    pairs = np.array([[0.0, 0.0, 0.0], [10.0, 10.0, 10.0], [0.5, 0.0, 0.0], [10.0, 10.0, 10.25]])
    write_fixture(DATA / "pairs_4.csv", pairs)
    # ten frames of a 2x2x3 conv grid, for the scda path through the mock backend
    rng = np.random.default_rng(7)
    write_fixture(DATA / "conv_10.csv", rng.uniform(0, 1, size=(10, 12)))


if __name__ == "__main__":
    main()
