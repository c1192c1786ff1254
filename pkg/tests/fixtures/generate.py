"""Regenerates the stored CSV fixtures (run from the repo root).

Each fixture is n=50 with a treatment drawn from a true logistic model on
mildly correlated covariates.  Fixture values are frozen in git; this
script exists so they can be rebuilt if ever lost.
"""

from pathlib import Path

import numpy as np

from psmatch.dataset import write_csv
from psmatch.simgen import SimSpec, simulate

HERE = Path(__file__).parent

SPECS = {
    "logit_n50_p2.csv": SimSpec(
        n=50,
        means=(0.0, 1.0),
        sds=(1.0, 2.0),
        corr=np.array([[1.0, 0.3], [0.3, 1.0]]),
        select_intercept=-0.2,
        select_slopes=(0.8, 0.25),
        seed=20240811,
    ),
    "logit_n50_p3.csv": SimSpec(
        n=50,
        means=(0.0, 0.5, -1.0),
        sds=(1.0, 1.5, 0.7),
        corr=np.array([[1.0, 0.2, 0.0], [0.2, 1.0, -0.3], [0.0, -0.3, 1.0]]),
        select_intercept=0.3,
        select_slopes=(0.6, -0.4, 0.5),
        seed=20240812,
    ),
    "logit_n50_p4.csv": SimSpec(
        n=50,
        means=(0.0, 0.0, 2.0, -0.5),
        sds=(1.0, 1.0, 1.2, 0.9),
        corr=np.array(
            [
                [1.0, 0.25, 0.1, 0.0],
                [0.25, 1.0, 0.0, 0.2],
                [0.1, 0.0, 1.0, -0.15],
                [0.0, 0.2, -0.15, 1.0],
            ]
        ),
        select_intercept=0.1,
        select_slopes=(0.5, -0.3, 0.35, 0.4),
        seed=20240813,
    ),
}


def main():
    for name, spec in SPECS.items():
        ds = simulate(spec)
        write_csv(ds, HERE / name)
        print(f"{name}: {ds.n_treated} treated / {ds.n_control} control")


if __name__ == "__main__":
    main()
