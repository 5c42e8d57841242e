import logging
import sys
from pathlib import Path

import ecve.tools.simulation_study

logging.basicConfig(
    level=logging.INFO,
    format="{levelname: <7} | {asctime} [{name}] {message}",
    style="{",
    stream=sys.stdout,
)

OUTPUT_DIR = Path(__file__).parent.parent / "tmp"
OUTPUT_DIR.mkdir(exist_ok=True)

# uncomment this to check all the options
# ecve.tools.simulation_study.execute(["--help"])

# one table per model: every predictor distribution and sample size against
# the mean subspace estimator and the ensembles
for model in ["M1", "M2", "M3", "M4", "M5", "M6", "M7"]:
    ecve.tools.simulation_study.execute(
        [
            "--model",
            model,
            "--dist",
            "I",
            "II",
            "III",
            "--n",
            "100",
            "200",
            "400",
            "--method",
            "cve",
            "fourier",
            "indicator",
            "indicator+weighted",
            "boxcox",
            "--reps",
            "100",
            "--seed",
            "1",
            "--out",
            str(OUTPUT_DIR / f"errors.{model}.csv"),
            "--long-out",
            str(OUTPUT_DIR / f"errors.{model}.replicates.csv"),
        ]
    )
