import logging
import sys
from pathlib import Path

import ecve.tools.fit_reduction
import ecve.tools.reduce_predictors

logging.basicConfig(
    level=logging.DEBUG,
    format="{levelname: <7} | {asctime} [{name}] {message}",
    style="{",
    stream=sys.stdout,
)

# local copy of the boston housing data with a header row (crim, zn, ..., medv)
INPUT_PATH = Path(r"Z:\datasets\boston\boston.csv")
OUTPUT_DIR = Path(__file__).parent.parent / "tmp"
OUTPUT_DIR.mkdir(exist_ok=True)
FIT_PATH = OUTPUT_DIR / "boston.fourier.json"

# chas is binary: it does not fit a continuous predictor model
ecve.tools.fit_reduction.execute(
    [
        str(INPUT_PATH),
        "--response",
        "medv",
        "--k",
        "1",
        "--method",
        "fourier",
        "--drop",
        "chas",
        "--out",
        str(FIT_PATH),
    ]
)
ecve.tools.reduce_predictors.execute(
    [
        str(FIT_PATH),
        str(INPUT_PATH),
        "--out",
        str(OUTPUT_DIR / "boston.reduced.csv"),
    ]
)
