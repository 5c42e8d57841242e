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

# replicate errors are written for external box plots
ecve.tools.simulation_study.execute(
    [
        "--model",
        "M3",
        "--dist",
        "I",
        "--n",
        "300",
        "--method",
        "fourier",
        "indicator",
        "boxcox",
        "--m-list",
        "4",
        "8",
        "10",
        "26",
        "50",
        "76",
        "100",
        "--reps",
        "100",
        "--out",
        str(OUTPUT_DIR / "ensemble-size.csv"),
        "--long-out",
        str(OUTPUT_DIR / "ensemble-size.replicates.csv"),
    ]
)
