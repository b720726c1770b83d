"""
App Constants
"""
from collections import namedtuple
from typing import Dict

PACKAGE_NAME = "remez-rigidity"
SCHEMA = "remez-rigidity/1"

# Numeric tolerances
RANK_TOLERANCE = 1e-10
LP_FEASIBILITY_TOLERANCE = 1e-8
LP_PIVOT_TOLERANCE = 1e-11
LP_MAX_CONDITION = 1e12
POINT_IN_BALL_SLACK = 1e-12
CRITICAL_RESIDUAL = 1e-8
DEGENERATE_EIGEN_RATIO = 1e-8
POLISH_RESIDUAL = 1e-9
BISECTION_TOLERANCE = 1e-10
SEPARATION_MARGIN = 1e-9

# Factorials stay exact in float64 well past this; larger degrees are not desk scale.
MAX_DEGREE = 12

ExitCode = namedtuple("ExitCode", ["ok", "precondition", "consistency", "usage"])

EXIT_CODES = ExitCode(ok=0, precondition=2, consistency=3, usage=64)

# CSV layouts emitted by `--emit csv`
CSV_COLUMNS: Dict[str, tuple] = {
    "report": ("key", "value"),
    "gallery": ("case", "quantity", "measured", "expected", "provenance", "status"),
}
