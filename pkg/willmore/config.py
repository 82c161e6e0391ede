import os
from dotenv import load_dotenv

load_dotenv()

# Logging
LOG_LEVEL = os.getenv("WILLMORE_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = os.getenv("WILLMORE_LOG_FORMAT", "%(asctime)s %(levelname)s %(message)s")

# Where runs write their files when --out is not given
OUTPUT_DIR = os.getenv("WILLMORE_OUTPUT_DIR", "output")

# Gauss points per axis for every volume and face integral
QUADRATURE_POINTS = int(os.getenv("WILLMORE_QUADRATURE_POINTS", "4"))

# Multigrid defaults
MG_TOL = float(os.getenv("WILLMORE_MG_TOL", "1e-9"))
MG_MAX_CYCLES = int(os.getenv("WILLMORE_MG_MAX_CYCLES", "50"))
MG_PRE_SWEEPS = int(os.getenv("WILLMORE_MG_PRE_SWEEPS", "2"))
MG_POST_SWEEPS = int(os.getenv("WILLMORE_MG_POST_SWEEPS", "2"))
MG_COARSEST_CELLS = int(os.getenv("WILLMORE_MG_COARSEST_CELLS", "4"))
