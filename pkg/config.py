import os

# ----------------------------------------------
# release
APP_VERSION = os.getenv("RUIN_APP_VERSION", "v0.3.0-0-g0000000")


# ----------------------------------------------
# simulation
## Work blocks and per-path draw buffers
MC_BLOCK_SIZE = int(os.getenv("MC_BLOCK_SIZE", 4096))
MC_PATH_CHUNK = int(os.getenv("MC_PATH_CHUNK", 512))
MC_THREADS = int(os.getenv("MC_THREADS", os.cpu_count() or 1))

## Censoring caps
MC_DEFAULT_MAX_STEPS = int(os.getenv("MC_DEFAULT_MAX_STEPS", 1_000_000))
MC_DEFAULT_LEVEL_CAP = float(os.getenv("MC_DEFAULT_LEVEL_CAP", 1e4))
MC_LEVEL_CAP_FACTOR = float(os.getenv("MC_LEVEL_CAP_FACTOR", 100))

## Confidence intervals
MC_CI_Z = float(os.getenv("MC_CI_Z", 1.96))
MC_CI_LEVEL = float(os.getenv("MC_CI_LEVEL", 0.95))


# -----------------------------------------------
# reserve flow
FLOW_REL_TOL = float(os.getenv("FLOW_REL_TOL", 1e-10))
FLOW_ABS_FLOOR = float(os.getenv("FLOW_ABS_FLOOR", 1e-12))
FLOW_NEWTON_MAX_ITER = int(os.getenv("FLOW_NEWTON_MAX_ITER", 60))
FLOW_RK_MAX_HALVINGS = int(os.getenv("FLOW_RK_MAX_HALVINGS", 40))


# -------------------------------------------------
# quadrature
QUAD_REL_TOL = float(os.getenv("QUAD_REL_TOL", 1e-10))
QUAD_LIMIT = int(os.getenv("QUAD_LIMIT", 200))
QUAD_MAX_PANELS = int(os.getenv("QUAD_MAX_PANELS", 400))
GAUSS_LEGENDRE_NODES = int(os.getenv("GAUSS_LEGENDRE_NODES", 48))


# -------------------------------------------------
# lyapunov bounds
DRIFT_SIGMA = float(os.getenv("DRIFT_SIGMA", 3.0))
DRIFT_MIN_DRAWS = int(os.getenv("DRIFT_MIN_DRAWS", 10_000))
BOUNDS_SHIFT_GRID_MAX = float(os.getenv("BOUNDS_SHIFT_GRID_MAX", 1e8))
BOUNDS_SHIFT_SEARCH_MAX = int(os.getenv("BOUNDS_SHIFT_SEARCH_MAX", 1_000_000))


# -------------------------------------------------
# heavy tail
HEAVY_MIN_ACCEPTANCE = float(os.getenv("HEAVY_MIN_ACCEPTANCE", 1e-3))
HEAVY_MAX_REJECTION_ROUNDS = int(os.getenv("HEAVY_MAX_REJECTION_ROUNDS", 10_000))
HEAVY_DOWN_LEVEL = float(os.getenv("HEAVY_DOWN_LEVEL", 1.0))


# ------------------------------------------------------------
# output
CSV_FLOAT_FORMAT = os.getenv("CSV_FLOAT_FORMAT", "%.12g")


# ------------------------------------------------------------
# logging
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_ELASTICSEARCH_ENABLED = os.getenv("LOG_ELASTICSEARCH_ENABLED", "false").lower() in (
    "1",
    "true",
    "yes",
)
LOG_ELASTICSEARCH_PROTOCOL = os.getenv("LOG_ELASTICSEARCH_PROTOCOL", "http")
LOG_ELASTICSEARCH_HOST = os.getenv("LOG_ELASTICSEARCH_HOST", "localhost")
LOG_ELASTICSEARCH_PORT = int(os.getenv("LOG_ELASTICSEARCH_PORT", 9200))
LOG_ELASTICSEARCH_INDEX_LOG = os.getenv("LOG_ELASTICSEARCH_INDEX_LOG", "ruin_logs")
