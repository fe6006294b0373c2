import os

import psutil
from dotenv import load_dotenv

load_dotenv()


def _default_workers() -> int:
    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    return max(1, int(cores))


class Config:
    # Tolerances (CORF_TOL override is documented but discouraged)
    TOL = float(os.getenv("CORF_TOL", "1e-9"))                    # geometric predicates
    ALG_TOL = float(os.getenv("CORF_ALG_TOL", "1e-12"))           # algebraic identities
    LORENTZ_TOL = float(os.getenv("CORF_LORENTZ_TOL", "1e-10"))   # relative ||G^T J G - J||
    RENORM_EVERY = int(os.getenv("CORF_RENORM_EVERY", "64"))      # products between renormalizations
    AMBIGUOUS_MARGIN = float(os.getenv("CORF_AMBIGUOUS", "1e-7"))  # spectral radius band
    COND_LIMIT = float(os.getenv("CORF_COND_LIMIT", "1e14"))

    # Tiling
    FRONTIER_BOUND = int(os.getenv("CORF_FRONTIER", "200000"))    # tiles per BFS
    FOLD_MAX_ITER = int(os.getenv("CORF_FOLD_MAX_ITER", "1000000"))
    DEDUP_AUDIT = float(os.getenv("CORF_DEDUP_AUDIT", "1e-6"))    # base point coincidence radius

    # Certificates
    CERT_MARGIN = float(os.getenv("CORF_CERT_MARGIN", "0.1"))
    IDENTITY_TOL = float(os.getenv("CORF_IDENTITY_TOL", "1e-8"))
    MAX_PERIODS = int(os.getenv("CORF_MAX_PERIODS", "6"))
    BASE_OFFSET = float(os.getenv("CORF_BASE_OFFSET", "0.1234"))  # fraction of one period

    # Monte Carlo
    MC_CHUNK = int(os.getenv("CORF_MC_CHUNK", "250000"))          # samples per seeded chunk
    WORKERS = int(os.getenv("CORF_WORKERS", str(_default_workers())))
    VOLUME_SAMPLES = int(os.getenv("CORF_VOLUME_SAMPLES", "400000"))

    # Output
    LOG_LEVEL = os.getenv("CORF_LOG_LEVEL", "INFO")
    PROGRESS_UPDATE_INTERVAL = int(os.getenv("CORF_PROGRESS_INTERVAL", "5"))  # seconds
    DEFAULT_SEED = int(os.getenv("CORF_SEED", "42"))

    # Misc
    APP_NAME = "corf"
