"""
Configuration file for the cfstats toolkit
"""
import os
import logging
from dotenv import load_dotenv
load_dotenv()

# Output directory for generated files
output_dir = os.getenv("CFSTATS_OUTPUT_DIR", "output")

# Sweep defaults (CLI flags override these)
DIGIT_CAP = int(os.getenv("CFSTATS_DIGIT_CAP", "50"))
CLASS_CAP = int(os.getenv("CFSTATS_CLASS_CAP", "8"))
JOBS = int(os.getenv("CFSTATS_JOBS", "1"))
CACHE_PATH = os.getenv("CFSTATS_CACHE_PATH") or None

# Monte Carlo samples are drawn in chunks of this size, one child seed per chunk
MC_CHUNK = int(os.getenv("CFSTATS_MC_CHUNK", "262144"))

LOG_LEVEL = os.getenv("CFSTATS_LOG_LEVEL", "INFO")

# Bump whenever the cache entry layout changes
CACHE_SCHEMA_VERSION = 1


def ensure_output_dir(path: str = None) -> str:
    """Create the output directory if it doesn't exist and return it."""
    path = path or output_dir
    os.makedirs(path, exist_ok=True)
    return path


def setup_logging(level: str = None):
    """Configure root logging once for CLI runs."""
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
