import os

from dotenv import load_dotenv

load_dotenv()


def getenv_boolean(var_name, default_value=False):
    result = default_value
    env_value = os.getenv(var_name)
    if env_value is not None:
        result = env_value.upper() in ("TRUE", "1")
    return result


def getenv_int(var_name, default_value=None):
    env_value = os.getenv(var_name)
    if env_value is None or env_value.strip() == "":
        return default_value
    return int(env_value)


def getenv_float(var_name, default_value=None):
    env_value = os.getenv(var_name)
    if env_value is None or env_value.strip() == "":
        return default_value
    return float(env_value)


# Project Settings
PACKAGE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
BASE_DIR = os.path.dirname(PACKAGE_DIR)
PROJECT_NAME = os.getenv("PROJECT_NAME", "plfsma")
LOG_LEVEL = os.getenv("PLFSMA_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Model artifact schema version
ARTIFACT_VERSION = 1

# Parallelism
THREADS = getenv_int("PLFSMA_THREADS", os.cpu_count() or 1)

# Simulation Settings
CALIBRATION_DRAWS = getenv_int("PLFSMA_CALIBRATION_DRAWS", 100_000)
DEFAULT_REPS = getenv_int("PLFSMA_DEFAULT_REPS", 200)
MAX_FAILED_FRACTION = getenv_float("PLFSMA_MAX_FAILED_FRACTION", 0.05)
MAX_GRID_POINTS = getenv_int("PLFSMA_MAX_GRID_POINTS", 200_000)
MEASUREMENT_ERROR_VARIANCE = 0.2

# Output formatting
FLOAT_FORMAT = "%.17g"
WRITE_RECORDS = getenv_boolean("PLFSMA_WRITE_RECORDS", False)
