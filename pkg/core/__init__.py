# core/__init__.py
import os
from dotenv import load_dotenv

load_dotenv()


def _positive_int(name: str, default: int) -> int:
    raw = os.getenv(name, str(default))
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


# Value domain
VALUE_WIDTH = _positive_int("CCDFG_WIDTH", 32)
SHADOW_SUFFIX = "_reg"

# Checker defaults
DEFAULT_MEMORY_WORDS = _positive_int("CCDFG_MEMORY_WORDS", 16)
DEFAULT_K_MAX = _positive_int("CCDFG_K_MAX", 8)
DEFAULT_SAMPLES = _positive_int("CCDFG_SAMPLES", 20)
DEFAULT_SEED = int(os.getenv("CCDFG_SEED", "0"))

# Paths and service
DATA_FOLDER = os.getenv("DATA_FOLDER", "data")
LOG_DIR = os.getenv("LOG_DIR", "logs")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
API_KEY = os.getenv("API_KEY")
API_PORT = _positive_int("API_PORT", 10000)

__all__ = [
    "VALUE_WIDTH", "SHADOW_SUFFIX",
    "DEFAULT_MEMORY_WORDS", "DEFAULT_K_MAX", "DEFAULT_SAMPLES", "DEFAULT_SEED",
    "DATA_FOLDER", "LOG_DIR", "LOG_LEVEL", "API_KEY", "API_PORT",
]
