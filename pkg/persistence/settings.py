"""
Runtime configuration loaded from the environment (.env supported).
None of these values reach a result: workers and batch size only split the same
trials differently, the log level and store location only affect where output goes.
Everything that changes a number lives in the experiment config.
"""
import logging
import os

from dotenv import load_dotenv

ROOT_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Load environment variables from .env file
load_dotenv(os.path.join(ROOT_DIR, '.env'))

TOOL_VERSION = "1.0.0"

# Worker count only changes wall time, never results
WORKERS = int(os.getenv('PERSISTENCE_WORKERS', '1'))
# Trial i always draws from stream i, so batch boundaries never move a sample
BATCH_SIZE = int(os.getenv('PERSISTENCE_BATCH_SIZE', '10000'))
LOG_LEVEL = os.getenv('PERSISTENCE_LOG_LEVEL', 'INFO')
# Fallback store for configs without output_dir
STORE_DIR = os.getenv('PERSISTENCE_STORE', os.path.join(ROOT_DIR, 'runs'))


def worker_count() -> int:
    """Re-read the worker override so tests and the CLI can change it per run"""
    return int(os.getenv('PERSISTENCE_WORKERS', str(WORKERS)))


def configure_logging(level: str = None):
    """Install a single stream handler; only entry points call this"""
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
