import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(
    log_level: str | None = None,
    log_dir: str = "logs",
    log_format: str | None = None,
) -> logging.Logger:
    """Setup logging configuration for simulator runs."""
    level = log_level or os.getenv("RSMA_LOG_LEVEL", "INFO")

    # logs directory
    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)

    # logging
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format=log_format or LOG_FORMAT,
        handlers=[
            logging.FileHandler(log_path / "simulator.log"),
            logging.StreamHandler(sys.stdout),
        ],
        force=True,
    )

    return logging.getLogger(__name__)
