import logging
import os
import sys
from typing import Optional

from dotenv import load_dotenv

from . import cli


def main(argv: Optional[list[str]] = None) -> None:
    """Main entry point for the headpose-eval command."""
    # Load environment variables before anything reads them
    load_dotenv()

    level_name = os.getenv("HEADPOSE_LOG_LEVEL", "INFO").upper()
    level = logging.getLevelName(level_name)
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        level=level if isinstance(level, int) else logging.INFO,
        stream=sys.stderr,
    )
    logger = logging.getLogger(__name__)
    if not isinstance(level, int):
        logger.warning(f"Unknown HEADPOSE_LOG_LEVEL {level_name!r}; using INFO")

    sys.exit(cli.main(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
