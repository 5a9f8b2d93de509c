import sys
import logging
from dotenv import load_dotenv
from src.utils import setup_logging

# Load environment variables
load_dotenv()

# Configure logging
setup_logging()
logger = logging.getLogger(__name__)

from src.commands import main  # noqa: E402

if __name__ == "__main__":
    # Subcommands: solve, reduce, verify, bench, plot
    exit_code = main(sys.argv[1:])
    logger.debug(f"Exiting with code {exit_code}")
    sys.exit(exit_code)
