# main.py
import sys

from dotenv import load_dotenv

# Load environment variables (SIG2D_DATA_DIR, SIG2D_WORKERS, ...) from .env file
load_dotenv()

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
