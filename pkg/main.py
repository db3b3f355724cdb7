# main.py

import sys

from dotenv import load_dotenv

load_dotenv()

from app.controllers.cli_controller import main  # noqa: E402


if __name__ == "__main__":
    sys.exit(main())
