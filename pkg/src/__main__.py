"""Run the command line front end: `python -m src <command>`."""

import sys

from .cli import main

sys.exit(main())
