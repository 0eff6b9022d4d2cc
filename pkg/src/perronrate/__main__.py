"""Run the command-line interface with ``python -m perronrate``."""

import sys

from perronrate.cli import main

sys.exit(main())
