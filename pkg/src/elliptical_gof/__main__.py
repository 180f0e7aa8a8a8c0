"""Run the command line interface with ``python -m elliptical_gof``."""

from .cli import main

raise SystemExit(main())
