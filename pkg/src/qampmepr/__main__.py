import sys

from qampmepr.cli import main

sys.exit(main())
