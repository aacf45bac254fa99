import sys

from stecarbon.cli import main

sys.exit(main())
