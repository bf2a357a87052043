import sys

from osr.harness.cli import main

sys.exit(main())
