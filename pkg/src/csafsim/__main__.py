import sys

from csafsim.cli import main

sys.exit(main())
