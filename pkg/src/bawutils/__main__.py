import sys

from bawutils.cli import main

sys.exit(main())
