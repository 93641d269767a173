import sys

from rfsf.cli import main

sys.exit(main())
