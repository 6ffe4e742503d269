import sys

from hestonlab.cli import main

sys.exit(main())
