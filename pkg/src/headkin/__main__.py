import sys

from headkin.cli import main

sys.exit(main())
