import sys

from phn.cli import main

sys.exit(main())
