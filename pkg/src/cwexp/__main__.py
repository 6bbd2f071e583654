import sys

from cwexp.cli import main

sys.exit(main())
