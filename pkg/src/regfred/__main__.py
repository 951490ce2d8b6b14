import sys

from regfred.cli import main

sys.exit(main())
