import sys

from maskface.cli import main

sys.exit(main())
