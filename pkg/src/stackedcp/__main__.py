import sys

from stackedcp.cli import main

sys.exit(main())
