import sys

from qnetconn.cli import main

sys.exit(main())
