import sys

from herglotz.cli import main

sys.exit(main())
