import sys

from graphon_connectome.cli import main

sys.exit(main())
