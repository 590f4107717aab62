import sys

from distributed_safe_bo.experiments.cli import main

sys.exit(main())
