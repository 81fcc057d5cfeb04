import sys

from dyexplainer.cli.main import main

sys.exit(main())
