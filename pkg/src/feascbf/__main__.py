import sys

from feascbf.cli import main

sys.exit(main())
