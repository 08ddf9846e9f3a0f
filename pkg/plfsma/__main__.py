import sys

from plfsma.main import main

sys.exit(main())
