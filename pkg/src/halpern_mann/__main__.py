import sys

from halpern_mann.cli import main

sys.exit(main())
