import sys

from robustdicke.cli.main import main


sys.exit(main())
