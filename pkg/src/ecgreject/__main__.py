__docformat__ = 'google'

from ecgreject.cli import main

import sys

if __name__ == '__main__':
    sys.exit(main())
