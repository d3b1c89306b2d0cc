import sys

from csal_classifier.cli import main

if __name__ == '__main__':
    sys.exit(main())
