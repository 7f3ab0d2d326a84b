"""Drive commuting with the measurement: constant-amplitude revival after the delay."""

import sys

from _common import main

if __name__ == "__main__":
    sys.exit(main("fig-case2", __doc__))
