"""Drive not commuting with the measurement: delay-dependent suppression or enhancement of damping."""

import sys

from _common import main

if __name__ == "__main__":
    sys.exit(main("fig-case3", __doc__))
