"""End-of-run Bloch components as a function of the delay for the non-commuting drive."""

import sys

from _common import main

if __name__ == "__main__":
    sys.exit(main("delay-sweep", __doc__))
