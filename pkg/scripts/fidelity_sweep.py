"""Plateau fidelity against gamma*tau, analytic and ensemble."""

import sys

from _common import main

if __name__ == "__main__":
    sys.exit(main("fidelity-sweep", __doc__))
