"""Pure dephasing with delayed feedback: frozen plateaus for three delays plus the master-equation curve."""

import sys

from _common import main

if __name__ == "__main__":
    sys.exit(main("fig-case1", __doc__))
