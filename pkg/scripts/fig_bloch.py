"""Single trajectories on the Bloch sphere for three delays (no ensemble, so --n-traj is rejected)."""

import sys

from _common import main

if __name__ == "__main__":
    sys.exit(main("fig-bloch", __doc__))
