"""p-version study for the step load on the coarsest disk mesh (h = 0.6), p_s = p_v = 1..8."""

import sys

from _common import run

from fosls.harness import StudyConfig

CONFIGS = [
    (f"step_{fam}_pversion", StudyConfig(domain="disk", family=fam, mode="p", pmin=1, pmax=8, level=0, case="radial_step"))
    for fam in ("RT", "BDM")
]

if __name__ == "__main__":
    sys.exit(run(CONFIGS, __doc__))
