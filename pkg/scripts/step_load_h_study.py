"""h-version study for the step load on the unit disk (interface r = 1/2 not resolved).

RT with p = 1, 2 and BDM with p = 2; the interface cuts elements, so the
data regularity is s = 1/2 and the rates are limited accordingly.
"""

import sys

from _common import run

from fosls.harness import StudyConfig


def config(family, p):
    return StudyConfig(domain="disk", family=family, p_s=p, p_v=p, levels=(0, 1, 2, 3, 4), case="radial_step")


CONFIGS = [("step_RT_p1", config("RT", 1)), ("step_RT_p2", config("RT", 2)), ("step_BDM_p2", config("BDM", 2))]

if __name__ == "__main__":
    sys.exit(run(CONFIGS, __doc__))
