"""h-version study for a smooth solution on the unit square, RT elements, p = 1, 2, 3."""

import sys

from _common import run

from fosls.harness import StudyConfig

CONFIGS = [(f"square_smooth_RT_p{p}", StudyConfig(family="RT", p_s=p, p_v=p, levels=(0, 1, 2, 3, 4))) for p in (1, 2, 3)]

if __name__ == "__main__":
    sys.exit(run(CONFIGS, __doc__))
