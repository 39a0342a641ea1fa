"""Optimal beam projection beamforming for single-user massive MIMO.

The package splits into three layers:

* physics: spherical modes (`modes`), angular power profiles (`profiles`)
  and correlation assembly (`correlation`);
* beam design: the alternating eigenbeam optimizer (`optimizer`), projection
  onto constrained antenna surfaces (`surfaces`) and DFT-codebook baselines
  (`conventional`);
* reporting: ergodic capacity (`capacity`), scenario orchestration
  (`scenario`) and the command line front end (`cli`).
"""

__version__ = "0.1.0"

from .modes import ModeSet, mode_count_for_radius, truncation_order
from .profiles import DirectionGrid, JointProfile, ProfileParams, make_grid
