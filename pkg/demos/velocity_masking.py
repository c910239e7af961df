"""A slow target hidden in clutter, and how the RIS unmasks it.

One clutter patch sits exactly where the target is.  Without a RIS the
radar sees target and clutter through the same path, so once the target
stops moving there is no Doppler left to separate them.  The RIS adds
echoes from other angles whose Doppler shifts differ, and the joint design
exploits them.

Run with ``python demos/velocity_masking.py``.
"""

import numpy as np

from risisac.driver import RunOptions, run_baseline
from risisac.scenario import build_scenario, desk_config, sample_channels

seeds = [0, 1, 2]
speeds = [0.0, 15.0, 30.0, 60.0]
opts = RunOptions()

print(f"{'speed':>8} {'proposed':>10} {'no_ris':>10}   (median SCNR, dB)")
for v in speeds:
    row = {}
    for scheme in ("proposed", "no_ris"):
        vals = []
        for s in seeds:
            cfg = desk_config(clutter_positions=[(0.0, 50.0)], target_velocity=(0.0, v))
            scene = build_scenario(cfg)
            rep = run_baseline(scheme, scene, sample_channels(scene, s), opts)
            vals.append(rep.scnr_db)
        row[scheme] = np.median(vals)
    print(f"{v:6.0f} m/s {row['proposed']:10.2f} {row['no_ris']:10.2f}")

# The no_ris column collapses at 0 m/s while proposed barely moves.  The dip
# at 60 m/s comes from the direct-path Doppler phase wrapping at a 1 kHz PRF.
