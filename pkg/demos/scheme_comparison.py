"""How much does each ingredient buy?

Same channels, four designs:

* ``proposed``    waveform and RIS jointly optimised
* ``random_ris``  waveform optimised, RIS phases drawn at random
* ``no_ris``      the surfaces are removed altogether
* ``radar_only``  communication constraints dropped, an upper reference

Radar-only is warm-started from the joint design, so it can only improve on
it.  Run with ``python demos/scheme_comparison.py [n_seeds]``.
"""

import sys

import numpy as np

from risisac.config_io import parse_config_text
from risisac.experiments import execute

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 3
loaded = parse_config_text(f"""
profile: desk
experiment:
  kind: power_sweep
  grid: {{total_power: [40.0, 50.0]}}
  schemes: [proposed, random_ris, no_ris, radar_only]
  seeds: {list(range(n_seeds))}
  n_noise: 100
""")
records = execute(loaded)

print(f"median final SCNR over {n_seeds} seeds (dB)")
print(f"{'power':>8} " + " ".join(f"{s:>11}" for s in loaded.experiment.schemes))
for P in loaded.experiment.grid["total_power"]:
    meds = []
    for s in loaded.experiment.schemes:
        vals = [10 * np.log10(r.scnr) for r in records
                if r.values["total_power"] == P and r.scheme == s and r.status == "ok"]
        meds.append(np.median(vals))
    print(f"{P:>6.0f} W " + " ".join(f"{m:11.2f}" for m in meds))

# The gap between random and optimised phases is the value of RIS design;
# the gap to no_ris is the value of having the surfaces at all.
ber = np.median([r.ber for r in records if r.scheme == "proposed"])
print(f"\nmedian symbol error rate of the joint design: {ber:.3f}")
