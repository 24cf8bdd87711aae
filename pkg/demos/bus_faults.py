"""Run the hand over the emulated bus with frame loss and bit errors.

Run: python3 demos/bus_faults.py
"""

import numpy as np

from tendonhand import HandSimulator, load_config
from tendonhand.bus import BusLink, LossyChannel

cfg = load_config()
ref = np.radians(np.tile([0.0, 40.0, 50.0], 5))


def run(drop, corrupt, ticks=50):
    link = BusLink(LossyChannel(drop, corrupt, seed=1))
    sim = HandSimulator(cfg, link=link, seed=1)
    stops = 0
    for _ in range(ticks):
        s = sim.tick(ref)
        stops += any(s.faults["protective_stop"])
    err = np.degrees(np.abs(sim.state.theta.reshape(-1) - ref)).max()
    t = link.totals
    print(f"drop {drop:4.2f} corrupt {corrupt:4.2f}: dropped {t.dropped:4d}, "
          f"rejected by CRC {t.corrupt:4d}, retries {t.retries:4d}, "
          f"ticks with a protective stop {stops:2d}, final error {err:6.3f} deg")


for drop, corrupt in ((0.0, 0.0), (0.05, 0.05), (0.2, 0.1)):
    run(drop, corrupt)

# at 60% loss most sensor polls go stale even after the retry; the position
# loop then acts on held measurements and swings instead of settling, while
# the command path still gets through often enough to avoid a stop
run(0.6, 0.0)

# a silent link: after the watchdog window the driver boards stop and the
# motor currents decay toward zero
link = BusLink(LossyChannel(seed=1))
sim = HandSimulator(cfg, link=link)
sim.tick(ref)
link.channel.drop_prob = 1.0
for k in range(8):
    s = sim.tick(ref)
    print(f"silent round {k + 1}: stopped {any(s.faults['protective_stop'])}, "
          f"max |current| {np.abs(s.currents).max() * 1e3:7.3f} mA")
