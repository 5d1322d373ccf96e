"""Watch a small random vortex relax onto the Oseen profile.

Prints the L2 distance to A*G and to the first-order profile (Gaussian plus
the two dipole modes) along one trajectory. The first column should shrink
like e^{-tau/2}, the second like e^{-tau}.
"""

import numpy as np

from scaled_vorticity.asymptotics import AsymptoticProfile, estimate_coefficients, random_small_datum
from scaled_vorticity.evolution import SimConfig, run
from scaled_vorticity.fields import Grid, lp_norm

grid = Grid(128, 12.0)
w0 = random_small_datum(grid, np.random.default_rng(1))
traj = run(w0, SimConfig(dt=4e-3, tau_end=5.0, record_every=125, snapshot_every=125))

oseen = AsymptoticProfile("oseen", estimate_coefficients(traj, "oseen"), grid)
first = AsymptoticProfile("first", estimate_coefficients(traj, "first"), grid)

print(f"mass A = {traj.moments[0, 0]:+.5f}")
print("  tau    |w - AG|_2    |w - first|_2")
for tau, w in traj.snapshots:
    print(f"{tau:5.1f}   {lp_norm(w - oseen(tau), 2):.3e}     {lp_norm(w - first(tau), 2):.3e}")
