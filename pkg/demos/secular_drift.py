"""The tau*e^{-tau} term: start from b*(F1 + F2) and track e^tau * gamma2.

Without the nonlinear interaction gamma2 would decay exactly like e^{-tau};
the interaction adds a linear drift of slope kappa*b^2.
"""

import numpy as np

from scaled_vorticity.asymptotics import secular_slope
from scaled_vorticity.evolution import SimConfig, run
from scaled_vorticity.fields import Grid
from scaled_vorticity.profiles import KAPPA, profile

b = 0.05
grid = Grid(128, 12.0)
traj = run(b * (profile("F1", grid) + profile("F2", grid)), SimConfig(dt=4e-3, tau_end=4.0, record_every=50))

drift = np.exp(traj.times) * traj.column("gamma2")
for tau, d in zip(traj.times[::2], drift[::2]):
    print(f"tau={tau:4.1f}  e^tau gamma2 = {d:+.6e}")
print(f"fitted slope    {secular_slope(traj, (1.0, 4.0)):.5e}")
print(f"kappa * b^2     {KAPPA * b * b:.5e}")
