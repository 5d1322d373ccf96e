"""Optimal-decay classification of two moment-free data (about a minute).

0.05*K carries a nonzero velocity moment and stays at the e^{-tau} rate;
the radial datum has no such moment and decays faster.
"""

from scaled_vorticity.asymptotics import classify_optimal_decay
from scaled_vorticity.fields import Grid
from scaled_vorticity.spectral_operator import hermite_function
from scaled_vorticity.profiles import profile

grid = Grid(96, 12.0)
data = {
    "0.05*K": 0.05 * profile("K", grid),
    "radial": 0.05 * (hermite_function((4, 0), grid) + 2 * hermite_function((2, 2), grid) + hermite_function((0, 4), grid)),
}
for name, w0 in data.items():
    rep = classify_optimal_decay(w0)
    print(f"{name:8s} -> {rep.classification}   consistent: {rep.consistent}")
