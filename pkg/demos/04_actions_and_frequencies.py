"""Actions, the period lattice, and trajectory frequencies.

The nontrivial action is a complete hyperelliptic integral over a branch
segment; its energy derivative predicts the reduced oscillation period, and
the frequency matrix predicts the rotation rate of each symmetry block in
the full system.  Both predictions are checked against measured trajectories.
"""
import numpy as np

from neumann import validate_spectrum
from neumann.dynamics import integrate, measure_period
from neumann.reduction import embed_regular, reduced_hamiltonian
from neumann.spectral import action_integrals, period_lattice
from neumann.separation import curve_from_energy

spec = validate_spectrum((0.0, 1.0), (2, 2))
w = np.array([0.25, 0.25])
xi0 = np.sqrt(np.array([0.5, 0.5]))
eta0 = np.zeros(2)
h = reduced_hamiltonian(spec, w, xi0, eta0)

curve = curve_from_energy(spec, w, h)
actions, flags = action_integrals(curve)
print(f"energy h = {h}; nontrivial action I_1 = {actions[0]:.10f} "
      f"(cycle flag {flags[0]})")

lat = period_lattice(spec, w, h)
print("\nperiod lattice T (rows: I, J_0, J_1):")
print(np.array_str(lat.t, precision=8, suppress_small=True))
print("frequency matrix Omega = T^(-1), first row:")
print(" ", np.round(lat.omega[0], 8))

period_pred = 2 * np.pi * lat.t[0, 0]
period_meas = measure_period(spec, w, xi0, eta0, dt=5e-4)
print(f"\nreduced period: 2 pi dI/dh = {period_pred:.8f}, "
      f"measured = {period_meas:.8f} "
      f"(rel err {abs(period_meas - period_pred) / period_pred:.1e})")

p0 = embed_regular(spec, xi0, eta0, w)
traj = integrate(spec, p0, 6 * period_meas, dt=5e-4, save_every=5)
for pos, sigma in enumerate(lat.j_blocks):
    theta = np.unwrap(np.arctan2(traj.x[:, 2 * sigma + 1], traj.x[:, 2 * sigma]))
    measured = (theta[-1] - theta[0]) / (traj.t[-1] - traj.t[0])
    predicted = lat.omega[0, 1 + pos]
    print(f"block {sigma} rotation rate: measured {measured:.8f}, "
          f"Omega entry {predicted:.8f} "
          f"(rel err {abs(measured - predicted) / abs(predicted):.1e})")
