"""Residual of the action transport equation under grid and step refinement."""
import numpy as np

from liouq.dynamics import NumericHamiltonian, action_field, observed_order, pde_residual
from liouq.grid import PhaseGrid


def S_s(q, p, *_):
    return 0.1 * q * q * p + 0.3 * np.sin(q) * np.cos(0.7 * p)


def residuals(H, levels, t=0.5, half_width=3.0, inner=2.0):
    out = []
    for n, dt in levels:
        grid = PhaseGrid.square(half_width, n)
        times = [t - dt, t, t + dt]
        hist = [action_field(H, grid, 0.0, tt, dt / 10, S_s=S_s)[0] for tt in times]
        r = pde_residual(times, hist, H, grid)
        qq, pp = grid.mesh()
        mask = (np.abs(qq) <= inner) & (np.abs(pp) <= inner)
        out.append(np.nanmax(np.abs(r[mask])))
    return np.array(out)


def main():
    levels = [(21, 0.04), (41, 0.02), (81, 0.01), (161, 0.005)]
    cases = {
        "free": NumericHamiltonian.separable(1.0, [0.0]),
        "harmonic": NumericHamiltonian.harmonic(),
        "quartic": NumericHamiltonian.separable(1.0, [0.0, 0.0, 0.5, 0.0, 0.1]),
    }
    for name, H in cases.items():
        errs = residuals(H, levels)
        orders = observed_order(errs)
        print(name)
        for (n, dt), e, o in zip(levels, errs, [np.nan, *orders]):
            print(f"  n={n:4d} dt={dt:.3f}  residual={e:.3e}  order={o:.3f}")


if __name__ == "__main__":
    main()
