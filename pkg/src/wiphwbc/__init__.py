"""Hierarchical whole-body control for planar wheeled inverted pendulum humanoids.

Layers, bottom to top: rigid-body dynamics of an n-link chain on a wheel pair
(`dynamics`), exact elimination of the unactuated heading coordinate
(`isolation`), a reduced point-mass pendulum-on-wheel model (`wipm`), offline
trajectory optimization (`ddp`), receding-horizon replanning (`mpc`), and a
QP-based whole-body controller (`wbc`).  `sim` closes the loop against an RK4
plant and `cli` exposes plan / simulate / check commands.
"""

__version__ = "0.1.0"
