"""Residual dynamics learning and adaptive-frequency condensed MPC for
planar legged jumping.

The package is organized around a small set of numpy-based modules:

- ``srbd``: planar single-rigid-body dynamics and adaptive-step Euler models
- ``nets``: small Tanh MLPs with hand-rolled reverse-mode gradients
- ``legs``: two-link leg kinematics, Jacobians, and PD force conversion
- ``reference``: analytic jump reference generation and contact schedules
- ``training``: windowed datasets, rollout loss, and BPTT training
- ``mpc``: condensed quadratic-program assembly per control tick
- ``qp``: dense active-set QP solver with warm starting
- ``plant``: ground-truth simulator with a configurable hidden residual
- ``cli``: pipeline commands (reference, collect, train, run, evaluate)
"""

__version__ = "0.1.0"
