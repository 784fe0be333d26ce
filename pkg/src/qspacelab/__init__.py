"""Desk-scale lab for pilot-wave dynamics in a uniform auxiliary coordinate.

Modules:
    grid_wave      periodic 1D wavefunctions and split-step evolution
    bohm           deterministic trajectories along the streamlines
    qmap           monotone map whose Jacobian is the density of states
    qwalk          stochastic motion of the mapped coordinate
    nelson         stochastic-mechanics comparator (nodal-crossing contrast)
    entropy_stats  entropy, histogram-volume, typicality, max-ent inference
    experiments    config-driven named experiments with CSV/JSON artifacts
"""

__version__ = "0.1.0"
