"""子命令模块，每个模块提供 register(subparsers)"""

from . import density, estimate, fit, montecarlo, overid, simulate

COMMANDS = (simulate, fit, estimate, overid, montecarlo, density)

__all__ = ["COMMANDS", "density", "estimate", "fit", "montecarlo", "overid", "simulate"]
