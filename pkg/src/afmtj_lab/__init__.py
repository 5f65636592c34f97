"""Two-sublattice macrospin simulation of antiferromagnetic tunnel junctions,
with an MTJ baseline, bitline logic and an in-memory-computing cost model."""

from .device import DeviceGeometry, DeviceKind, DeviceParams, ResistanceModel, SwitchCriterion
from .integrator import SolverOptions, Trajectory
from .magdyn import ExchangeParams, MaterialParams, SublatticeState
from .transient import PulseSpec, TransientResult, run_read, run_write

__version__ = "0.1.0"
