"""Discrete-step simulation of CHTW and resource-controlled CHTW(R) nets.

Multidimensional Petri nets whose marks, thresholds and rates are fields on
n-dimensional grids.
"""

from .generate import figure2_net, random_net
from .kernel import NumericalFault, SimState, Trace, initial_state, run, step
from .model import (
    Axis,
    BinaryField,
    CBrane,
    ControlEntry,
    ControlMatrices,
    Diagnostic,
    Field,
    HCarrier,
    ModelError,
    Net,
    OperatorSpec,
    Space,
    TBrane,
    WCarrier,
    connectivity,
    scalar_space,
    validate,
)
from .oracle import oracle_run, oracle_step
from .parser import load, loads, parse, save, serialize

__version__ = "0.1.0"
