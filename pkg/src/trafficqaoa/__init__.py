"""Route assignment for congested traffic as a QUBO, solved with simulated QAOA variants."""

from .circuit import Circuit, ParamVector, build_qaoa
from .ising import IsingModel, exhaustive_spectrum, normalize, to_ising
from .qubo import QuboModel, build_qubo
from .roadnet import RoadNetwork, TrafficInstance, build_instance, load_network, random_instance
from .simulator import sample, simulate

__version__ = "0.1.0"

__all__ = [
    "Circuit", "ParamVector", "build_qaoa", "IsingModel", "exhaustive_spectrum", "normalize", "to_ising",
    "QuboModel", "build_qubo", "RoadNetwork", "TrafficInstance", "build_instance", "load_network",
    "random_instance", "sample", "simulate",
]
