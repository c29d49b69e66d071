"""hamforge: compile polynomial-in-x, power-of-p Hamiltonians into verified block-encoding circuits."""
from .errors import HamforgeError
from .spec_model import HamiltonianSpec, load_spec, parse_spec, simple_spec

__version__ = "0.1.0"

__all__ = ["HamforgeError", "HamiltonianSpec", "load_spec", "parse_spec", "simple_spec", "__version__"]
