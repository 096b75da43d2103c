from .circuit import CircuitLayout, circuit_layout, gen_witness, public_values, synthesize_main
from .r1cs import Builder, ConstraintSystem, Var, Witness, check_satisfied

__all__ = [
    "Builder",
    "CircuitLayout",
    "ConstraintSystem",
    "Var",
    "Witness",
    "check_satisfied",
    "circuit_layout",
    "gen_witness",
    "public_values",
    "synthesize_main",
]
