"""Cryptography against adversaries bounded in free energy, simulated at desk scale.

Agents pay one unit per copied or erased bit out of a budget: linear in
``nu`` for honest parties, ``2**nu`` for the adversary.  The package runs
secret-key establishment and oblivious transfer over a reversible SWAP
channel, and checks the counting, hashing and memory-game bounds that
their security rests on.
"""

from .bits import BitString, SubsetIndex, random_bitstring, sample_subset, xor
from .hashing import ToeplitzHash
from .ledger import Agent, BudgetExceeded, EnergyLedger
from .protocols import OtParams, SkeParams, run_ot, run_ske

__all__ = [
    "Agent",
    "BitString",
    "BudgetExceeded",
    "EnergyLedger",
    "OtParams",
    "SkeParams",
    "SubsetIndex",
    "ToeplitzHash",
    "random_bitstring",
    "run_ot",
    "run_ske",
    "sample_subset",
    "xor",
]

__version__ = "0.1.0"
