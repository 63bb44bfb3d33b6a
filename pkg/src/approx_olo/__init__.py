"""Online linear optimization with approximation oracles."""

from .oracles import (ExtendedOracleOutput, FiniteOracle, GreedySetCover, OracleMeter,
                      ProblemInstance, extended_oracle_query, finite_instance, load_instance,
                      oracle_query, save_instance, setcover_instance, split_signs)
from .sod import Decomposition, Separation, SodConfig, separation_or_decomposition

__version__ = "0.1.0"
