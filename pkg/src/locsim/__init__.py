"""Simulation framework for resource-localisation attacks on game memory.

Synthetic game processes produce dump archives; pruning logics search them
greedily or statistically; aggregation turns the traces into percentile
and success-rate reports.
"""
from .core import (ArchiveError, DumpSequence, GroundTruth, SelectedSequence, read_archive,
                   validate_sequence, write_archive)
from .encodings import EncoderState, EncodingSpec, crt, decode, encode, mask_update
from .gamesim import Collection, ConfigError, SimConfig, simulate
from .pruning import (SuccessCriterion, chi, get_logic, greedy_attack, greedy_attack_many,
                      statistical_attack, statistical_attack_many, step, zeta)
from .selection import SelectionPolicy, count_subsequences, enumerate_subsequences
from .aggregation import aggregate, emit_report, percentile

__version__ = "0.1.0"
