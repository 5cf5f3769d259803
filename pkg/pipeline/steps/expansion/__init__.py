"""
Expansion Step

Expansion-on-average estimates, the conormal identity check and the
coexpanding-but-not-expanding block construction.
"""

from .main import BlockConstructionExperiment, ConormalExperiment, ExpansionExperiment

__all__ = ["ExpansionExperiment", "ConormalExperiment", "BlockConstructionExperiment"]
