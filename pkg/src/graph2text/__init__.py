"""Graph-to-text data engineering, ablation and evaluation toolkit."""

from .errors import Graph2TextError, ParseError
from .graph import AmrGraph, KgTriple, KnowledgeGraph, Sample, graph_order, validate_amr
from .penman import linearize_amr, parse_penman, serialize_penman

__version__ = "0.1.0"
