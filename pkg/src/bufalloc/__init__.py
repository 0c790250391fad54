"""Buffer allocation analysis for message-passing traces."""
from .errors import (AssignmentShapeMismatch, BadArity, BufallocError, CausalityCycle, DepthUndefined,
                     FormulaError, IllegalMove, SelfMessage, StateLimitExceeded, TraceError, UnmatchedMessage)
from .graph import Channel, CommArc, CommGraph, VertexId, build_graph, to_document
from .coloring import (BufferAssignment, ColoringState, Move, Outcome, Rule, Scheme, Target, Verdict,
                       apply_move, enabled_moves, explore, initial_state, run_greedy)

__version__ = "0.1.0"
