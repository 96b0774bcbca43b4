"""chordnet: exact structure learning for chordal Markov networks via weighted MaxSAT."""

__version__ = "0.1.0"
