"""liftlab: random lifts, voltage covers, and Markov-operator spectra at desk scale."""

__version__ = "0.1.0"
