"""Company-name disambiguation toolkit.

Decides whether two company-name strings refer to the same real-world
entity.  Ships a ladder of approaches: classical string-similarity
metrics with decision-stump baselines, a random forest over similarity
features, and a character-level Siamese LSTM, plus an active-learning
loop that spends annotation effort on the most uncertain pairs.
"""

__version__ = "0.1.0"
