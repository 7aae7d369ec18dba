"""Dataset generation, training, evaluation and experiments."""
