"""Business logic: graph building, training, evaluation, explanations, planted data."""
