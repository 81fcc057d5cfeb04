"""dyexplainer test suite."""
