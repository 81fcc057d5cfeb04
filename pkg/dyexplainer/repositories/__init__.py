"""File-backed data access: edge streams, checkpoints and exports."""
