"""Core utilities: exceptions, handlers and logging."""
