"""Pydantic schemas for configuration, records and artifacts."""
