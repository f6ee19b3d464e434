"""Core domain package."""
