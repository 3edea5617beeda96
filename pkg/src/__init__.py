"""Core modules for the semi-factual explanation benchmark."""
