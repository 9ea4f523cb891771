"""Consistent query answering under primary and unary foreign keys."""
