"""Phrase-based SMT for a resource-poor language helped by a related resource-rich one."""

__version__ = "0.1.0"
