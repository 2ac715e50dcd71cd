"""Pydantic schemas for domains, options and reports."""
