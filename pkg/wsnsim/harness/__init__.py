"""Scenario loading, experiment runs, CSV results and comparison reports."""
