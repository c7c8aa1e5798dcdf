"""Experiment harness: configuration, runners, statistics and reports."""
