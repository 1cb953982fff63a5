"""Nugget-based evaluation of search-augmented LLM battles.

Pipeline stages: battle ingestion, web corpus construction, dense
retrieval, LLM-driven nugget generation and assignment, query
classification, pairwise judging, and the statistical analysis relating
nugget scores to human preferences.
"""

__version__ = "0.1.0"
