"""Summarization evaluation harness.

Generates extractive (TextRank) and LLM summaries and scores them with
ROUGE, BERTScore and two LLM-powered factual-consistency evaluators that
also report a meta-evaluation score for the evaluator itself.
"""

__version__ = "0.1.0"
