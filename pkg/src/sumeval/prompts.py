"""Prompt templates for summarization and the two evaluators.

The evaluator templates live as text assets next to this module and are
filled by plain placeholder substitution, so braces in article text are
never interpreted.
"""

from functools import lru_cache
from importlib import resources

SUMMARY_INSTRUCTION = "Write a 1-2 sentence summary of the article above."

QUESTION_GENERATION = "question_generation"
QUESTION_ANSWERING = "question_answering"
FACT_EXTRACTION = "fact_extraction"
FACT_CHECKING = "fact_checking"


@lru_cache(maxsize=None)
def template(name: str) -> str:
    return resources.files(__package__).joinpath("prompts", f"{name}.txt").read_text(encoding="utf-8")


def fill(name: str, **fields: str) -> str:
    out = template(name)
    for key, value in fields.items():
        out = out.replace("{" + key + "}", value)
    return out


def summary_prompt(article_text: str) -> str:
    return f"{article_text}\n\n{SUMMARY_INSTRUCTION}"


def numbered(items) -> str:
    return "\n".join(f"{i}. {item}" for i, item in enumerate(items, 1))
