"""Evaluator-side LLM access with transcript capture."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ContentFiltered, SumevalError
from .gateway import ContentFiltered as FilteredOutcome
from .gateway import Gateway, Text


class CallFailed(SumevalError):
    """Transport or response-shape failure; not attributable to the evaluator."""


@dataclass
class Judge:
    gateway: Gateway
    provider_id: str
    transcript: list = field(default_factory=list)

    def ask(self, step: str, prompt: str) -> str:
        outcome = self.gateway.chat(self.provider_id, prompt)
        if isinstance(outcome, Text):
            self.transcript.append({"step": step, "prompt": prompt, "response": outcome.content})
            return outcome.content
        self.transcript.append({"step": step, "prompt": prompt, "response": None,
                                "outcome": type(outcome).__name__})
        if isinstance(outcome, FilteredOutcome):
            raise ContentFiltered(f"{step}: {outcome.detail}")
        raise CallFailed(f"{step}: {outcome.detail}")

    def fork(self) -> "Judge":
        """Same endpoint, fresh transcript."""
        return Judge(self.gateway, self.provider_id)
