"""A rule-based stand-in for a chat-completion endpoint.

It recognises the four evaluator prompts and the summary prompt and answers
them with simple string rules, so recorded transcripts are deterministic and
their scores can be tallied by hand. Used to (re)record the bundled replay
fixture and by tests that exercise record mode.
"""

import json
import re

import httpx

from sumeval import prompts

SENT_RE = re.compile(r"(?<=[.!?])\s+(?=[A-Z])")
TOKEN_RE = re.compile(r"[^\W_]+")

FILTER_WORDS = ("stabbed",)
NO_CLAIM = "the plan was abandoned"
UNKNOWN_CLAIM = "who will pay for it"
LONG_QUESTION = 25  # tokens; longer claims get "Unknown" from the summary side
EMBELLISH_IF = "council"
EMBELLISHMENT = "Officials said the decision was unanimous."


def sentences(text):
    return [s for s in SENT_RE.split(text.strip()) if s]


def tokens(text):
    return TOKEN_RE.findall(text.lower())


def covered(claim, context, threshold=0.9):
    want = tokens(claim)
    have = set(tokens(context))
    return bool(want) and sum(t in have for t in want) / len(want) >= threshold


def between(text, start, end):
    i = text.index(start) + len(start)
    return text[i:text.index(end, i)]


def numbered_items(block):
    return [m[1] for m in re.finditer(r"^\d+\.\s+(.*?)\s*$", block, re.M)]


class ScriptedLLM:
    """Callable usable as an ``httpx.MockTransport`` handler.

    ``partial_contexts`` lists answering contexts for which only the first two
    questions get an answer. ``calls`` counts requests served.
    """

    def __init__(self, partial_contexts=()):
        self.partial_contexts = set(partial_contexts)
        self.calls = 0

    def transport(self):
        return httpx.MockTransport(self)

    def __call__(self, request):
        self.calls += 1
        body = json.loads(request.content)
        prompt = next(m["content"] for m in body["messages"] if m["role"] == "user")
        if any(w in prompt for w in FILTER_WORDS):
            return httpx.Response(400, json={"error": {
                "code": "content_filter", "message": "The response was filtered",
                "innererror": {"code": "ResponsibleAIPolicyViolation"}}})
        reply = self.respond(prompt)
        return httpx.Response(200, json={"choices": [{
            "index": 0, "finish_reason": "stop",
            "message": {"role": "assistant", "content": reply}}]})

    def respond(self, prompt):
        if prompt.endswith(prompts.SUMMARY_INSTRUCTION):
            return self.summarize(prompt[:-len(prompts.SUMMARY_INSTRUCTION)].strip())
        if prompt.startswith("News article summary:"):
            return self.questions(between(prompt, "News article summary:\n", "\n\nPlease write"))
        if "please answer the following numbered questions" in prompt:
            context = between(prompt, "News article:\n", "\n\nBased on the news article")
            questions = numbered_items(prompt.split("Questions:\n", 1)[1])
            return self.answers(context, questions)
        if "Please list all of the facts" in prompt:
            return self.facts(prompt.split("\n\nPlease list all of the facts")[0].strip())
        if "Statements:" in prompt:
            context = between(prompt, "```\n", "\n```")
            facts = numbered_items(prompt.split("Statements:\n", 1)[1])
            return self.verdicts(context, facts)
        return "I am not sure what you are asking."

    def summarize(self, article):
        sents = sentences(article)
        out = sents[:1]
        if EMBELLISH_IF in article.lower():
            out.append(EMBELLISHMENT)
        elif len(sents) > 2:
            out.append(sents[2])
        return " ".join(out)

    def questions(self, summary):
        claims = [s.rstrip(".!?") for s in sentences(summary)][:3]
        lines = [f"Does the text say that {c[:1].lower() + c[1:]}? [Yes]" for c in claims]
        lines.append(f"Does the text say that {NO_CLAIM}? [No]")
        if len(lines) < 3:
            lines.append(f"Does the text say {UNKNOWN_CLAIM}? [Unknown]")
        return "\n".join(f"{i}. {q}" for i, q in enumerate(lines, 1))

    def answer(self, context, question):
        if NO_CLAIM in question:
            return "No"
        if UNKNOWN_CLAIM in question:
            return "Unknown"
        claim = question.removeprefix("Does the text say that ").rstrip("?")
        if len(tokens(claim)) > LONG_QUESTION and len(tokens(context)) < 80:
            return "Unknown"
        return "Yes" if covered(claim, context) else "Unknown"

    def answers(self, context, questions):
        if context in self.partial_contexts:
            questions = questions[:2]
        return "\n".join(f"{i}. {self.answer(context, q)}" for i, q in enumerate(questions, 1))

    def facts(self, summary):
        return "\n".join(f"{i}. {s}" for i, s in enumerate(sentences(summary), 1))

    def verdicts(self, context, facts):
        return "\n".join(f"{i}. {'TRUE' if covered(f, context) else 'FALSE'}"
                         for i, f in enumerate(facts, 1))
