from sumeval import prompts
from sumeval.gateway import (CacheRecord, ContentFiltered, Gateway, ProviderProfile, ReplayCache,
                             Text, TransportError, canonical_key)
from sumeval.judge import Judge

JUDGE = "judge"


def replay_gateway(script, provider=JUDGE):
    """Gateway in replay mode whose cache maps prompt -> outcome (str means Text)."""
    profile = ProviderProfile(provider, "evaluator-model", "http://unused.test")
    cache = ReplayCache()
    for prompt, outcome in script.items():
        if isinstance(outcome, str):
            outcome = Text(outcome)
        request = profile.request(prompt)
        cache.put(CacheRecord(canonical_key(request), request, outcome))
    return Gateway({provider: profile}, "replay", cache)


def qg(summary):
    return prompts.fill(prompts.QUESTION_GENERATION, text=summary)


def qa(context, questions):
    return prompts.fill(prompts.QUESTION_ANSWERING, text=context,
                        questions=prompts.numbered(questions))


def fx(summary):
    return prompts.fill(prompts.FACT_EXTRACTION, text=summary)


def fc(context, facts):
    return prompts.fill(prompts.FACT_CHECKING, text=context, facts=prompts.numbered(facts))


def judge(script):
    return Judge(replay_gateway(script), JUDGE)


__all__ = ["ContentFiltered", "TransportError", "judge", "qg", "qa", "fx", "fc", "replay_gateway"]
