from sumeval import prompts


def test_templates_have_placeholders():
    assert "{text}" in prompts.template(prompts.QUESTION_GENERATION)
    qa = prompts.template(prompts.QUESTION_ANSWERING)
    assert "{text}" in qa and "{questions}" in qa
    fc = prompts.template(prompts.FACT_CHECKING)
    assert "```\n{text}\n```" in fc and "{facts}" in fc
    assert prompts.template(prompts.FACT_EXTRACTION).startswith("{text}\n\n")


def test_question_generation_template_text():
    t = prompts.template(prompts.QUESTION_GENERATION)
    assert t.startswith("News article summary:\n{text}\n\nPlease write 4 yes-or-no questions")
    # the trailing space after "summary" on the first instruction line is part of the template
    assert "presented in the summary \nabove." in t
    assert t.endswith("correct answer.\n\nQuestions:\n")


def test_fill_does_not_interpret_braces():
    out = prompts.fill(prompts.FACT_EXTRACTION, text="a {weird} {facts} text")
    assert out.startswith("a {weird} {facts} text\n\nPlease list all of the facts")


def test_summary_prompt():
    assert prompts.summary_prompt("Body.") == "Body.\n\nWrite a 1-2 sentence summary of the article above."


def test_numbered():
    assert prompts.numbered(["a", "b"]) == "1. a\n2. b"
