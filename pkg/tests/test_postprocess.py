import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpusqg.postprocess import (
    FilterConfig,
    FilterSummary,
    filter_questions,
    load_banned_terms,
    normalize_question,
)

from conftest import make_record


class TestFilterQuestions:
    def test_preprint_dropped(self):
        records = [make_record("what is the biorxiv preprint")]
        assert list(filter_questions(records, FilterConfig())) == []

    def test_normal_question_kept(self):
        records = [make_record("what is covid 19")]
        assert list(filter_questions(records, FilterConfig())) == records

    def test_empty_stream(self):
        assert list(filter_questions([], FilterConfig())) == []

    def test_publisher_name_dropped_case_insensitive(self):
        records = [make_record("what is the Elsevier license")]
        assert list(filter_questions(records, FilterConfig())) == []

    def test_copyright_dropped(self):
        records = [make_record("who holds the COPYRIGHT here")]
        assert list(filter_questions(records, FilterConfig())) == []

    def test_drop_count_reported_and_order_preserved(self):
        records = [
            make_record("what is covid"),
            make_record("the preprint question"),
            make_record("what is sars"),
        ]
        summary = FilterSummary()
        kept = list(filter_questions(records, FilterConfig(), summary))
        assert [r.question for r in kept] == ["what is covid", "what is sars"]
        assert summary.dropped == 1
        assert summary.kept == 2

    def test_filter_is_idempotent(self):
        records = [make_record(q) for q in ["a preprint", "what is covid", "springer notes"]]
        once = list(filter_questions(records, FilterConfig()))
        twice = list(filter_questions(once, FilterConfig()))
        assert twice == once

    def test_custom_terms_replace_defaults(self):
        cfg = FilterConfig(banned_substrings=("boilerplate",), banned_publisher_names=())
        records = [make_record("a preprint survives now"), make_record("pure boilerplate")]
        kept = list(filter_questions(records, cfg))
        assert [r.question for r in kept] == ["a preprint survives now"]

    def test_empty_term_rejected(self):
        with pytest.raises(ValueError):
            FilterConfig(banned_substrings=("",))

    def test_load_banned_terms(self, tmp_path):
        path = tmp_path / "banned.txt"
        path.write_text("preprint\n\n copyright \n", encoding="utf-8")
        assert load_banned_terms(path) == ("preprint", "copyright")


class TestNormalizeQuestion:
    def test_lowercase_collapse_trim(self):
        assert normalize_question("  What is COVID 19 ") == "what is covid 19"

    def test_hyphen_variant_stays_distinct(self):
        assert normalize_question("what is covid-19") == "what is covid-19"
        assert normalize_question("what is covid-19") != normalize_question("what is covid 19")

    def test_punctuation_preserved(self):
        assert normalize_question("what is sars?") == "what is sars?"

    def test_aggressive_mode(self):
        assert normalize_question("What is COVID-19?", aggressive=True) == "what is covid 19"

    @given(st.text(max_size=120))
    @settings(max_examples=200)
    def test_idempotent(self, text):
        once = normalize_question(text)
        assert normalize_question(once) == once

    @given(st.text(max_size=120))
    @settings(max_examples=200)
    def test_aggressive_idempotent(self, text):
        once = normalize_question(text, aggressive=True)
        assert normalize_question(once, aggressive=True) == once

    @given(st.text(max_size=120), st.text(max_size=120))
    @settings(max_examples=200)
    def test_never_merges_distinct_content(self, a, b):
        # Strings differing beyond case and whitespace stay distinct keys.
        def core(s):
            return "".join(s.lower().split())

        if core(a) != core(b):
            assert normalize_question(a) != normalize_question(b)
