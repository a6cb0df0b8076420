import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import doc
from lintext.features import FeatureKind, OccurrenceMatrix, Vocabulary
from lintext.ner import (
    Dictionary,
    NerCounts,
    NerError,
    append_ner_features,
    count_matches,
    dictionary_counts,
    load_dictionary,
    load_external_counts,
    match_spans,
    write_counts,
)


def test_load_dictionary_folds_and_dedups(tmp_path):
    p = tmp_path / "i-cyps.txt"
    p.write_text("# cytochromes\nCYP3A4\ncyp3a4\n\nCYP2D6\n", encoding="utf-8")
    d = load_dictionary(p)
    assert d.tool_id == "i-cyps" and d.terms == {"cyp3a4", "cyp2d6"}


def test_three_term_dictionary(tmp_path):
    p = tmp_path / "drugs.txt"
    p.write_text("warfarin\nketoconazole\nst john's wort\n", encoding="utf-8")
    assert len(load_dictionary(p, "i-Drugs").terms) == 3


def test_comment_only_dictionary_is_an_error(tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("# nothing\n#\n", encoding="utf-8")
    with pytest.raises(NerError):
        load_dictionary(p)
    with pytest.raises(NerError):
        Dictionary.from_terms("x", ["---"])


def test_count_examples():
    assert count_matches(Dictionary.from_terms("d", ["warfarin"]), "Warfarin and warfarin.") == 2
    assert count_matches(Dictionary.from_terms("d", ["drug interaction", "drug"]), "drug interaction") == 1
    assert count_matches(Dictionary.from_terms("d", ["cyp3a4"]), "no enzymes mentioned") == 0


def test_token_boundaries():
    d = Dictionary.from_terms("d", ["cyp3a"])
    assert count_matches(d, "CYP3A4 is not CYP3A") == 1
    assert count_matches(Dictionary.from_terms("d", ["st john's wort"]), "St. John's-wort extract") == 1


def test_longest_match_then_left_to_right():
    d = Dictionary.from_terms("d", ["a b", "b c", "a b c d"])
    assert match_spans(d, "a b c d") == [(0, 4)]
    assert match_spans(d, "a b c") == [(0, 2)]


def test_counts_title_and_abstract_and_distinct_mode():
    d = Dictionary.from_terms("d", ["warfarin", "aspirin"])
    x = doc("1", title="Warfarin study", abstract="warfarin with aspirin; warfarin again")
    assert count_matches(d, x) == 4
    assert count_matches(d, x, distinct=True) == 2
    counts = dictionary_counts(d, [x, doc("2", abstract="none")])
    assert counts.matrix(["1", "2"]).tolist() == [[4.0], [0.0]]


words = st.lists(st.sampled_from(["aa", "bb", "cc", "dd"]), max_size=20)
terms = st.lists(st.lists(st.sampled_from(["aa", "bb", "cc"]), min_size=1, max_size=3), min_size=1, max_size=4)


@given(words, terms, st.booleans())
def test_case_invariance_and_non_overlap(text_words, term_words, upper):
    text = " ".join(text_words)
    phrases = [" ".join(t) for t in term_words]
    d = Dictionary.from_terms("d", phrases)
    d_upper = Dictionary.from_terms("d", [p.upper() for p in phrases])
    shown = text.upper() if upper else text
    assert count_matches(d, text) == count_matches(d_upper, shown) == count_matches(d, shown)
    spans = match_spans(d, text)
    assert sum(b - a for a, b in spans) <= len(text_words)
    assert all(b1 <= a2 for (_, b1), (a2, _) in zip(spans, spans[1:]))


def test_external_counts(tmp_path):
    ids = [f"D{i}" for i in range(1213)]
    p = tmp_path / "oscar.csv"
    p.write_text("doc_id,count\n" + "".join(f"{i},{n % 4}\n" for n, i in enumerate(reversed(ids))), encoding="utf-8")
    col = load_external_counts(p, "oscar4", ids)
    assert col.matrix(ids).shape == (1213, 1)
    assert list(col.counts) == ids


@pytest.mark.parametrize(
    "body, match",
    [
        ("a,1\nb,-1\n", "negative"),
        ("a,1\na,2\n", "duplicate"),
        ("a,1\nb,x\n", "integer"),
        ("a,1\nb,2\nzz,0\n", "unknown"),
        ("a,1\n", "missing"),
        ("a,1,2\n", "expected"),
    ],
)
def test_external_count_errors(tmp_path, body, match):
    p = tmp_path / "c.csv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(NerError, match=match):
        load_external_counts(p, "t", ["a", "b"])


def test_write_counts_round_trip(tmp_path):
    c = NerCounts(("t",), {"a": np.array([3]), "b": np.array([0])})
    write_counts(c, ["a", "b"], tmp_path / "out.csv")
    back = load_external_counts(tmp_path / "out.csv", "t", ["a", "b"])
    assert back.matrix(["a", "b"]).tolist() == [[3.0], [0.0]]


def test_counts_invariants():
    with pytest.raises(NerError):
        NerCounts(("a",), {"x": np.array([-1])})
    with pytest.raises(NerError):
        NerCounts(("a", "b"), {"x": np.array([1])})
    c = NerCounts(("a",), {"x": np.array([1])})
    with pytest.raises(NerError):
        c.matrix(["x", "y"])
    with pytest.raises(NerError):
        NerCounts.combine([c, NerCounts(("b",), {"y": np.array([1])})])
    with pytest.raises(NerError):
        NerCounts.combine([c, c])


def _matrix():
    X = sp.csr_matrix(np.array([[1, 0, 1], [0, 1, 0]], dtype=float))
    vocab = Vocabulary(("aa", "bb", "cc"), (FeatureKind.UNIGRAM,) * 3, np.array([2, 2, 2]), 4, False)
    return OccurrenceMatrix(X, ("d1", "d2"), np.array([1, 0])), vocab


def test_append_nothing_is_identity():
    m, vocab = _matrix()
    out, v = append_ner_features(m, NerCounts((), {}), (), vocab)
    assert out is m and v is vocab


def test_append_two_tools_and_retract():
    m, vocab = _matrix()
    counts = NerCounts(("t1", "t2"), {"d1": np.array([3, 0]), "d2": np.array([1, 5])})
    out, v = append_ner_features(m, counts, ("t1", "t2"), vocab)
    assert out.dense()[0].tolist() == [1, 0, 1, 3, 0]
    assert v.kinds[-2:] == (FeatureKind.NER_COUNT,) * 2 and v.features[-1] == "NER:t2"
    assert np.array_equal(out.dense()[:, v.textual], m.dense())


def test_append_requires_alignment():
    m, _ = _matrix()
    with pytest.raises(NerError):
        append_ner_features(m, NerCounts(("t",), {"d1": np.array([1])}), ("t",))
