import hypothesis.strategies as st
from hypothesis import given

from nlifoundry.textnorm import normalize_text, tokenize_words


def test_cedilla_mapping():
    assert normalize_text("ţară") == "țară"
    assert normalize_text("oraş Ţara Şura") == "oraș Țara Șura"


def test_whitespace_collapse():
    assert normalize_text("a  b\tc") == "a b c"
    assert normalize_text("  pad  ") == "pad"


def test_canonical_text_unchanged():
    text = "Orașul își ține târgul anual în septembrie."
    assert normalize_text(text) == text


@given(st.text(max_size=200))
def test_idempotent(text):
    once = normalize_text(text)
    assert normalize_text(once) == once


def test_tokenize_strips_punctuation_and_lowercases():
    assert tokenize_words("Ana are, mere!") == ["ana", "are", "mere"]
    assert tokenize_words("într-o zi") == ["într", "o", "zi"]
    assert tokenize_words("") == []
