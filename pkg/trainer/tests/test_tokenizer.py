"""Byte tokenizer round trips and special-token handling."""

from tabtrainer.tokenizer import EOS_ID, PAD_ID, VOCAB_SIZE, ByteTokenizer


def test_vocab_layout():
    assert VOCAB_SIZE == 258
    assert PAD_ID == 256
    assert EOS_ID == 257
    tok = ByteTokenizer()
    assert tok.vocab_size == VOCAB_SIZE
    assert tok.pad_id == PAD_ID
    assert tok.eos_id == EOS_ID


def test_ascii_round_trip():
    tok = ByteTokenizer()
    text = "class 0: 0.32; class 1: 0.68.\n# Answer: \n"
    ids = tok.encode(text)
    assert all(0 <= i < 256 for i in ids)
    assert len(ids) == len(text.encode("utf-8"))
    assert tok.decode(ids) == text


def test_non_ascii_round_trip():
    tok = ByteTokenizer()
    text = "geändert € café 中文"
    assert tok.decode(tok.encode(text)) == text


def test_specials_dropped_on_decode():
    tok = ByteTokenizer()
    ids = tok.encode("ok") + [EOS_ID, PAD_ID, PAD_ID]
    assert tok.decode(ids) == "ok"


def test_empty_string():
    tok = ByteTokenizer()
    assert tok.encode("") == []
    assert tok.decode([]) == ""
