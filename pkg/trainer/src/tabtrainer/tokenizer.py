"""Byte-level tokenizer: one id per byte plus two specials.

No vocabulary files, no merges; any utf-8 text round-trips. Keeping the
vocabulary at 258 ids makes the toy backbone small and the checkpoint
self-contained.
"""

from __future__ import annotations

from typing import Sequence

PAD_ID = 256
EOS_ID = 257
VOCAB_SIZE = 258


class ByteTokenizer:
    """Stateless byte codec; specials sit just past the byte range."""

    pad_id = PAD_ID
    eos_id = EOS_ID
    vocab_size = VOCAB_SIZE

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode(self, ids: Sequence[int]) -> str:
        # specials are dropped; partial utf-8 at a truncation point is replaced
        return bytes(i for i in ids if 0 <= i < 256).decode("utf-8", errors="replace")
