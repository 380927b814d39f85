"""Byte-level generative trainer for tabular prompt corpora."""

from .corpus import CorpusError, TrainRecord, load_corpus
from .serving import CheckpointError, Generator, load_checkpoint, make_server, serve
from .tokenizer import EOS_ID, PAD_ID, VOCAB_SIZE, ByteTokenizer
from .training import TrainJobConfig, TrainingError, TrainResult, encode_example, train

__version__ = "0.1.0"
