"""DeepCoder-style list DSL: tokenizer, parser, interpreter, task sampler."""

from .dsl import (
    DSLProgram,
    ExecutionError,
    LAMBDAS,
    LAMBDAS_BY_NAME,
    OPERATIONS,
    OPERATIONS_BY_NAME,
    Statement,
    ValueRangeError,
    comparison,
    execute,
)
from .parser import ParseError, parse
from .sampler import (
    DeepCoderConfig,
    SPLIT_NAMES,
    decode_inputs,
    encode_inputs,
    encode_value,
    generate_deepcoder,
    sample_task,
    validate_record,
)
from .tokens import (
    BOS_ID,
    EOS_ID,
    LexicalError,
    PAD_ID,
    TOKEN_TABLE,
    TOKEN_TO_ID,
    VOCAB_SIZE,
    detokenize,
    tokenize,
)

__all__ = [
    "DSLProgram",
    "ExecutionError",
    "LAMBDAS",
    "LAMBDAS_BY_NAME",
    "OPERATIONS",
    "OPERATIONS_BY_NAME",
    "Statement",
    "ValueRangeError",
    "comparison",
    "execute",
    "ParseError",
    "parse",
    "DeepCoderConfig",
    "SPLIT_NAMES",
    "decode_inputs",
    "encode_inputs",
    "encode_value",
    "generate_deepcoder",
    "sample_task",
    "validate_record",
    "BOS_ID",
    "EOS_ID",
    "LexicalError",
    "PAD_ID",
    "TOKEN_TABLE",
    "TOKEN_TO_ID",
    "VOCAB_SIZE",
    "detokenize",
    "tokenize",
]
