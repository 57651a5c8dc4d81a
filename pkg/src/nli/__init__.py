"""Program induction with a learned discrete token language.

A specification encoder maps input-output examples to a sequence of codebook
token distributions; a recurrent, skip-gated neural executor runs those tokens
on a query input; test-time gradient search refines the token sequence to
better explain the specification.
"""

__version__ = "0.1.0"
