"""Python facade over the storyreel native core."""

from ._storyreel import (  # noqa: F401
    StoryreelError,
    aggregate,
    criteria,
    default_stoplist,
    extract_structured,
    gen_questionnaire,
    hits_stoplist,
    sample_keyframes,
    sha256_hex,
    storyboard_roundtrip,
    validate_storyboard,
)

__all__ = [
    "StoryreelError",
    "aggregate",
    "criteria",
    "default_stoplist",
    "extract_structured",
    "gen_questionnaire",
    "hits_stoplist",
    "sample_keyframes",
    "sha256_hex",
    "storyboard_roundtrip",
    "validate_storyboard",
]
