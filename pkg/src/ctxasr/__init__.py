"""Context machinery for conversational speech-LLM ASR."""

__version__ = "0.1.0"
