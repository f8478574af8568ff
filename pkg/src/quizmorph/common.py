"""Shared error type and diagnostic collection."""

import sys


class PipelineError(Exception):
    """Unrecoverable failure in a pipeline stage."""


class Diagnostics:
    """Collects non-fatal warnings and mirrors them to standard error."""

    def __init__(self, stream=None):
        self.messages = []
        self.stream = stream if stream is not None else sys.stderr

    def warn(self, source, line, message):
        text = f"WARN {source}:{line}: {message}"
        self.messages.append(text)
        print(text, file=self.stream)

    def __len__(self):
        return len(self.messages)
