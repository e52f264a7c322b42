"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A job, scene, or parameter set fails validation.

    messages: list of individual problems (at least one). str() joins them so
    a caller can surface every validation failure at once.
    """

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class ParseError(ValueError):
    """A file is malformed. offset is the byte position of the problem
    when it is known, else None."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
