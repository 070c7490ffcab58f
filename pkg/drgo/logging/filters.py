import logging


class SuppressFilter(logging.Filter):
    """Reject records emitted by a run logger (or its children) on the root handlers

    Run loggers write through their own JSON handler; letting their records bubble up to a
    root handler configured by pytest or a notebook would print every line twice.
    """

    def __init__(self, logger_name: str):
        super().__init__()
        self.logger_name = logger_name

    def filter(self, record: logging.LogRecord) -> bool:  # noqa: A003
        name = record.name
        return not (name == self.logger_name or name.startswith(f"{self.logger_name}."))
