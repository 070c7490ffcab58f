LOGGER_LOG_SAMPLING_RATE: str = "DRGO_LOGGER_SAMPLE_RATE"
LOGGER_LOG_DEDUPLICATION_ENV: str = "DRGO_LOG_DEDUPLICATION_DISABLED"

METRICS_NAMESPACE_ENV: str = "DRGO_METRICS_NAMESPACE"

SERVICE_NAME_ENV: str = "DRGO_SERVICE_NAME"
DEFAULT_SERVICE_NAME: str = "drgo"

OUTPUT_ROOT_ENV: str = "DRGO_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT: str = "runs"
