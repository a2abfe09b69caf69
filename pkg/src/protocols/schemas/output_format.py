from enum import Enum


class OutputFormat(Enum):
    CSV = "csv"
    JSON = "json"
