from .artifact_writer import ArtifactWriter
from .config_parser import ConfigParser

__all__ = ["ArtifactWriter", "ConfigParser"]
