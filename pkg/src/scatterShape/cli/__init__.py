from .config import PipelineConfig, load_config
from .main import main
