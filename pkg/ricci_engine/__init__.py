import logging
import os

from dotenv import load_dotenv

load_dotenv()

DEFAULT_SETTINGS = {
    "SEED": 42,
    "SAMPLES": 50,
    "FOURPIG": 1.0,
    "LOG_LEVEL": "WARNING",
}


class EngineApp:
    """Settings shared by every command of one invocation."""

    def __init__(self, config):
        self.config = config


def _from_environment():
    config = dict(DEFAULT_SETTINGS)
    if os.environ.get("RICCI_ENGINE_SEED"):
        config["SEED"] = int(os.environ["RICCI_ENGINE_SEED"])
    if os.environ.get("RICCI_ENGINE_SAMPLES"):
        config["SAMPLES"] = int(os.environ["RICCI_ENGINE_SAMPLES"])
    if os.environ.get("RICCI_ENGINE_FOURPIG"):
        config["FOURPIG"] = float(os.environ["RICCI_ENGINE_FOURPIG"])
    config["LOG_LEVEL"] = os.environ.get("RICCI_ENGINE_LOG_LEVEL", config["LOG_LEVEL"]).upper()
    return config


def create_app(test_config=None):
    if test_config is None:
        config = _from_environment()
    else:
        config = dict(DEFAULT_SETTINGS)
        config["TESTING"] = True
        config.update(test_config)

    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("ricci_engine").setLevel(config["LOG_LEVEL"])

    return EngineApp(config)
