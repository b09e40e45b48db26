from .base import EnvironmentModel, IllegalActionError, replay
from .rubik import RubikModel
from .sokoban import SokobanModel


def get_model(name: str):
    if name == "rubik":
        return RubikModel()
    if name == "sokoban":
        return SokobanModel()
    raise ValueError(f"unknown environment {name!r}")


__all__ = ["EnvironmentModel", "IllegalActionError", "replay", "RubikModel", "SokobanModel", "get_model"]
