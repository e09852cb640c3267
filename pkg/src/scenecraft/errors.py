# -*- coding: utf-8 -*-
"""Error classes of scenecraft."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"


class ScenecraftError(Exception):
    pass


class ConfigError(ScenecraftError):
    """Configuration file or value does not match the schema."""

    pass


class ClientError(ScenecraftError):
    """A text expansion, embedding or upscaler client failed."""

    pass


class ScriptParseError(ScenecraftError):
    pass


class StageOrderError(ScenecraftError):
    """Training stage is not allowed in the current model state."""

    pass


class DivergenceError(ScenecraftError):
    """Loss became non-finite during training."""

    pass


class SamplingError(ScenecraftError):
    pass


class CatalogError(ScenecraftError):
    pass


class ManifestError(ScenecraftError):
    pass


class UpscalerError(ClientError):
    """Upscaler failed on one scene, earlier scenes are kept."""

    def __init__(self, scene_index: int, message: str, done=()):
        super().__init__("upscaler failed on scene {0} | {1}".format(scene_index, message))
        self.scene_index = scene_index
        self.done = list(done)


class PipelineError(ScenecraftError):
    """A pipeline stage failed, the stage name is in .stage."""

    def __init__(self, stage: str, message: str):
        super().__init__("stage '{0}' failed | {1}".format(stage, message))
        self.stage = stage


class CountMismatchWarning(UserWarning):
    pass


class DegradedOutputWarning(UserWarning):
    pass
