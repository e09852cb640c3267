# -*- coding: utf-8 -*-
"""Internal functions and values for this package."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import warnings

# Training stages, the numeric order is the allowed run order
BASE_PRETRAIN = 0
SPATIAL_FINETUNE = 1
TEMPORAL_TRAIN = 2
MOVIE_FINETUNE = 3

# Parameter groups
BASE = 10
ADAPTER = 11
TEMPORAL = 12

# Audio asset kinds
SFX = 20
MUSIC = 21

STAGES = (BASE_PRETRAIN, SPATIAL_FINETUNE, TEMPORAL_TRAIN, MOVIE_FINETUNE)
GROUPS = (BASE, ADAPTER, TEMPORAL)
KINDS = (SFX, MUSIC)

# Closed tone vocabulary for background music, order is the tie-break order
TONES = (
    "epic",
    "tense",
    "joyful",
    "melancholic",
    "mysterious",
    "serene",
    "triumphant",
    "ominous",
)

_NAMES = {
    BASE_PRETRAIN: "BASE_PRETRAIN",
    SPATIAL_FINETUNE: "SPATIAL_FINETUNE",
    TEMPORAL_TRAIN: "TEMPORAL_TRAIN",
    MOVIE_FINETUNE: "MOVIE_FINETUNE",
    BASE: "BASE",
    ADAPTER: "ADAPTER",
    TEMPORAL: "TEMPORAL",
    SFX: "SFX",
    MUSIC: "MUSIC",
}


def acheck(check_type, **kwargs) -> None:
    """
    Check type of given arguments.

    Use the argument name as keyword and the argument itself as value.

    :param check_type: Type to check
    :param kwargs: Arguments to check
    """
    for var_name in kwargs:
        none_okay = var_name.endswith("_noneok")

        if not (isinstance(kwargs[var_name], check_type) or none_okay and kwargs[var_name] is None):
            msg = "Argument '{0}' must be {1}{2}".format(
                var_name[: -len("_noneok")] if none_okay else var_name,
                str(check_type),
                " or <class 'NoneType'>" if none_okay else "",
            )
            raise TypeError(msg)


def consttostr(value) -> str:
    """
    Return the name of a stage, group or asset kind constant.

    :param value: Constant value
    :return: <class 'str'> name of the constant or empty string
    """
    return _NAMES.get(value, "")


def strtoconst(name: str) -> int:
    """
    Return the constant for a stage, group or asset kind name.

    Names are matched case insensitive, '-' is accepted for '_'.

    :param name: Name like 'SPATIAL_FINETUNE' or 'spatial-finetune'
    :return: <class 'int'> constant value
    """
    key = str(name).strip().upper().replace("-", "_")
    for value, const_name in _NAMES.items():
        if const_name == key:
            return value
    raise ValueError("unknown constant name '{0}'".format(name))


def set_debug(value) -> None:
    """
    Control the warnings of this package.

    :param value: True/1 show always, False/0 show once, -1 ignore all
    """
    if type(value) == bool:
        value = int(value)
    if not type(value) == int:
        raise TypeError("value must be <class 'bool'> or <class 'int'>")
    if not -1 <= value <= 1:
        raise ValueError("value must be True/False or -1, 0, 1")

    if value == -1:
        warnings.filterwarnings("ignore", module="scenecraft")
    elif value == 0:
        warnings.filterwarnings("default", module="scenecraft")
    else:
        warnings.filterwarnings("always", module="scenecraft")
