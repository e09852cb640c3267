# -*- coding: utf-8 -*-
"""Expansion of a user brief into scene scripts and tone summary."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import json
import re
import warnings

from ._internal import TONES, acheck
from .clients import TextExpansionClient
from .errors import ClientError, CountMismatchWarning, ScriptParseError
from .textenc import tokenize

EXPANSION_TEMPLATE = (
    "Write a sequence of prompts, using for movie generation for AI. Requirements:\n"
    "1) each prompt only serves for one scene lasting for about {seconds:g} seconds, "
    "and there are {n_scenes} prompts in total;\n"
    "2) each prompt contains clear subjects and detailed descriptions;\n"
    '3) each prompt contains texts like "4K" and "high resolution" '
    "for leading high-quality generation;\n"
    "4) the transition of each scene is very smooth;\n"
    "5) no other character appears in this movie. The movie is about {user_input}"
)

TONE_PROMPT_HEAD = (
    "Summarize the plot and tone of this movie and pick exactly one tone "
    "category for its background music."
)

STATUS_OK = "ok"
STATUS_COUNT_MISMATCH = "count_mismatch"

# Scene markers: "Scene 1:", "Shot 2 -", "1.", "1)", "1:", "-", "*", bullet
_RE_MARKER = re.compile(
    r"^(?:(?:scene|shot)\s*\d+\s*[:.)\-]|\d+\s*[.):]|[-*•])\s+", re.IGNORECASE
)
_RE_SENTENCE = re.compile(r"(?<=[.!?])\s+")

TONE_KEYWORDS = {
    "epic": ("epic", "legend", "legendary", "vast", "battle", "heroic", "journey", "empire"),
    "tense": ("chase", "race", "racing", "speed", "speeds", "danger", "escape", "pursuit"),
    "joyful": ("happy", "joy", "laugh", "laughing", "play", "playing", "smile", "party"),
    "melancholic": ("rain", "alone", "lonely", "tears", "sad", "grief", "farewell", "memory"),
    "mysterious": ("mystery", "fog", "shadow", "secret", "hidden", "strange", "unknown"),
    "serene": ("calm", "peaceful", "quiet", "gentle", "meadow", "lake", "breeze", "sunrise"),
    "triumphant": (
        "victory",
        "checkered",
        "triumph",
        "win",
        "wins",
        "winner",
        "champion",
        "trophy",
        "celebrate",
        "celebrates",
    ),
    "ominous": ("dark", "storm", "threat", "doom", "ruin", "looming", "creeping", "eerie"),
}


class UserBrief:
    """User description of the movie with scene count and scene length."""

    __slots__ = "n_scenes", "scene_seconds", "text"

    def __init__(self, text: str, n_scenes=10, scene_seconds=2.0):
        acheck(str, text=text)
        acheck(int, n_scenes=n_scenes)
        if not text.strip():
            raise ValueError("brief text is empty")
        if n_scenes < 1:
            raise ValueError("n_scenes must be >= 1, got {0}".format(n_scenes))
        if not scene_seconds > 0:
            raise ValueError("scene_seconds must be > 0, got {0}".format(scene_seconds))
        self.n_scenes = n_scenes
        self.scene_seconds = float(scene_seconds)
        self.text = text

    def to_dict(self) -> dict:
        return {"text": self.text, "n_scenes": self.n_scenes, "scene_seconds": self.scene_seconds}


class SceneScript:
    """One scene of the movie."""

    __slots__ = "duration_seconds", "index", "text"

    def __init__(self, index: int, text: str, duration_seconds: float):
        acheck(int, index=index)
        acheck(str, text=text)
        if index < 0:
            raise ValueError("scene index must be >= 0")
        if not text.strip():
            raise ValueError("scene text is empty")
        if not duration_seconds > 0:
            raise ValueError("duration_seconds must be > 0")
        self.duration_seconds = float(duration_seconds)
        self.index = index
        self.text = text

    def __repr__(self):
        return "SceneScript({0}, {1!r}, {2:g})".format(self.index, self.text, self.duration_seconds)

    def to_dict(self) -> dict:
        return {"index": self.index, "text": self.text, "duration_seconds": self.duration_seconds}


class ScriptSequence:
    """Ordered scene scripts expanded from one brief."""

    __slots__ = "brief", "scenes", "status"

    def __init__(self, brief: UserBrief, scenes, status=STATUS_OK):
        acheck(UserBrief, brief=brief)
        scenes = list(scenes)
        if not scenes:
            raise ValueError("a script sequence needs at least one scene")
        for k, scene in enumerate(scenes):
            acheck(SceneScript, scene=scene)
            if scene.index != k:
                raise ValueError("scene indexes must count from 0, got {0} at {1}".format(
                    scene.index, k
                ))
        if status not in (STATUS_OK, STATUS_COUNT_MISMATCH):
            raise ValueError("unknown status '{0}'".format(status))
        self.brief = brief
        self.scenes = scenes
        self.status = status

    def __len__(self):
        return len(self.scenes)

    def texts(self) -> list:
        return [scene.text for scene in self.scenes]

    def to_dict(self) -> dict:
        return {
            "brief": self.brief.to_dict(),
            "scenes": [scene.to_dict() for scene in self.scenes],
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, data: dict):
        try:
            brief = UserBrief(**data["brief"])
            scenes = [
                SceneScript(s["index"], s["text"], s["duration_seconds"]) for s in data["scenes"]
            ]
            return cls(brief, scenes, data.get("status", STATUS_OK))
        except (KeyError, TypeError) as e:
            raise ValueError("bad script sequence data | {0}".format(e))

    def save(self, path: str) -> None:
        """Write the sequence as json, equal sequences give equal bytes."""
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, path: str):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class ToneLabel:
    """Tone category of the movie plot."""

    __slots__ = "category", "confidence"

    def __init__(self, category: str, confidence: float):
        if category not in TONES:
            raise ValueError("unknown tone category '{0}'".format(category))
        if not 0.0 <= confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1], got {0}".format(confidence))
        self.category = category
        self.confidence = float(confidence)

    def __repr__(self):
        return "ToneLabel({0!r}, {1:g})".format(self.category, self.confidence)

    def to_dict(self) -> dict:
        return {"category": self.category, "confidence": self.confidence}


def build_expansion_prompt(brief: UserBrief) -> str:
    """
    Fill the five requirement template with the brief.

    :param brief: UserBrief
    :return: <class 'str'> prompt for the text expansion client
    """
    acheck(UserBrief, brief=brief)
    if not brief.text.strip():
        raise ValueError("brief text is empty")
    return EXPANSION_TEMPLATE.format(
        seconds=brief.scene_seconds,
        n_scenes=brief.n_scenes,
        user_input=brief.text.strip(),
    )


def format_as_numbered_list(texts) -> str:
    """
    Render texts as '1. a\\n2. b'.

    parse_scripts gives the same texts back, so every text has to be one
    stripped line.

    :param texts: Non blank texts
    :return: <class 'str'> numbered list
    """
    texts = list(texts)
    for text in texts:
        acheck(str, text=text)
        if not text.strip():
            raise ValueError("can not list a blank text")
        if text != text.strip() or "\n" in text or "\r" in text:
            raise ValueError("listed text must be one stripped line, got {0!r}".format(text))
    return "\n".join("{0}. {1}".format(k + 1, text) for k, text in enumerate(texts))


def parse_scripts(raw: str, brief: UserBrief) -> ScriptSequence:
    """
    Split a completion into scene scripts.

    Lines with list markers win, other lines are dropped then. Without any
    marker every non blank line is a scene, a single paragraph is split
    into sentences.

    :param raw: Completion text
    :param brief: Brief which gives scene count and duration
    :return: ScriptSequence, status count_mismatch if the count differs
    """
    acheck(str, raw=raw)
    acheck(UserBrief, brief=brief)
    # Only newlines end a line, other separators belong to the scene text
    lines = [line.strip() for line in raw.split("\n") if line.strip()]
    if not lines:
        raise ScriptParseError("completion is empty")

    marked = []
    for line in lines:
        ma = _RE_MARKER.match(line)
        if ma:
            marked.append(line[ma.end() :].strip())

    if marked:
        texts = [text for text in marked if text]
    elif len(lines) > 1:
        texts = lines
    else:
        texts = [s.strip() for s in _RE_SENTENCE.split(lines[0]) if s.strip()]
        if len(texts) < 2:
            raise ScriptParseError("no scene list found in completion")

    if not texts:
        raise ScriptParseError("list markers without scene text")

    scenes = [SceneScript(k, text, brief.scene_seconds) for k, text in enumerate(texts)]
    status = STATUS_OK
    if len(scenes) != brief.n_scenes:
        status = STATUS_COUNT_MISMATCH
        warnings.warn(
            "expected {0} scenes, completion has {1}".format(brief.n_scenes, len(scenes)),
            CountMismatchWarning,
        )
    return ScriptSequence(brief, scenes, status)


def expand(brief: UserBrief, client: TextExpansionClient, retries=0, **params) -> ScriptSequence:
    """
    Expand a brief into scene scripts with the client.

    Client and parse failures repeat the same prompt up to retries times.

    :param brief: UserBrief
    :param client: TextExpansionClient
    :param retries: Additional attempts after the first one
    :param params: Generation parameters for the client
    :return: ScriptSequence with at least one scene
    """
    acheck(TextExpansionClient, client=client)
    acheck(int, retries=retries)
    if retries < 0:
        raise ValueError("retries must be >= 0")

    prompt = build_expansion_prompt(brief)
    error = None
    for attempt in range(retries + 1):
        try:
            return parse_scripts(client.complete(prompt, **params), brief)
        except (ClientError, ScriptParseError) as e:
            error = e
            if attempt < retries:
                warnings.warn(
                    "expansion attempt {0} failed, retrying | {1}".format(attempt + 1, e),
                    RuntimeWarning,
                )
    raise error


def keyword_vote(texts) -> tuple:
    """
    Count tone keywords in texts.

    Ties go to the category listed first in the tone enumeration.

    :param texts: Scene texts
    :return: <class 'tuple'> (category, votes of category, votes of all)
    """
    votes = dict.fromkeys(TONES, 0)
    for text in texts:
        for token in tokenize(text):
            for category in TONES:
                if token in TONE_KEYWORDS[category]:
                    votes[category] += 1

    total = sum(votes.values())
    if total == 0:
        return TONES[0], 0, 0
    best = max(TONES, key=lambda category: (votes[category], -TONES.index(category)))
    return best, votes[best], total


def build_tone_prompt(scripts: ScriptSequence) -> str:
    """Prompt asking for one tone category of the scripts."""
    return "{0}\nCategories: {1}.\nAnswer with one category word only.\nScenes:\n{2}".format(
        TONE_PROMPT_HEAD,
        ", ".join(TONES),
        format_as_numbered_list([" ".join(text.split()) for text in scripts.texts()]),
    )


def map_tone(answer: str, texts) -> ToneLabel:
    """
    Map a free text answer to a ToneLabel.

    An exact category word gives confidence 1.0, a contained category 0.8,
    several contained categories 0.5 for the first one. Anything else falls
    back to the keyword vote over texts with at most 0.5.
    """
    text = answer.strip().lower()
    word = text.strip(" \t.!?,;:'\"")
    if word in TONES:
        return ToneLabel(word, 1.0)

    found = []
    for category in TONES:
        ma = re.search(r"\b{0}\b".format(category), text)
        if ma:
            found.append((ma.start(), category))
    if found:
        found.sort()
        return ToneLabel(found[0][1], 0.8 if len(found) == 1 else 0.5)

    category, votes, total = keyword_vote(texts)
    return ToneLabel(category, 0.5 * votes / total if total else 0.0)


def summarize_tone(scripts: ScriptSequence, client: TextExpansionClient, **params) -> ToneLabel:
    """
    Ask the client for the tone category of the movie.

    :param scripts: ScriptSequence
    :param client: TextExpansionClient
    :return: ToneLabel of the fixed enumeration
    """
    acheck(ScriptSequence, scripts=scripts)
    acheck(TextExpansionClient, client=client)
    answer = client.complete(build_tone_prompt(scripts), **params)
    return map_tone(answer, scripts.texts())
