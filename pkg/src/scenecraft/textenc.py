# -*- coding: utf-8 -*-
"""Text encoders producing the condition of the denoiser."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import hashlib
import re

import torch

_TOKEN = re.compile(r"[a-z0-9']+")


def tokenize(text: str) -> list:
    """Lower case word tokens of text."""
    return _TOKEN.findall(str(text).lower())


def token_bucket(token: str, buckets: int) -> int:
    """Stable hash bucket of a token, independent of PYTHONHASHSEED."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % buckets


class TextEncoder:
    """Interface of text encoders: text -> [tokens, dim] tensor."""

    dim = 0
    max_tokens = 0

    def encode(self, text: str) -> torch.Tensor:
        raise NotImplementedError()

    def encode_batch(self, texts) -> torch.Tensor:
        """Stack the encodings of texts to [B, tokens, dim]."""
        return torch.stack([self.encode(text) for text in texts])


class StubTextEncoder(TextEncoder):
    """
    Hashed bag of words encoder.

    Every word selects a row of a seeded random table. Rows after the last
    word are zero, so the empty text is the all-zero unconditional embedding.
    The table is read only, encode may be called from several threads.
    """

    __slots__ = "_table", "buckets", "dim", "max_tokens", "seed"

    def __init__(self, dim=32, max_tokens=8, buckets=512, seed=7):
        for name, value in (("dim", dim), ("max_tokens", max_tokens), ("buckets", buckets)):
            if type(value) != int or value < 1:
                raise ValueError("{0} must be a positive integer, got {1}".format(name, value))
        self.buckets = buckets
        self.dim = dim
        self.max_tokens = max_tokens
        self.seed = seed

        gen = torch.Generator().manual_seed(seed)
        self._table = torch.randn((buckets, dim), generator=gen)

    def encode(self, text: str) -> torch.Tensor:
        """
        Encode one text.

        :param text: Scene or caption text, may be empty
        :return: <class 'torch.Tensor'> float32 [max_tokens, dim]
        """
        rc = torch.zeros((self.max_tokens, self.dim))
        for i, token in enumerate(tokenize(text)[: self.max_tokens]):
            rc[i] = self._table[token_bucket(token, self.buckets)]
        return rc


def text_encoder_from_config(cfg) -> TextEncoder:
    """
    Create the text encoder named by [textenc] provider.

    :param cfg: PipelineConfig
    :return: TextEncoder
    """
    provider = cfg.get("textenc", "provider")
    if provider == "stub":
        return StubTextEncoder(
            dim=cfg.get("model", "text_embed_dim"),
            max_tokens=cfg.get("textenc", "max_tokens"),
            buckets=cfg.get("textenc", "buckets"),
            seed=cfg.get("textenc", "seed"),
        )
    raise ValueError("unknown text encoder provider '{0}'".format(provider))
