"""
Prompt embedding model
"""

import hashlib
from dataclasses import dataclass
from typing import List

import torch

DEFAULT_MAX_TOKENS = 8
DEFAULT_TEXT_DIM = 16


@dataclass(frozen=True)
class PromptEmbedding:
    """Fixed-size token vector sequence for a prompt (max_tokens x text_dim)."""

    text: str
    vectors: torch.Tensor
    role: str = "target"

    @property
    def is_null(self) -> bool:
        return not bool(torch.any(self.vectors != 0))


def tokenize(text: str) -> List[str]:
    return [tok for tok in text.lower().replace(",", " ").replace(".", " ").split() if tok]


def _token_vector(token: str, text_dim: int, dtype: torch.dtype) -> torch.Tensor:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    gen = torch.Generator().manual_seed(int.from_bytes(digest[:8], "little"))
    return torch.randn(text_dim, generator=gen, dtype=torch.float64).to(dtype)


def embed_prompt(
    text: str,
    role: str = "target",
    max_tokens: int = DEFAULT_MAX_TOKENS,
    text_dim: int = DEFAULT_TEXT_DIM,
    dtype: torch.dtype = torch.float64,
) -> PromptEmbedding:
    """Hashed bag-of-tokens embedding; tokens past max_tokens are dropped."""
    vectors = torch.zeros(max_tokens, text_dim, dtype=dtype)
    for idx, token in enumerate(tokenize(text)[:max_tokens]):
        vectors[idx] = _token_vector(token, text_dim, dtype)
    return PromptEmbedding(text=text, vectors=vectors, role=role)


def null_prompt(
    max_tokens: int = DEFAULT_MAX_TOKENS,
    text_dim: int = DEFAULT_TEXT_DIM,
    dtype: torch.dtype = torch.float64,
) -> PromptEmbedding:
    """All-zeros embedding used for the unconditional guidance branch."""
    return PromptEmbedding(text="", vectors=torch.zeros(max_tokens, text_dim, dtype=dtype), role="null")
