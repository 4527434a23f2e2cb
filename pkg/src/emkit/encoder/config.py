"""Configuration for the encoder and its training loop."""

from __future__ import annotations

from dataclasses import dataclass, field, fields


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    """Shape of the Transformer encoder and classifier head."""

    vocab_size: int
    embed_dim: int = 64
    num_layers: int = 2
    num_heads: int = 2
    ffn_dim: int | None = None
    max_seq_len: int = 256
    dropout: float = 0.0

    def __post_init__(self) -> None:
        if self.vocab_size < 1:
            raise ConfigError("vocab_size must be positive")
        if self.embed_dim % self.num_heads != 0:
            raise ConfigError(
                f"embed_dim={self.embed_dim} not divisible by num_heads={self.num_heads}"
            )
        if self.max_seq_len < 8:
            raise ConfigError("max_seq_len must be at least 8")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.ffn_dim is None:
            object.__setattr__(self, "ffn_dim", 4 * self.embed_dim)

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.num_heads

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the fine-tuning recipe.

    The learning rate follows a linear decay schedule. ``batch_size`` of None
    resolves to 32 when MixDA is active and 64 otherwise. ``fixed_lambda``
    pins the MixDA interpolation weight instead of sampling it (diagnostic
    knob; lambda=1 must reproduce DA-free training exactly).
    """

    learning_rate: float = 3e-5
    batch_size: int | None = None
    epochs: int = 15
    seed: int = 0
    mixda_alpha: float = 0.8
    da_swap: bool = True
    fixed_lambda: float | None = None

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if not 0.0 < self.mixda_alpha <= 1.0:
            raise ConfigError("mixda_alpha must be in (0, 1]")
        if self.fixed_lambda is not None and not 0.0 <= self.fixed_lambda <= 1.0:
            raise ConfigError("fixed_lambda must be in [0, 1]")

    def resolved_batch_size(self, with_da: bool) -> int:
        if self.batch_size is not None:
            return self.batch_size
        return 32 if with_da else 64


def linear_decay(lr0: float, step: int, total_steps: int) -> float:
    """``lr(step) = lr0 * (1 - step / total_steps)``; hits 0 at the final step."""
    if total_steps < 1:
        raise ConfigError("total_steps must be positive")
    return lr0 * (1.0 - step / total_steps)
