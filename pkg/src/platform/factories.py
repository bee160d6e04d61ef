"""
DenoiserFactory for ClipForge
"""

from typing import Optional

import torch

from ..models.observers import RunSubject, RunEvent
from ..network.denoiser import Denoiser, DenoiserConfig
from ..network.lora import attach_lora, DEFAULT_LORA_TARGETS


class DenoiserFactory(RunSubject):
    """Denoiser factory"""

    def __init__(self, factory_name: str):
        super().__init__()
        self.factory_name = factory_name

    def create_denoiser(self, cfg: Optional[DenoiserConfig] = None, seed: int = 0) -> Denoiser:
        """Create a denoiser whose initial weights depend only on (cfg, seed)"""
        cfg = cfg or DenoiserConfig()
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            model = Denoiser(cfg)

        self.notify_observers(RunEvent.MODEL_CREATED, {
            'factory': self.factory_name,
            'seed': seed,
            'config': cfg.to_dict()
        })

        return model

    def create_with_lora(self, cfg: Optional[DenoiserConfig] = None, seed: int = 0, rank: int = 4,
                         scale: float = 1.0, targets=DEFAULT_LORA_TARGETS) -> Denoiser:
        """Create a denoiser with fresh adapters on the key-frame attention projections"""
        model = self.create_denoiser(cfg, seed)
        return attach_lora(model, targets, rank=rank, scale=scale, seed=seed)
