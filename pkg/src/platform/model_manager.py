"""
ModelManager for ClipForge
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

from ..models.observers import RunSubject, RunEvent
from ..network.denoiser import Denoiser, DenoiserConfig
from ..network.lora import restore_adapters
from ..storage.tensorfile import load_checkpoint, save_checkpoint


class ModelManager(RunSubject):
    """Named denoisers with a current selection"""

    def __init__(self):
        super().__init__()
        self._models: Dict[str, Denoiser] = {}
        self._current_model_id: Optional[str] = None

    def add_model(self, model: Denoiser, model_id: Optional[str] = None) -> str:
        """Add a model to the manager"""
        model_id = model_id or f"model_{len(self._models)}"
        self._models[model_id] = model
        self._current_model_id = model_id

        self.notify_observers(RunEvent.MODEL_CREATED, {
            'model_id': model_id
        })

        return model_id

    def get_model(self, model_id: str) -> Optional[Denoiser]:
        """Get a model by ID"""
        return self._models.get(model_id)

    def get_current_model(self) -> Optional[Denoiser]:
        """Get the current active model"""
        if self._current_model_id:
            return self._models.get(self._current_model_id)
        return None

    def list_models(self) -> List[str]:
        """List all model IDs"""
        return list(self._models.keys())

    def remove_model(self, model_id: str) -> bool:
        """Remove a model"""
        if model_id in self._models:
            del self._models[model_id]
            if self._current_model_id == model_id:
                self._current_model_id = None

            self.notify_observers(RunEvent.MODEL_REMOVED, {
                'model_id': model_id
            })
            return True
        return False

    def save_model(self, model_id: str, path: Path, metadata: Optional[Dict[str, Any]] = None) -> Path:
        """Write a model and its run metadata as a checkpoint"""
        model = self._models[model_id]
        meta = {
            'denoiser': model.cfg.to_dict(),
            'lora_frozen': bool(getattr(model, 'lora_frozen', False)),
            'run': metadata or {},
        }
        save_checkpoint(path, model.state_dict(), meta)
        self.notify_observers(RunEvent.CHECKPOINT_SAVED, {
            'model_id': model_id,
            'path': str(path)
        })
        return Path(path)

    def load_model(self, path: Path, model_id: Optional[str] = None) -> str:
        """Rebuild a model from a checkpoint and make it current"""
        tensors, meta = load_checkpoint(path)
        model = Denoiser(DenoiserConfig.from_dict(meta['denoiser']))
        restore_adapters(model, tensors)
        model.load_state_dict(tensors, strict=True)
        if meta.get('lora_frozen'):
            model.lora_frozen = True
        model_id = self.add_model(model, model_id or Path(path).stem)
        self.notify_observers(RunEvent.CHECKPOINT_LOADED, {
            'model_id': model_id,
            'path': str(path),
            'run': meta.get('run', {})
        })
        return model_id
