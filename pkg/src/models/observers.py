import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Tuple
from enum import Enum

logger = logging.getLogger(__name__)


class RunEvent(Enum):
    """Types of events raised while training, sampling and managing models"""
    TRAINING_STARTED = "training_started"
    ITERATION_COMPLETED = "iteration_completed"
    TRAINING_FINISHED = "training_finished"
    SAMPLING_STEP = "sampling_step"
    CHECKPOINT_SAVED = "checkpoint_saved"
    CHECKPOINT_LOADED = "checkpoint_loaded"
    MODEL_CREATED = "model_created"
    MODEL_REMOVED = "model_removed"


class RunObserver(ABC):
    """Base interface for run observers"""

    @abstractmethod
    def on_run_event(self, event_type: RunEvent, data: Dict[str, Any]) -> None:
        """
        Called when something happens in a run

        Args:
            event_type: Event type
            data: Event data (iteration, loss, timestep, path, etc.)
        """
        pass


class RunSubject(ABC):
    """Interface for subjects that can have observers"""

    def __init__(self):
        self._observers: List[RunObserver] = []

    def attach_observer(self, observer: RunObserver) -> None:
        """Adds observer"""
        if observer not in self._observers:
            self._observers.append(observer)

    def detach_observer(self, observer: RunObserver) -> None:
        """Removes observer"""
        if observer in self._observers:
            self._observers.remove(observer)

    def notify_observers(self, event_type: RunEvent, data: Dict[str, Any]) -> None:
        """Notifies all observers about the event"""
        for observer in self._observers:
            observer.on_run_event(event_type, data)


class LossTraceRecorder(RunObserver):
    """Collects (iteration, loss) pairs from ITERATION_COMPLETED events"""

    def __init__(self):
        self.trace: List[Tuple[int, float]] = []

    def on_run_event(self, event_type: RunEvent, data: Dict[str, Any]) -> None:
        if event_type == RunEvent.ITERATION_COMPLETED:
            self.trace.append((int(data["iteration"]), float(data["loss"])))

    def to_text(self) -> str:
        """Plain-text table: header line then one "iteration loss" row per step."""
        lines = ["iteration loss"]
        lines.extend(f"{it} {loss:.10e}" for it, loss in self.trace)
        return "\n".join(lines) + "\n"


class LoggingObserver(RunObserver):
    """Forwards events to the module logger"""

    def __init__(self, every: int = 50):
        self.every = max(1, every)

    def on_run_event(self, event_type: RunEvent, data: Dict[str, Any]) -> None:
        if event_type == RunEvent.ITERATION_COMPLETED:
            if data["iteration"] % self.every == 0:
                logger.info("iteration %d loss %.6f", data["iteration"], data["loss"])
        elif event_type == RunEvent.SAMPLING_STEP:
            logger.debug("sampling t=%d -> %d", data["t"], data["t_prev"])
        else:
            logger.info("%s %s", event_type.value,
                        {k: v for k, v in data.items() if isinstance(v, (int, float, str))})
