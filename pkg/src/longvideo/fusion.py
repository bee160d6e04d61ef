"""
Fusion of overlapping window predictions and the key-frame video
"""

from typing import List, Optional, Sequence, Tuple

import torch

from ..models.controls import ControlStack
from ..models.errors import ShapeMismatchError, WindowPlanError
from ..models.video import LatentVideo
from .windows import KeyFusionConfig, WeightFunction, WindowPlan, eval_log_weights, eval_weights


def padded_log_weights(plan: WindowPlan, f: WeightFunction) -> torch.Tensor:
    """n x N log-weight matrix, -inf outside each window's frames."""
    matrix = torch.full((plan.n, plan.N), float("-inf"), dtype=torch.float64)
    for j, (start, end) in enumerate(plan.windows):
        matrix[j, start - 1:end] = eval_log_weights(f, end - start + 1)
    return matrix


def padded_weights(plan: WindowPlan, f: WeightFunction) -> torch.Tensor:
    """n x N matrix whose row j holds w_j at window j's frames and zeros elsewhere."""
    matrix = torch.zeros(plan.n, plan.N, dtype=torch.float64)
    for j, (start, end) in enumerate(plan.windows):
        matrix[j, start - 1:end] = eval_weights(f, end - start + 1)
    return matrix


def normalized_weights(plan: WindowPlan, f: WeightFunction) -> torch.Tensor:
    """Padded weights scaled so every frame's column sums to one.

    Normalized in log space, so columns whose raw weights all underflow
    still get their correct proportions.
    """
    return torch.softmax(padded_log_weights(plan, f), dim=0)


def fuse_windows(preds: Sequence[LatentVideo], plan: WindowPlan, f: WeightFunction) -> LatentVideo:
    """Weighted per-frame average of the window predictions."""
    if len(preds) != plan.n:
        raise WindowPlanError(f"{len(preds)} predictions for {plan.n} windows")
    for j, (pred, length) in enumerate(zip(preds, plan.lengths())):
        if pred.shape[0] != length:
            raise WindowPlanError(f"window {j + 1} has {length} frames but its prediction has {pred.shape[0]}")
        if pred.shape[1:] != preds[0].shape[1:]:
            raise ShapeMismatchError(f"prediction {j + 1} frame shape {tuple(pred.shape[1:])} differs")
    weights = normalized_weights(plan, f)
    fused = torch.empty((plan.N,) + tuple(preds[0].shape[1:]), dtype=preds[0].dtype)
    written = torch.zeros(plan.N, dtype=torch.bool)
    for j, ((start, end), pred) in enumerate(zip(plan.windows, preds)):
        w = weights[j, start - 1:end].to(pred.dtype).view(-1, *([1] * (pred.dim() - 1)))
        contribution = w * pred
        seen = written[start - 1:end]
        target = fused[start - 1:end]
        target[~seen] = contribution[~seen]
        target[seen] += contribution[seen]
        written[start - 1:end] = True
    return fused


def extract_keyframe_video(xt: LatentVideo, stack: Optional[ControlStack],
                           plan: WindowPlan) -> Tuple[LatentVideo, Optional[ControlStack]]:
    """Gather the first frame of every window from the latents and every control."""
    if xt.shape[0] != plan.N:
        raise WindowPlanError(f"plan covers {plan.N} frames, video has {xt.shape[0]}")
    indices = [k - 1 for k in plan.key_indices]
    index = torch.as_tensor(indices, dtype=torch.long)
    key_stack = stack.select_frames(indices) if stack is not None else None
    return xt.index_select(0, index), key_stack


def fuse_keyframe(fused: LatentVideo, key_pred: LatentVideo, plan: WindowPlan,
                  cfg: KeyFusionConfig) -> LatentVideo:
    """Blend the key-frame video prediction into the fused prediction.

    ``key_only`` blends at key-frame indices and leaves other frames untouched;
    ``literal`` also scales every non-key frame by (1 - w).
    """
    if key_pred.shape[0] != plan.n:
        raise ShapeMismatchError(f"key prediction has {key_pred.shape[0]} frames, plan has {plan.n} windows")
    if key_pred.shape[1:] != fused.shape[1:] or fused.shape[0] != plan.N:
        raise ShapeMismatchError(
            f"cannot blend key prediction {tuple(key_pred.shape)} into {tuple(fused.shape)}"
        )
    index = torch.as_tensor([k - 1 for k in plan.key_indices], dtype=torch.long)
    if cfg.mode == "literal":
        out = (1.0 - cfg.w) * fused
        out[index] += cfg.w * key_pred
        return out
    out = fused.clone()
    if cfg.w == 0.0:
        return out
    out[index] = cfg.w * key_pred + (1.0 - cfg.w) * fused[index]
    return out
