"""Batched metric, loss, and gradient kernels over flat coordinate arrays."""

from .kernels import batch_loss_grad, batch_metric

__all__ = ["batch_metric", "batch_loss_grad"]
__version__ = "0.1.0"
