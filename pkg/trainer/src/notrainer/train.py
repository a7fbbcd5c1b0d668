"""Training loop, evaluation, and rollout for the small neural operators.

The objective is the mean relative L2 distance between the predicted and
true later states, the same measure the evaluation reports.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader, TensorDataset

from .data import LoadedDataset, load_many
from .models import build_model

__all__ = ["TrainRun", "TrainResult", "evaluate", "rollout", "train",
           "write_metrics"]


@dataclass
class TrainRun:
    model_kind: str = "spectral-operator"
    train_paths: list = field(default_factory=list)
    test_path: str | None = None
    epochs: int = 30
    lr: float = 2e-3
    batch_size: int = 64
    width: int = 16
    modes: int = 8
    seed: int = 0


@dataclass
class TrainResult:
    model: torch.nn.Module
    train_losses: list[float]
    test_errors: list[float]
    final_test_error: float


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def relative_l2(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean over the batch of ||pred - target||_2 / ||target||_2."""
    diff = torch.linalg.vector_norm(pred - target, dim=(-2, -1))
    denom = torch.linalg.vector_norm(target, dim=(-2, -1)).clamp_min(1e-30)
    return (diff / denom).mean()


def _tensors(ds: LoadedDataset) -> TensorDataset:
    x = torch.from_numpy(ds.inputs).float().unsqueeze(1)
    y = torch.from_numpy(ds.outputs).float().unsqueeze(1)
    return TensorDataset(x, y)


def _model_kwargs(run: TrainRun) -> dict:
    if run.model_kind == "spectral-operator":
        return {"width": run.width, "modes": run.modes}
    return {"width": run.width}


def train(run: TrainRun) -> TrainResult:
    _seed_everything(run.seed)
    train_ds = load_many(run.train_paths)
    if train_ds.dim != 2:
        raise ValueError("the bundled models consume 2D states")
    model = build_model(run.model_kind, **_model_kwargs(run))
    loader = DataLoader(
        _tensors(train_ds), batch_size=run.batch_size, shuffle=True,
        generator=torch.Generator().manual_seed(run.seed),
    )
    test_ds = load_many([run.test_path]) if run.test_path else None
    optimizer = torch.optim.Adam(model.parameters(), lr=run.lr, weight_decay=1e-4)
    scheduler = torch.optim.lr_scheduler.StepLR(
        optimizer, step_size=max(run.epochs // 3, 1), gamma=0.5
    )

    train_losses: list[float] = []
    test_errors: list[float] = []
    for _ in range(run.epochs):
        model.train()
        total = 0.0
        count = 0
        for x, y in loader:
            optimizer.zero_grad()
            loss = relative_l2(model(x), y)
            loss.backward()
            optimizer.step()
            total += loss.detach().item() * x.shape[0]
            count += x.shape[0]
        scheduler.step()
        train_losses.append(total / count)
        if test_ds is not None:
            test_errors.append(evaluate(model, test_ds))

    final = test_errors[-1] if test_errors else float("nan")
    return TrainResult(model, train_losses, test_errors, final)


@torch.no_grad()
def evaluate(model: torch.nn.Module, ds: LoadedDataset) -> float:
    """Mean relative L2 error over a dataset."""
    model.eval()
    loader = DataLoader(_tensors(ds), batch_size=128)
    total = 0.0
    count = 0
    for x, y in loader:
        total += float(relative_l2(model(x), y)) * x.shape[0]
        count += x.shape[0]
    return total / count


@torch.no_grad()
def rollout(model: torch.nn.Module, states: np.ndarray) -> list[float]:
    """Recursive application along one trajectory: per-step relative error.

    ``states`` holds the true consecutive states, shape (steps + 1, n, n);
    the model starts from states[0] and is fed its own predictions.
    """
    model.eval()
    current = torch.from_numpy(states[0]).float()[None, None]
    errors = []
    for truth in states[1:]:
        current = model(current)
        t = torch.from_numpy(truth).float()[None, None]
        errors.append(float(relative_l2(current, t)))
    return errors


def write_metrics(result: TrainResult, path: str | Path,
                  plot_path: str | Path | None = None) -> None:
    """Metrics as a flat key-value document, plus an optional loss plot."""
    lines = [
        f"epochs = {len(result.train_losses)}",
        f"final_test_error = {result.final_test_error!r}",
        "train_losses = " + ",".join(f"{v:.6e}" for v in result.train_losses),
        "test_errors = " + ",".join(f"{v:.6e}" for v in result.test_errors),
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if plot_path is not None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.semilogy(result.train_losses, label="train loss")
        if result.test_errors:
            ax.semilogy(result.test_errors, label="test error")
        ax.set_xlabel("epoch")
        ax.set_ylabel("relative L2")
        ax.legend()
        fig.tight_layout()
        fig.savefig(plot_path, dpi=110)
        plt.close(fig)
