"""Pretraining on source labels and few-shot transfer fine-tuning.

The transfer protocol: a model pretrained on the source domain is fine-tuned
on a small labeled target subset while its feature-facing layers stay
frozen. For the quantum model only the circuit angles theta train (input and
output linear layers and the normalizer are fixed); for the DNN the residual
blocks train while the first and last layers are fixed. Frozen parameters
are bitwise invariant, not merely small-gradient. Optimizer moments are
reset when fine-tuning starts: the pretraining moments describe curvature of
layers that no longer move.

`run_repeated` reruns the fine-tuning several times to report mean and
standard deviation; repeats differ only in their split/shuffle seeds, either
resampling the transfer subset each time (default) or keeping the subset and
reshuffling batches.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset, Domain, features_matrix, labels_vector, split_labeled
from .evaluation import accuracy_of, evaluate
from .neural import AdamW


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 100
    epochs: int = 100
    lr: float = 0.02
    weight_decay: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.lr < 0 or self.weight_decay < 0:
            raise ValueError("lr and weight_decay must be nonnegative")


@dataclass(frozen=True)
class TransferConfig:
    """Few-shot fine-tuning settings. Exactly one of n_transfer /
    transfer_fraction picks the labeled target subset size. freeze=None
    means the model kind's default policy."""

    n_transfer: int | None = None
    transfer_fraction: float | None = None
    batch_size: int = 100
    epochs: int = 50
    lr: float = 0.02
    weight_decay: float = 1e-4
    freeze: frozenset[str] | None = None
    seed: int = 0
    resample: bool = True

    def __post_init__(self) -> None:
        if (self.n_transfer is None) == (self.transfer_fraction is None):
            raise ValueError("give exactly one of n_transfer or transfer_fraction")
        if self.n_transfer is not None and self.n_transfer < 1:
            raise ValueError("n_transfer must be >= 1")
        if self.transfer_fraction is not None and not 0.0 < self.transfer_fraction <= 1.0:
            raise ValueError("transfer_fraction must be in (0, 1]")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.lr < 0 or self.weight_decay < 0:
            raise ValueError("lr and weight_decay must be nonnegative")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_batch_loss: float
    eval_accuracy: float


@dataclass
class TrainTrace:
    records: list[EpochRecord] = field(default_factory=list)
    total_steps: int = 0

    @property
    def losses(self) -> list[float]:
        return [r.mean_batch_loss for r in self.records]

    @property
    def accuracies(self) -> list[float]:
        return [r.eval_accuracy for r in self.records]


def _sgd_epochs(model, samples, *, epochs, batch_size, lr, weight_decay,
                seed, frozen, eval_samples) -> TrainTrace:
    """Shared mini-batch loop. The last incomplete batch is kept; per-epoch
    loss is the mean over batch losses."""
    x = features_matrix(samples)
    y = labels_vector(samples)
    n = len(samples)
    needed = None if not frozen else set(model.params) - frozen
    optimizer = AdamW(lr=lr, weight_decay=weight_decay, frozen=frozen)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    trace = TrainTrace()
    for epoch in range(epochs):
        order = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            loss, grads = model.loss_and_grad(x[idx], y[idx], needed=needed)
            optimizer.step(model.params, grads)
            trace.total_steps += 1
            batch_losses.append(loss)
        trace.records.append(
            EpochRecord(
                epoch=epoch,
                mean_batch_loss=float(np.mean(batch_losses)),
                eval_accuracy=accuracy_of(model, eval_samples or samples),
            )
        )
    return trace


def pretrain(model, labeled, config: TrainConfig, eval_samples=None) -> TrainTrace:
    """Train ``model`` in place on the labeled source subset.

    Per-epoch accuracy in the trace is measured on ``eval_samples`` when
    given, else on the training subset itself.
    """
    if not labeled:
        raise ValueError("cannot pretrain on an empty labeled subset")
    return _sgd_epochs(
        model,
        labeled,
        epochs=config.epochs,
        batch_size=config.batch_size,
        lr=config.lr,
        weight_decay=config.weight_decay,
        seed=config.seed,
        frozen=frozenset(),
        eval_samples=eval_samples,
    )


def transfer_finetune(model, fewshot, config: TransferConfig, eval_samples=None) -> TrainTrace:
    """Fine-tune ``model`` in place on few-shot target labels with the
    freeze policy applied and a freshly initialized optimizer."""
    if not fewshot:
        raise ValueError("cannot fine-tune on an empty subset")
    frozen = model.transfer_frozen if config.freeze is None else frozenset(config.freeze)
    unknown = frozen - set(model.params)
    if unknown:
        raise ValueError(f"freeze names not in model: {sorted(unknown)}")
    if frozen >= set(model.params):
        raise ValueError("freeze policy leaves no trainable parameters")
    return _sgd_epochs(
        model,
        fewshot,
        epochs=config.epochs,
        batch_size=config.batch_size,
        lr=config.lr,
        weight_decay=config.weight_decay,
        seed=config.seed,
        frozen=frozen,
        eval_samples=eval_samples,
    )


@dataclass(frozen=True)
class TransferRun:
    seed: int
    n_fewshot: int
    pre_accuracy: float
    post_accuracy: float
    macro_auc: float
    micro_auc: float


@dataclass(frozen=True)
class RepeatedTransferResult:
    runs: tuple[TransferRun, ...]

    def _stats(self, values) -> tuple[float, float]:
        arr = np.array(values)
        return float(arr.mean()), float(arr.std())

    @property
    def accuracy_mean_std(self) -> tuple[float, float]:
        return self._stats([r.post_accuracy for r in self.runs])

    @property
    def pre_accuracy_mean_std(self) -> tuple[float, float]:
        return self._stats([r.pre_accuracy for r in self.runs])

    @property
    def macro_auc_mean_std(self) -> tuple[float, float]:
        return self._stats([r.macro_auc for r in self.runs])

    @property
    def micro_auc_mean_std(self) -> tuple[float, float]:
        return self._stats([r.micro_auc for r in self.runs])

    def to_dict(self) -> dict:
        acc = self.accuracy_mean_std
        pre = self.pre_accuracy_mean_std
        macro = self.macro_auc_mean_std
        micro = self.micro_auc_mean_std
        return {
            "n_repeats": len(self.runs),
            "pre_accuracy_mean": pre[0],
            "pre_accuracy_std": pre[1],
            "post_accuracy_mean": acc[0],
            "post_accuracy_std": acc[1],
            "macro_auc_mean": macro[0],
            "macro_auc_std": macro[1],
            "micro_auc_mean": micro[0],
            "micro_auc_std": micro[1],
            "runs": [
                {
                    "seed": r.seed,
                    "n_fewshot": r.n_fewshot,
                    "pre_accuracy": r.pre_accuracy,
                    "post_accuracy": r.post_accuracy,
                    "macro_auc": r.macro_auc,
                    "micro_auc": r.micro_auc,
                }
                for r in self.runs
            ],
        }


def run_repeated(
    pretrained,
    dataset: Dataset,
    config: TransferConfig,
    n_repeats: int = 5,
    seeds=None,
) -> tuple[RepeatedTransferResult, list]:
    """Repeated transfer fine-tuning from one pretrained model.

    Each repeat copies the pretrained model, draws the few-shot target
    subset, fine-tunes, and evaluates on the remaining target samples.
    resample=True gives every repeat its own subset; resample=False keeps
    the subset of repeat 0 and varies only batch shuffling. ``seeds``
    overrides the per-repeat seeds (e.g. identical seeds collapse the
    spread to zero).

    Returns the aggregate result and the fine-tuned models.
    """
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    if seeds is None:
        root = np.random.SeedSequence(config.seed)
        seeds = [int(s.generate_state(1)[0]) for s in root.spawn(n_repeats)]
    elif len(seeds) != n_repeats:
        raise ValueError("len(seeds) must equal n_repeats")

    runs = []
    models = []
    for r, run_seed in enumerate(seeds):
        split_seed = run_seed if config.resample else seeds[0]
        split = split_labeled(
            dataset,
            Domain.TARGET,
            fraction=config.transfer_fraction,
            count=config.n_transfer,
            seed=split_seed,
        )
        model = pretrained.copy()
        pre_acc = accuracy_of(model, split.evaluation)
        transfer_finetune(model, split.labeled, replace(config, seed=run_seed))
        report = evaluate(model, split.evaluation)
        runs.append(
            TransferRun(
                seed=run_seed,
                n_fewshot=len(split.labeled),
                pre_accuracy=pre_acc,
                post_accuracy=report.accuracy,
                macro_auc=report.macro_auc,
                micro_auc=report.micro_auc,
            )
        )
        models.append(model)
    return RepeatedTransferResult(runs=tuple(runs)), models
