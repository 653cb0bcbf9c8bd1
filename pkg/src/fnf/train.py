"""Adam, the L1 training loop with early stopping, evaluation, and ablations."""
from __future__ import annotations

import copy
import io
import logging
import time
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import tensor as T
from .autodiff import Parameter, zero_grads
from .data import SeriesTable, SplitSpec, WindowDataset, make_windows, split_and_scale
from .errors import ConfigError, FnfError, NonFiniteError
from .model import VARIANTS, ForecastModel, ModelHyper, build_variant
from .tape import Tape

log = logging.getLogger(__name__)


class TrainingError(FnfError, RuntimeError):
    code = "TrainingError"


@dataclass
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 128
    max_epochs: int = 100
    patience: int = 3
    seed: int = 0
    lambda_init: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    variant: str = "P"
    L: int = 512
    H: int = 96
    P: int = 16
    S: int = 8
    D: int = 128
    layers: int = 3
    horizons: tuple[int, ...] = (96, 192, 336, 720)
    train_frac: float = 0.7
    val_frac: float = 0.1
    test_frac: float = 0.2
    max_steps: int = 0  # 0 means unlimited

    def __post_init__(self):
        self.horizons = tuple(int(h) for h in self.horizons)
        for f in ("lr", "beta1", "beta2", "adam_eps", "lambda_init"):
            if getattr(self, f) < 0:
                raise ConfigError(f"{f} must be non-negative, got {getattr(self, f)}")
        for f in ("batch_size", "max_epochs", "patience", "L", "H", "P", "S", "D", "layers"):
            if getattr(self, f) < 1:
                raise ConfigError(f"{f} must be positive, got {getattr(self, f)}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.H not in self.horizons:
            raise ConfigError(f"horizon {self.H} is not in the configured set {self.horizons}")

    @classmethod
    def desk(cls, **overrides) -> "TrainConfig":
        """Small profile used by the tests: L=64, H=16, P=8, S=4, D=16, one layer, batch 32."""
        base = dict(L=64, H=16, P=8, S=4, D=16, layers=1, batch_size=32, horizons=(16,), lr=1e-3)
        base.update(overrides)
        return cls(**base)

    def hyper(self, M: int) -> ModelHyper:
        return ModelHyper(L=self.L, H=self.H, M=M, P=self.P, S=self.S, D=self.D,
                          layers=self.layers, lambda_init=self.lambda_init)

    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.train_frac, self.val_frac, self.test_frac)

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines ('#' starts a comment) into typed TrainConfig overrides."""
    types = {f.name: f.type for f in fields(TrainConfig)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, types[key], value, lineno)
    return out


def _coerce(key, typ, value, lineno):
    try:
        if typ == "float":
            return float(value)
        if typ == "int":
            return int(value)
        if typ == "str":
            return value
        return tuple(int(v) for v in value.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"config line {lineno}: bad value {value!r} for {key}") from None


class Adam:
    """Adam with bias correction; parameters marked ``nonneg`` are clamped at 0 after each step."""

    def __init__(self, params: Sequence[Parameter], lr: float = 1e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        for p in self.params:
            if not np.isfinite(p.grad).all():
                raise NonFiniteError(f"non-finite gradient in parameter {p.name!r} (id {p.id}); step aborted")
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if p.nonneg:
                np.maximum(p.data, 0.0, out=p.data)


def adam_step(params, state: Adam) -> None:
    state.step()


def l1_loss(pred, target) -> T.Tensor:
    return T.reduce_mean(T.abs_(T.sub(pred, target)))


@dataclass
class DataBundle:
    train: WindowDataset
    val: WindowDataset
    test: WindowDataset
    scaler: object
    M: int


def prepare_data(table: SeriesTable, L: int, H: int, spec: SplitSpec = SplitSpec()) -> DataBundle:
    tr, va, te, scaler = split_and_scale(table, spec, min_length=L + H)
    return DataBundle(make_windows(tr, L, H), make_windows(va, L, H), make_windows(te, L, H),
                      scaler, table.num_variables)


@dataclass
class TrainResult:
    model: ForecastModel
    history: list[dict]
    step_losses: list[float]
    best_epoch: int
    best_val: float
    stopped_early: bool
    runtime: float


def evaluate_loss(model: ForecastModel, windows: WindowDataset, batch_size: int = 256) -> float:
    total, count = 0.0, 0
    for x, y in windows.batches(batch_size):
        err = np.abs(model(x, "eval").data - y)
        total += err.sum()
        count += err.size
    return total / count


def train(config: TrainConfig, data: DataBundle, *,
          lr_for_epoch: Callable[[int], float] | None = None) -> TrainResult:
    """Fit one model; returns it restored to its best-validation epoch."""
    start = time.perf_counter()
    model = build_variant(config.variant, config.hyper(data.M), seed=config.seed)
    params = model.parameters()
    opt = Adam(params, config.lr, config.beta1, config.beta2, config.adam_eps)
    rng = np.random.default_rng(config.seed)  # PCG64, drives the window shuffle only
    history, step_losses = [], []
    best_val, best_epoch, best_state = np.inf, -1, None
    since_best, stopped_early, steps = 0, False, 0
    for epoch in range(config.max_epochs):
        opt.lr = config.lr if lr_for_epoch is None else lr_for_epoch(epoch)
        epoch_sum, epoch_n = 0.0, 0
        for b, (x, y) in enumerate(data.train.batches(config.batch_size, rng)):
            zero_grads(params)
            try:
                with Tape() as tape:
                    loss = l1_loss(model(x, "train"), y)
                tape.backward(loss)
                opt.step()
            except NonFiniteError as exc:
                raise TrainingError(f"epoch {epoch} batch {b}: {exc}") from exc
            value = loss.item()
            step_losses.append(value)
            epoch_sum += value * x.shape[0]
            epoch_n += x.shape[0]
            steps += 1
            if config.max_steps and steps >= config.max_steps:
                break
        val = evaluate_loss(model, data.val)
        history.append({"epoch": epoch, "train_loss": epoch_sum / epoch_n, "val_loss": val})
        log.info("epoch %d train %.5f val %.5f", epoch, epoch_sum / epoch_n, val)
        if val < best_val:
            best_val, best_epoch = val, epoch
            best_state = copy.deepcopy(model.state_dict())
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                stopped_early = True
                break
        if config.max_steps and steps >= config.max_steps:
            break
    model.load_state_dict(best_state)
    return TrainResult(model, history, step_losses, best_epoch, best_val, stopped_early,
                       time.perf_counter() - start)


def regression_metrics(pred: np.ndarray, target: np.ndarray) -> tuple[float, float]:
    err = np.asarray(pred) - np.asarray(target)
    return float(np.mean(err * err)), float(np.mean(np.abs(err)))


def evaluate(model: ForecastModel, windows: WindowDataset, batch_size: int = 256) -> tuple[float, float]:
    """Test MSE and MAE over every window, variable and step (z-scored units)."""
    hp = model.hyper
    if windows.L != hp.L or windows.H != hp.H or windows.split.values.shape[1] != hp.M:
        raise ConfigError(
            f"model expects L={hp.L}, H={hp.H}, M={hp.M}; data has L={windows.L}, "
            f"H={windows.H}, M={windows.split.values.shape[1]}"
        )
    se, ae, count = 0.0, 0.0, 0
    for x, y in windows.batches(batch_size):
        err = model(x, "eval").data - y
        se += float((err * err).sum())
        ae += float(np.abs(err).sum())
        count += err.size
    return se / count, ae / count


@dataclass
class EvalReport:
    variant: str
    per_horizon: dict[int, tuple[float, float]]
    runtime: float = 0.0
    n_params: int = 0

    @property
    def avg_mse(self) -> float:
        return float(np.mean([v[0] for v in self.per_horizon.values()]))

    @property
    def avg_mae(self) -> float:
        return float(np.mean([v[1] for v in self.per_horizon.values()]))


def evaluate_report(models: dict[int, ForecastModel], table: SeriesTable, spec: SplitSpec = SplitSpec(),
                    runtime: float = 0.0) -> EvalReport:
    per_h, variant, n_params = {}, None, 0
    for h, model in sorted(models.items()):
        bundle = prepare_data(table, model.hyper.L, h, spec)
        per_h[h] = evaluate(model, bundle.test)
        variant = model.variant
        n_params = max(n_params, model.num_parameters())
    return EvalReport(variant, per_h, runtime, n_params)


@dataclass
class AblationTable:
    reports: list[EvalReport]

    def rows(self) -> list[tuple[str, str, float, float]]:
        out = []
        for r in self.reports:
            for h, (mse, mae) in sorted(r.per_horizon.items()):
                out.append((r.variant, str(h), mse, mae))
            out.append((r.variant, "avg", r.avg_mse, r.avg_mae))
        return out

    def to_text(self) -> str:
        lines = [f"{'variant':<8}{'horizon':>8}{'MSE':>12}{'MAE':>12}"]
        for v, h, mse, mae in self.rows():
            lines.append(f"{v:<8}{h:>8}{mse:>12.6f}{mae:>12.6f}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("variant,horizon,mse,mae\n")
        for v, h, mse, mae in self.rows():
            buf.write(f"{v},{h},{mse!r},{mae!r}\n")
        return buf.getvalue()


def run_horizons(config: TrainConfig, table: SeriesTable) -> tuple[EvalReport, dict[int, TrainResult]]:
    """Train and test one model per configured horizon."""
    results, models = {}, {}
    start = time.perf_counter()
    for h in config.horizons:
        cfg = config.with_(H=h)
        bundle = prepare_data(table, cfg.L, h, cfg.split_spec())
        res = train(cfg, bundle)
        results[h] = res
        models[h] = res.model
    report = evaluate_report(models, table, config.split_spec(), time.perf_counter() - start)
    return report, results


def ablate(config: TrainConfig, table: SeriesTable, variants: Iterable[str] = VARIANTS) -> AblationTable:
    """Same seed and config for every variant; one report per variant."""
    reports = []
    for v in variants:
        report, _ = run_horizons(config.with_(variant=v), table)
        reports.append(report)
    return AblationTable(reports)
