"""
Losses, ground-truth preparation, adam with global-norm clipping, early stopping
and the SKF1 checkpoint codec.
"""
import io
import json
import logging
import pathlib
import struct
from dataclasses import dataclass, field

import numpy as np

import autodiff as ad
import dsp_core
import segmentation
from autodiff import Tape, Tensor
from config import Settings, TrainConfig
from errors import CheckpointError, LossError, NonFiniteError, ShapeError, StorageFileNotFoundError
from layers import bind_params, init_model_params, model_forward
from models.AudioBuffer import AudioBuffer
from models.Checkpoint import CHECKPOINT_MAGIC, CHECKPOINT_VERSION, Checkpoint
from models.ModelParams import ModelParams
from storage_strategies import get_storage_strategy

logger = logging.getLogger(__name__)

EPS = 1e-12
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


# --- Losses ---

def _check_non_negative(*grids: np.ndarray) -> None:
    for grid in grids:
        if np.any(grid < 0):
            raise LossError("generalized KL divergence needs non-negative entries")


def gkl(target: np.ndarray, estimate: np.ndarray) -> float:
    """Generalized KL: sum a*log((a+eps)/(b+eps)) - a + b. 0*log(0) counts as 0."""
    a = np.asarray(target, dtype=np.float64)
    b = np.asarray(estimate, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    _check_non_negative(a, b)
    return float(np.sum(a * np.log((a + EPS) / (b + EPS)) - a + b))


def gkl_tensor(target: np.ndarray, estimate: Tensor) -> Tensor:
    """gkl with a differentiable estimate; the target-only terms enter as a constant."""
    a = np.asarray(target, dtype=np.float64)
    _check_non_negative(a)
    constant_part = float(np.sum(a * np.log(a + EPS) - a))
    cross = ad.sum_all(ad.hadamard(ad.constant(a), ad.log_eps(estimate)))
    return ad.add(ad.subtract(ad.sum_all(estimate), cross), ad.constant(constant_part))


def joint_loss(target: np.ndarray, Y_filt: np.ndarray, Y_hat: np.ndarray, lam: float) -> float:
    return gkl(target, Y_filt) + gkl(target, Y_hat) + lam * float(np.sum(np.square(Y_hat)))


def joint_loss_tensor(target: np.ndarray, filtered: list[Tensor], enhanced: list[Tensor],
                      lam: float) -> Tensor:
    """
    Batch-mean joint objective. target is B x T' x N; filtered/enhanced are T' steps of (B, N).
    """
    n_segments = target.shape[0]
    total = None
    for t, (y_filt, y_hat) in enumerate(zip(filtered, enhanced)):
        a = target[:, t, :]
        term = ad.add(gkl_tensor(a, y_filt), gkl_tensor(a, y_hat))
        term = ad.add(term, ad.scale(ad.sum_all(ad.pow_scalar(y_hat, 2)), lam))
        total = term if total is None else ad.add(total, term)
    return ad.scale(total, 1.0 / n_segments)


def wiener_target(source_mags: list[np.ndarray], mix_mag: np.ndarray, alpha: float = 1.0) -> list[np.ndarray]:
    """Per source: |S_j|^a / (sum_k |S_k|^a + eps) * |Y|."""
    if len(source_mags) == 0:
        raise LossError("wiener_target needs at least one source")
    mix_mag = np.asarray(mix_mag, dtype=np.float64)
    powered = []
    for mag in source_mags:
        mag = np.asarray(mag, dtype=np.float64)
        if mag.shape != mix_mag.shape:
            raise ShapeError(f"shape mismatch: {mag.shape} vs {mix_mag.shape}")
        _check_non_negative(mag)
        powered.append(np.power(mag, alpha))
    denominator = np.sum(powered, axis=0) + EPS
    return [p / denominator * mix_mag for p in powered]


# --- Optimisation ---

def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values())))


def clip_global_norm(grads: dict[str, np.ndarray], c: float = 0.35) -> dict[str, np.ndarray]:
    if c <= 0:
        raise ValueError(f"clip norm must be positive, got {c}")
    norm = global_norm(grads)
    if norm <= c:
        return grads
    factor = c / norm
    return {name: g * factor for name, g in grads.items()}


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> 'AdamState':
        return cls(m={k: np.zeros_like(v) for k, v in params.items()},
                   v={k: np.zeros_like(v) for k, v in params.items()})


def adam_step(state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              lr: float) -> tuple[dict[str, np.ndarray], AdamState]:
    """Bias-corrected adam. Parameter arrays are updated in place and also returned."""
    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for name, param in params.items():
        g = grads[name]
        if g.shape != param.shape:
            raise ShapeError(f"shape mismatch for '{name}': {g.shape} vs {param.shape}")
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        param -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


# --- Data ---

@dataclass
class TrainingSet:
    """mix: B x T x N input segments, target: B x T' x N trimmed target segments."""
    mix: np.ndarray
    target: np.ndarray
    tracks: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.mix.shape[0]

    @classmethod
    def concatenate(cls, parts: list['TrainingSet']) -> 'TrainingSet':
        if not parts:
            raise LossError("empty training set")
        return cls(mix=np.concatenate([p.mix for p in parts]),
                   target=np.concatenate([p.target for p in parts]),
                   tracks=[name for p in parts for name in p.tracks])


def prepare_segments(mixture: AudioBuffer, source: AudioBuffer, other: AudioBuffer | None,
                     settings: Settings, name: str = '') -> TrainingSet:
    """
    STFT of the mixture and the two sources, alpha=1 Wiener ground truth for `source`,
    then mixture segments and context-trimmed target segments.
    """
    if len(source) != len(mixture):
        raise ShapeError(f"shape mismatch: mixture has {len(mixture)} samples, source {len(source)}")
    if other is None:
        other = AudioBuffer(mixture.samples - source.samples, mixture.sample_rate)

    mix_mag = dsp_core.magnitude(dsp_core.stft(mixture, settings.n_fft, settings.hop))
    source_mag = dsp_core.magnitude(dsp_core.stft(source, settings.n_fft, settings.hop)).values
    other_mag = dsp_core.magnitude(dsp_core.stft(other, settings.n_fft, settings.hop)).values
    target = wiener_target([source_mag, other_mag], mix_mag.values, alpha=1.0)[0]

    T, L = settings.segment_frames, settings.context_frames
    mix_segments = segmentation.tensorize(mix_mag, T, L)
    target_segments = segmentation.tensorize(mix_mag.with_values(target), T, L)
    return TrainingSet(mix=mix_segments.data,
                       target=segmentation.context_trim(target_segments.data, L),
                       tracks=[name] * mix_segments.data.shape[0])


# --- Training loop ---

def train_batch(params: ModelParams, mix: np.ndarray, target: np.ndarray,
                lam: float) -> tuple[float, dict[str, np.ndarray]]:
    with Tape() as tape:
        weights = bind_params(params, tape)
        _, filtered, enhanced = model_forward(weights, mix, params.L)
        loss = joint_loss_tensor(target, filtered, enhanced, lam)
        grads = tape.backward(loss)
    return loss.item(), grads


def train(config: TrainConfig, dataset: TrainingSet) -> Checkpoint:
    """
    Epochs of batched adam with clipping; stops once the epoch mean loss has not
    strictly improved on the best for `patience` consecutive epochs.
    """
    if len(dataset) == 0:
        raise LossError("empty training set")
    expected = (config.segment_frames, config.n_bins)
    if dataset.mix.shape[1:] != expected:
        raise ShapeError(f"shape mismatch: segments {dataset.mix.shape[1:]} vs config {expected}")

    params = init_model_params(config.n_bins, config.segment_frames, config.context_frames, config.seed)
    named = params.named_arrays()
    adam = AdamState.zeros_like(named)

    best_loss = float('inf')
    best_params = params.copy()
    best_epoch = 0
    stale_epochs = 0
    epoch_losses = []
    n_segments = len(dataset)

    logger.info(f"Training on {n_segments} segments, batch size {config.batch_size}, "
                f"up to {config.max_epochs} epochs.")

    for epoch in range(1, config.max_epochs + 1):
        total = 0.0
        for start in range(0, n_segments, config.batch_size):
            mix = dataset.mix[start:start + config.batch_size]
            target = dataset.target[start:start + config.batch_size]
            try:
                batch_loss, grads = train_batch(params, mix, target, config.lambda_l2)
            except NonFiniteError as e:
                raise NonFiniteError(f"non-finite value in epoch {epoch}, batch starting at segment {start}") from e
            if not np.isfinite(batch_loss):
                raise NonFiniteError(f"non-finite loss in epoch {epoch}, batch starting at segment {start}")

            grads = clip_global_norm(grads, config.clip_norm)
            adam_step(adam, named, grads, config.learning_rate)
            total += batch_loss * mix.shape[0]
            logger.debug(f"epoch {epoch} batch@{start}: loss {batch_loss:.6g}")

        epoch_loss = total / n_segments
        epoch_losses.append(epoch_loss)

        if epoch_loss < best_loss:
            best_loss = epoch_loss
            best_params = params.copy()
            best_epoch = epoch
            stale_epochs = 0
        else:
            stale_epochs += 1

        logger.info(f"Epoch {epoch}: mean loss {epoch_loss:.6g} (best {best_loss:.6g} at epoch {best_epoch}, "
                    f"stale {stale_epochs}/{config.patience})")
        if stale_epochs >= config.patience:
            logger.info(f"Early stopping after epoch {epoch}.")
            break

    return Checkpoint(params=best_params, config=config, epoch=best_epoch,
                      best_loss=best_loss, epoch_losses=epoch_losses)


def check_model_gradients(n_bins: int = 8, T: int = 6, L: int = 1, batch: int = 2,
                          seed: int = 0, eps: float = 1e-5, lam: float = 1e-4) -> float:
    """Gradient check of the full composite model and joint loss at toy dimensions."""
    rng = np.random.default_rng(seed)
    params = init_model_params(n_bins, T, L, seed)
    mix = rng.uniform(0.0, 1.0, size=(batch, T, n_bins))
    target = rng.uniform(0.0, 1.0, size=(batch, T - 2 * L, n_bins))

    def loss_fn(weights):
        _, filtered, enhanced = model_forward(weights, mix, L)
        return joint_loss_tensor(target, filtered, enhanced, lam)

    return ad.grad_check(loss_fn, params.named_arrays(), eps)


# --- Checkpoint codec ---
# magic | u32 version | u32 len + JSON metadata | u32 count | per tensor:
# u16 len + name | u8 ndim | u32 dims... | float64 values, all little-endian.

def serialize_checkpoint(checkpoint: Checkpoint) -> io.BytesIO:
    metadata = json.dumps({
        'config': checkpoint.config.model_dump(),
        'epoch': checkpoint.epoch,
        'best_loss': checkpoint.best_loss,
        'epoch_losses': checkpoint.epoch_losses,
        'T': checkpoint.params.T,
        'L': checkpoint.params.L,
    }).encode('utf-8')

    buffer = io.BytesIO()
    buffer.write(CHECKPOINT_MAGIC)
    buffer.write(struct.pack('<II', checkpoint.version, len(metadata)))
    buffer.write(metadata)

    named = checkpoint.params.named_arrays()
    buffer.write(struct.pack('<I', len(named)))
    for name, array in named.items():
        encoded = name.encode('utf-8')
        buffer.write(struct.pack('<H', len(encoded)))
        buffer.write(encoded)
        buffer.write(struct.pack('<B', array.ndim))
        buffer.write(struct.pack(f'<{array.ndim}I', *array.shape))
        buffer.write(np.ascontiguousarray(array, dtype='<f8').tobytes())
    buffer.seek(0)
    return buffer


def _read_exact(buffer: io.BytesIO, size: int) -> bytes:
    chunk = buffer.read(size)
    if len(chunk) != size:
        raise CheckpointError("checkpoint is truncated")
    return chunk


def deserialize_checkpoint(buffer: io.BytesIO) -> Checkpoint:
    if _read_exact(buffer, 4) != CHECKPOINT_MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, meta_len = struct.unpack('<II', _read_exact(buffer, 8))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        metadata = json.loads(_read_exact(buffer, meta_len).decode('utf-8'))
        config = TrainConfig(**metadata['config'])
    except (ValueError, KeyError, TypeError) as e:
        raise CheckpointError(f"corrupt checkpoint metadata: {e}") from e

    (count,) = struct.unpack('<I', _read_exact(buffer, 4))
    named = {}
    for _ in range(count):
        (name_len,) = struct.unpack('<H', _read_exact(buffer, 2))
        name = _read_exact(buffer, name_len).decode('utf-8')
        (ndim,) = struct.unpack('<B', _read_exact(buffer, 1))
        shape = struct.unpack(f'<{ndim}I', _read_exact(buffer, 4 * ndim))
        size = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(_read_exact(buffer, 8 * size), dtype='<f8')
        named[name] = values.astype(np.float64).reshape(shape)

    try:
        params = ModelParams.from_named(named, T=metadata['T'], L=metadata['L'])
    except ShapeError as e:
        raise CheckpointError(f"checkpoint tensors are inconsistent: {e}") from e
    return Checkpoint(params=params, config=config, epoch=metadata['epoch'],
                      best_loss=metadata['best_loss'], epoch_losses=metadata['epoch_losses'],
                      version=version)


def save_checkpoint(checkpoint: Checkpoint, path: str | pathlib.Path) -> pathlib.Path:
    path = pathlib.Path(path)
    storage = get_storage_strategy(path.parent)
    saved = storage.save(serialize_checkpoint(checkpoint), path.name)
    logger.info(f"Checkpoint written to '{saved}' ({checkpoint!r}).")
    return saved


def load_checkpoint(path: str | pathlib.Path) -> Checkpoint:
    path = pathlib.Path(path)
    storage = get_storage_strategy(path.parent)
    try:
        buffer = storage.read(path.name, binary=True)
    except StorageFileNotFoundError as e:
        raise CheckpointError(f"missing checkpoint: {path}") from e
    return deserialize_checkpoint(buffer)
