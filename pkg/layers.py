"""
GRU encoder/decoder, sub-sampling, skip-filtering connection and highway layer.

Sequences are lists of per-time-step tensors of shape (B, dim): row b is segment b,
so a whole batch of segments advances one GRU step per matmul. Every weight is
shared across time steps and segments.
"""
import logging
from collections.abc import Mapping, Sequence
from dataclasses import fields

import numpy as np

import autodiff as ad
from autodiff import Tape, Tensor
from errors import ShapeError
from models.ModelParams import GATES, GruParams, HighwayParams, ModelParams

logger = logging.getLogger(__name__)

Steps = list[Tensor]


def glorot_init(rows: int, cols: int, rng: np.random.Generator | int) -> np.ndarray:
    """Uniform on [-sqrt(6 / (rows + cols)), +sqrt(6 / (rows + cols))]."""
    if rows < 1 or cols < 1:
        raise ShapeError(f"glorot_init needs positive dims, got {rows} x {cols}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def init_gru_params(input_dim: int, hidden_dim: int, rng: np.random.Generator) -> GruParams:
    weights = {}
    for gate in GATES:
        weights[f'W_{gate}'] = glorot_init(input_dim, hidden_dim, rng)
        weights[f'U_{gate}'] = glorot_init(hidden_dim, hidden_dim, rng)
        weights[f'b_{gate}'] = np.zeros(hidden_dim)
    return GruParams(**weights)


def init_model_params(n_bins: int, T: int, L: int, seed: int) -> ModelParams:
    rng = np.random.default_rng(seed)
    return ModelParams(
        enc_fwd=init_gru_params(n_bins, n_bins, rng),
        enc_bwd=init_gru_params(n_bins, n_bins, rng),
        dec=init_gru_params(2 * n_bins, n_bins, rng),
        highway=HighwayParams(
            W_gate=glorot_init(n_bins, n_bins, rng),
            b_gate=np.zeros(n_bins),
            W_tr=glorot_init(n_bins, n_bins, rng),
            b_tr=np.zeros(n_bins),
        ),
        T=T,
        L=L,
    )


def bind_params(params: ModelParams, tape: Tape | None = None) -> dict[str, Tensor]:
    """Wraps every array as a Tensor: tape leaves when training, constants otherwise."""
    if tape is None:
        return {name: ad.constant(array) for name, array in params.named_arrays().items()}
    return {name: tape.parameter(name, array) for name, array in params.named_arrays().items()}


def _weights(p, prefix: str = '') -> dict[str, Tensor]:
    """Accepts GruParams/HighwayParams or a name -> Tensor mapping (optionally prefixed)."""
    if isinstance(p, (GruParams, HighwayParams)):
        return {f.name: ad.constant(getattr(p, f.name)) for f in fields(p)}
    if prefix:
        cut = len(prefix) + 1
        return {name[cut:]: tensor for name, tensor in p.items() if name.startswith(prefix + '.')}
    return dict(p)


def to_steps(x) -> Steps:
    """T x N (one segment) or B x T x N arrays, a T x N Tensor, or a step list -> step list."""
    if isinstance(x, list):
        return x
    if isinstance(x, Tensor):
        return [ad.slice_rows(x, t, t + 1) for t in range(x.shape[0])]
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return [ad.constant(x[t:t + 1]) for t in range(x.shape[0])]
    if x.ndim == 3:
        return [ad.constant(x[:, t, :]) for t in range(x.shape[1])]
    raise ShapeError(f"shape mismatch: cannot read a sequence from shape {x.shape}")


def stack_steps(steps: Steps) -> np.ndarray:
    """Step list -> B x T x dim array."""
    return np.stack([s.data for s in steps], axis=1)


def gru_step(p, x_t, h_prev) -> Tensor:
    """
    One GRU update. Inputs are (B, dim) rows, or single vectors, in which case
    h_t comes back as a vector too.
    """
    w = _weights(p)
    x_t, h_prev = ad.as_tensor(x_t), ad.as_tensor(h_prev)
    if x_t.shape[-1] != w['W_z'].shape[0] or h_prev.shape[-1] != w['U_z'].shape[0]:
        raise ShapeError(f"shape mismatch: GRU input {x_t.shape} / hidden {h_prev.shape}")
    if x_t.data.ndim == 1 and h_prev.data.ndim == 1:
        h_t = gru_step(p, ad.reshape(x_t, (1, -1)), ad.reshape(h_prev, (1, -1)))
        return ad.reshape(h_t, (h_prev.shape[0],))

    z = ad.sigmoid(ad.add(ad.add(ad.matmul(x_t, w['W_z']), ad.matmul(h_prev, w['U_z'])), w['b_z']))
    r = ad.sigmoid(ad.add(ad.add(ad.matmul(x_t, w['W_r']), ad.matmul(h_prev, w['U_r'])), w['b_r']))
    candidate = ad.tanh(ad.add(
        ad.add(ad.matmul(x_t, w['W_h']), ad.matmul(ad.hadamard(r, h_prev), w['U_h'])), w['b_h']))
    return ad.add(ad.hadamard(ad.one_minus(z), h_prev), ad.hadamard(z, candidate))


def run_gru(p, inputs: Steps) -> Steps:
    """Runs a GRU over the steps from a zero initial state."""
    w = _weights(p)
    hidden_dim = w['U_z'].shape[0]
    h = ad.constant(np.zeros((inputs[0].shape[0], hidden_dim)))
    outputs = []
    for x_t in inputs:
        h = gru_step(w, x_t, h)
        outputs.append(h)
    return outputs


def bigru_encode(enc_fwd, enc_bwd, Y_in_b) -> Steps:
    """
    h_enc_t = [h_t + y_t, h<_t + y<_t]: the backward GRU reads the reversed segment,
    and its t-th state is paired with the t-th reversed input row (no re-reversal).
    """
    inputs = to_steps(Y_in_b)
    reversed_inputs = inputs[::-1]
    forward_states = run_gru(enc_fwd, inputs)
    backward_states = run_gru(enc_bwd, reversed_inputs)
    return [
        ad.concat_cols(ad.add(h, y), ad.add(h_rev, y_rev))
        for h, y, h_rev, y_rev in zip(forward_states, inputs, backward_states, reversed_inputs)
    ]


def decode(dec, H_enc) -> Steps:
    H_enc = to_steps(H_enc)
    w = _weights(dec)
    if H_enc[0].shape[-1] != w['W_z'].shape[0]:
        raise ShapeError(f"shape mismatch: decoder expects width {w['W_z'].shape[0]}, got {H_enc[0].shape[-1]}")
    return run_gru(w, H_enc)


def subsample(H_dec: Sequence, L: int) -> list:
    T = len(H_dec)
    if L < 0 or T <= 2 * L:
        raise ShapeError("context exceeds segment")
    return list(H_dec[L:T - L])


def skip_filter(Y_tilde, H_tilde) -> Steps:
    """Y_filt = Y~_in * |H~_dec|, so 0 <= Y_filt <= Y~_in for non-negative input."""
    Y_tilde, H_tilde = to_steps(Y_tilde), to_steps(H_tilde)
    if len(Y_tilde) != len(H_tilde):
        raise ShapeError(f"shape mismatch: {len(Y_tilde)} vs {len(H_tilde)} steps")
    return [ad.hadamard(y, ad.abs_val(h)) for y, h in zip(Y_tilde, H_tilde)]


def highway(hw, Y_filt) -> Steps:
    """
    sigma(Y W_gate + b_gate) * relu(Y W_tr + b_tr) + Y * (1 - sigma(Y W_tr + b_tr)).
    The carry gate reuses the transform pre-activation; kept exactly as stated.
    """
    w = _weights(hw)
    outputs = []
    for y in to_steps(Y_filt):
        if y.shape[-1] != w['W_gate'].shape[0]:
            raise ShapeError(f"shape mismatch: highway expects width {w['W_gate'].shape[0]}, got {y.shape[-1]}")
        gate = ad.sigmoid(ad.add(ad.matmul(y, w['W_gate']), w['b_gate']))
        transform = ad.add(ad.matmul(y, w['W_tr']), w['b_tr'])
        carry = ad.one_minus(ad.sigmoid(transform))
        outputs.append(ad.add(ad.hadamard(gate, ad.relu(transform)), ad.hadamard(y, carry)))
    return outputs


def model_forward(weights: Mapping[str, Tensor] | ModelParams, segments, L: int) -> tuple[Steps, Steps, Steps]:
    """
    encode -> decode -> subsample -> skip_filter -> highway for a batch of segments.
    Returns (trimmed input, filtered, enhanced), each T' steps of (B, N).
    """
    if isinstance(weights, ModelParams):
        weights = bind_params(weights)
    inputs = to_steps(segments)
    encoded = bigru_encode(_weights(weights, 'enc_fwd'), _weights(weights, 'enc_bwd'), inputs)
    decoded = decode(_weights(weights, 'dec'), encoded)
    trimmed_input = subsample(inputs, L)
    filtered = skip_filter(trimmed_input, subsample(decoded, L))
    enhanced = highway(_weights(weights, 'highway'), filtered)
    return trimmed_input, filtered, enhanced


def count_params(m: ModelParams) -> int:
    return int(sum(array.size for array in m.named_arrays().values()))


def expected_param_count(n_bins: int) -> int:
    """Closed form of count_params without allocating the weights."""
    n = n_bins
    encoders = 2 * 3 * (n * n + n * n + n)
    decoder = 3 * (2 * n * n + n * n + n)
    highway_layer = 2 * (n * n + n)
    return encoders + decoder + highway_layer
