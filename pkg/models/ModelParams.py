from dataclasses import dataclass, fields

import numpy as np

from errors import ShapeError

GATES = ('z', 'r', 'h')


@dataclass
class GruParams:
    """Update (z), reset (r) and candidate (h) weights of one GRU. W: in x hid, U: hid x hid."""
    W_z: np.ndarray
    U_z: np.ndarray
    b_z: np.ndarray
    W_r: np.ndarray
    U_r: np.ndarray
    b_r: np.ndarray
    W_h: np.ndarray
    U_h: np.ndarray
    b_h: np.ndarray

    def __post_init__(self):
        for gate in GATES:
            W, U, b = getattr(self, f'W_{gate}'), getattr(self, f'U_{gate}'), getattr(self, f'b_{gate}')
            if W.shape != (self.input_dim, self.hidden_dim) or U.shape != (self.hidden_dim, self.hidden_dim) \
                    or b.shape != (self.hidden_dim,):
                raise ShapeError(f"shape mismatch in GRU gate '{gate}'")

    @property
    def input_dim(self) -> int:
        return self.W_z.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.W_z.shape[1]


@dataclass
class HighwayParams:
    """Gating path (W_gate, b_gate) and transform path (W_tr, b_tr), all N x N / N."""
    W_gate: np.ndarray
    b_gate: np.ndarray
    W_tr: np.ndarray
    b_tr: np.ndarray

    def __post_init__(self):
        n = self.W_gate.shape[0]
        if self.W_gate.shape != (n, n) or self.W_tr.shape != (n, n) \
                or self.b_gate.shape != (n,) or self.b_tr.shape != (n,):
            raise ShapeError("shape mismatch in highway parameters")

    @property
    def size(self) -> int:
        return self.W_gate.shape[0]


@dataclass
class ModelParams:
    """All trainable weights plus the segmentation dims the model was built for."""
    enc_fwd: GruParams
    enc_bwd: GruParams
    dec: GruParams
    highway: HighwayParams
    T: int
    L: int

    def __post_init__(self):
        n = self.n_bins
        if (self.enc_fwd.input_dim, self.enc_fwd.hidden_dim) != (n, n) \
                or (self.enc_bwd.input_dim, self.enc_bwd.hidden_dim) != (n, n):
            raise ShapeError("shape mismatch: encoder GRUs must map N -> N")
        if (self.dec.input_dim, self.dec.hidden_dim) != (2 * n, n):
            raise ShapeError("shape mismatch: decoder GRU must map 2N -> N")
        if self.highway.size != n:
            raise ShapeError("shape mismatch: highway must be N x N")

    @property
    def n_bins(self) -> int:
        return self.enc_fwd.input_dim

    def named_arrays(self) -> dict[str, np.ndarray]:
        """Flat, ordered view keyed like 'enc_fwd.W_z'. Arrays are shared, not copied."""
        named = {}
        for group in ('enc_fwd', 'enc_bwd', 'dec', 'highway'):
            part = getattr(self, group)
            for f in fields(part):
                named[f'{group}.{f.name}'] = getattr(part, f.name)
        return named

    @classmethod
    def from_named(cls, named: dict[str, np.ndarray], T: int, L: int) -> 'ModelParams':
        def group(prefix, kind):
            return kind(**{f.name: named[f'{prefix}.{f.name}'] for f in fields(kind)})
        try:
            return cls(
                enc_fwd=group('enc_fwd', GruParams),
                enc_bwd=group('enc_bwd', GruParams),
                dec=group('dec', GruParams),
                highway=group('highway', HighwayParams),
                T=T,
                L=L,
            )
        except KeyError as e:
            raise ShapeError(f"missing parameter {e}") from e

    def copy(self) -> 'ModelParams':
        return ModelParams.from_named({k: v.copy() for k, v in self.named_arrays().items()}, self.T, self.L)
