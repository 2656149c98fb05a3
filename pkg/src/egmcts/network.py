"""The experience guidance network: a 4096->256->1 scorer trained on search
experience.

Implemented from scratch on numpy with an analytic backward pass that is
checked against central finite differences.  Inputs are concatenated
molecule/template fingerprints (binary, sparse), which the hot paths exploit:
a matrix-vector product against a 0/1 vector is a column gather-and-sum.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, EmptyBatch, EmptyDataset
from .fingerprints import FP_BITS, fp_indices
from .items import Item, TemplateAction

N_IN = 2 * FP_BITS
N_HIDDEN = 256
# Pre-activation clamp: keeps the output strictly inside (0, 1) in float64.
U_CLIP = 30.0

WEIGHTS_MAGIC = b"EGNW"
WEIGHTS_FORMAT = 1


@dataclass
class EgnWeights:
    """Network parameters.  version increments on every training run."""

    w1: np.ndarray  # (256, 4096)
    b1: np.ndarray  # (256,)
    w2: np.ndarray  # (256,)
    b2: float
    version: int = 0

    def __post_init__(self):
        if self.w1.shape != (N_HIDDEN, N_IN) or self.b1.shape != (N_HIDDEN,) \
                or self.w2.shape != (N_HIDDEN,):
            raise DimensionMismatch(
                f"bad weight shapes {self.w1.shape}, {self.b1.shape}, {self.w2.shape}")
        for arr in (self.w1, self.b1, self.w2):
            if not np.all(np.isfinite(arr)):
                raise ValueError("weights must be finite")
        if not np.isfinite(self.b2):
            raise ValueError("weights must be finite")

    def copy(self) -> "EgnWeights":
        return EgnWeights(self.w1.copy(), self.b1.copy(), self.w2.copy(),
                          float(self.b2), self.version)

    def tobytes(self) -> bytes:
        """Byte image of the parameters (for determinism comparisons)."""
        return (self.w1.tobytes() + self.b1.tobytes() + self.w2.tobytes()
                + struct.pack("<d", self.b2))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    dropout_rate: float = 0.1
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class TrainReport:
    epoch_losses: tuple[float, ...]
    final_loss: float
    samples: int


@dataclass(frozen=True)
class TrainingSample:
    """One supervised pair: fingerprints in, mean observed score out."""

    mol_fp: bytes
    tmpl_fp: bytes
    target: float


def init_weights(seed: int, version: int = 0) -> EgnWeights:
    """Glorot-uniform layer init, zero biases, fully seeded."""
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(6.0 / (N_IN + N_HIDDEN))
    lim2 = np.sqrt(6.0 / (N_HIDDEN + 1))
    return EgnWeights(
        w1=rng.uniform(-lim1, lim1, size=(N_HIDDEN, N_IN)),
        b1=np.zeros(N_HIDDEN),
        w2=rng.uniform(-lim2, lim2, size=N_HIDDEN),
        b2=0.0,
        version=version,
    )


def _sigmoid(u):
    return 1.0 / (1.0 + np.exp(-u))


def forward(w: EgnWeights, x: np.ndarray,
            dropout_mask: Optional[np.ndarray] = None) -> float:
    """Network output in (0, 1) for a 4096-long input vector.

    Without a dropout mask this is the deterministic eval path.  A mask (as
    produced by make_dropout_mask, inverted scaling baked in) gives the
    train-mode forward.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (N_IN,):
        raise DimensionMismatch(f"input must have shape ({N_IN},), got {x.shape}")
    a = w.w1 @ x + w.b1
    h = np.maximum(a, 0.0)
    if dropout_mask is not None:
        h = h * dropout_mask
    u = np.clip(w.w2 @ h + w.b2, -U_CLIP, U_CLIP)
    return float(_sigmoid(u))


def forward_indices(w: EgnWeights, active: np.ndarray) -> float:
    """forward() for a binary input given by its set-bit indices.

    Same math as forward on the equivalent 0/1 vector, summing gathered
    columns instead of running a dense matvec; used by the hot paths.
    """
    a = w.w1[:, active].sum(axis=1) + w.b1 if len(active) else w.b1.copy()
    h = np.maximum(a, 0.0)
    u = np.clip(w.w2 @ h + w.b2, -U_CLIP, U_CLIP)
    return float(_sigmoid(u))


def make_dropout_mask(rng: np.random.Generator, rate: float,
                      shape=N_HIDDEN) -> np.ndarray:
    """Inverted-scaling dropout mask: entries are 0 or 1/(1-rate)."""
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def loss(w: EgnWeights, batch: Sequence[tuple[np.ndarray, float]]) -> float:
    """Mean squared error of eval-mode outputs against the batch targets."""
    if not batch:
        raise EmptyBatch("loss needs at least one (input, target) pair")
    total = 0.0
    for x, target in batch:
        q = forward(w, x)
        total += (q - target) ** 2
    return total / len(batch)


def gradients(w: EgnWeights, x: np.ndarray, target: float,
              dropout_mask: Optional[np.ndarray] = None):
    """Analytic gradient of the per-sample squared error w.r.t. all parameters.

    Returns (dw1, db1, dw2, db2).  The pre-activation clamp zeroes the
    gradient outside the clip range, matching what forward computes.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (N_IN,):
        raise DimensionMismatch(f"input must have shape ({N_IN},), got {x.shape}")
    a = w.w1 @ x + w.b1
    h0 = np.maximum(a, 0.0)
    h = h0 if dropout_mask is None else h0 * dropout_mask
    u_raw = w.w2 @ h + w.b2
    u = np.clip(u_raw, -U_CLIP, U_CLIP)
    q = _sigmoid(u)
    du = 2.0 * (q - target) * q * (1.0 - q)
    if abs(u_raw) > U_CLIP:
        du = 0.0
    dw2 = du * h
    db2 = du
    dh = du * w.w2
    if dropout_mask is not None:
        dh = dh * dropout_mask
    da = dh * (a > 0.0)
    dw1 = np.outer(da, x)
    db1 = da
    return dw1, db1, dw2, db2


def grad_check(w: EgnWeights, x: np.ndarray, target: float, h: float = 1e-5,
               n_params: int = 120, rng: Optional[np.random.Generator] = None,
               gradient_fn: Optional[Callable] = None) -> float:
    """Worst relative error of the analytic gradient against central finite
    differences over a random sample of parameters (eval mode, no dropout).

    Parameters whose +-h perturbation would straddle a ReLU kink are skipped:
    the loss is not differentiable there, so finite differences are not a
    valid oracle at those points.  gradient_fn lets the test harness inject a
    corrupted gradient as a negative control; by default the module's own
    analytic gradient is used.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if gradient_fn is None:
        gradient_fn = gradients
    x = np.asarray(x, dtype=np.float64)
    active = np.flatnonzero(x)
    dw1, db1, dw2, db2 = gradient_fn(w, x, target)
    wc = w.copy()
    a = w.w1 @ x + w.b1
    kink_tol = 10.0 * h

    def loss_now() -> float:
        q = forward_indices(wc, active) if np.array_equal(x[active], np.ones(len(active))) \
            else forward(wc, x)
        return (q - target) ** 2

    def numeric(arr: np.ndarray, idx) -> float:
        orig = arr[idx]
        arr[idx] = orig + h
        plus = loss_now()
        arr[idx] = orig - h
        minus = loss_now()
        arr[idx] = orig
        return (plus - minus) / (2.0 * h)

    def safe_row(j: int, step: float) -> bool:
        return abs(a[j]) > kink_tol * max(1.0, abs(step))

    n_w1 = max(n_params - 41, 1)
    picks: list[tuple[str, tuple]] = [("b2", ())]
    picks += [("w2", (int(i),)) for i in rng.choice(N_HIDDEN, size=20, replace=False)]
    picks += [("b1", (int(i),)) for i in rng.permutation(N_HIDDEN) if safe_row(int(i), 1.0)][:20]
    w1_picks: list[tuple[str, tuple]] = []
    for _ in range(20):
        if len(w1_picks) >= n_w1:
            break
        rows = rng.integers(0, N_HIDDEN, size=2 * n_w1)
        cols = rng.integers(0, N_IN, size=2 * n_w1)
        for r, c in zip(rows, cols):
            if len(w1_picks) == n_w1:
                break
            if safe_row(int(r), x[int(c)]):
                w1_picks.append(("w1", (int(r), int(c))))
    while len(w1_picks) < n_w1:
        # degenerate weights put every row at the kink; fall back to
        # unfiltered picks (a fully stalled network has zero true gradient)
        w1_picks.append(("w1", (int(rng.integers(0, N_HIDDEN)),
                                int(rng.integers(0, N_IN)))))
    picks += w1_picks

    analytic = {"w1": dw1, "b1": db1, "w2": dw2}
    worst = 0.0
    for name, idx in picks:
        if name == "b2":
            orig = wc.b2
            wc.b2 = orig + h
            plus = loss_now()
            wc.b2 = orig - h
            minus = loss_now()
            wc.b2 = orig
            gn = (plus - minus) / (2.0 * h)
            ga = db2
        else:
            arr = getattr(wc, name)
            gn = numeric(arr, idx)
            ga = analytic[name][idx]
        rel = abs(ga - gn) / max(abs(ga), abs(gn), 1e-8)
        worst = max(worst, rel)
    return worst


class _Adam:
    """Plain Adam over a list of arrays, updating parameters in place."""

    def __init__(self, params: list[np.ndarray], lr: float, beta1: float,
                 beta2: float, eps: float):
        self.params = params
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.buf = [np.empty_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.b1 ** self.t
        bc2 = 1.0 - self.b2 ** self.t
        for p, g, m, v, buf in zip(self.params, grads, self.m, self.v, self.buf):
            m *= self.b1
            m += (1.0 - self.b1) * g
            np.multiply(g, g, out=buf)
            v *= self.b2
            buf *= (1.0 - self.b2)
            v += buf
            np.divide(v, bc2, out=buf)
            np.sqrt(buf, out=buf)
            buf += self.eps
            np.divide(m, buf, out=buf)
            buf *= self.lr / bc1
            p -= buf


def _sample_matrix(samples: Sequence[TrainingSample]) -> sp.csr_matrix:
    """Stacks the samples' fingerprint pairs into a sparse 0/1 matrix."""
    indptr = [0]
    indices: list[np.ndarray] = []
    for s in samples:
        mol = fp_indices(s.mol_fp)
        tmpl = fp_indices(s.tmpl_fp) + FP_BITS
        indices.append(mol)
        indices.append(tmpl)
        indptr.append(indptr[-1] + len(mol) + len(tmpl))
    cols = np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64)
    data = np.ones(len(cols))
    return sp.csr_matrix((data, cols, np.array(indptr)), shape=(len(samples), N_IN))


def train(w: EgnWeights, samples: Sequence[TrainingSample],
          cfg: TrainConfig) -> tuple[EgnWeights, TrainReport]:
    """Mini-batch Adam on the squared error, with hidden-layer dropout.

    Returns fresh weights (version + 1) and the per-epoch mean training loss.
    Deterministic for a fixed config seed, bit for bit.
    """
    if not samples:
        raise EmptyDataset("training requires a non-empty experience set")
    for s in samples:
        if not 0.0 <= s.target <= 1.0:
            raise ValueError(f"training target {s.target} outside [0, 1]; clamp upstream")
    rng = np.random.default_rng(cfg.seed)
    out = w.copy()
    x_all = _sample_matrix(samples)
    y_all = np.array([s.target for s in samples])
    n = len(samples)

    b2_arr = np.array([out.b2])
    opt = _Adam([out.w1, out.b1, out.w2, b2_arr],
                cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    epoch_losses = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            rows = perm[start:start + cfg.batch_size]
            xb = x_all[rows]
            yb = y_all[rows]
            mask = make_dropout_mask(rng, cfg.dropout_rate, shape=(len(rows), N_HIDDEN))
            a = xb @ out.w1.T + out.b1
            h0 = np.maximum(a, 0.0)
            hid = h0 * mask
            u_raw = hid @ out.w2 + b2_arr[0]
            u = np.clip(u_raw, -U_CLIP, U_CLIP)
            q = _sigmoid(u)
            err = q - yb
            total += float(np.dot(err, err))
            du = 2.0 * err / len(rows) * q * (1.0 - q)
            du[np.abs(u_raw) > U_CLIP] = 0.0
            dw2 = hid.T @ du
            db2 = np.array([du.sum()])
            dh = np.outer(du, out.w2) * mask
            da = dh * (a > 0.0)
            dw1 = (xb.T @ da).T
            db1 = da.sum(axis=0)
            opt.step([dw1, db1, dw2, db2])
        epoch_losses.append(total / n)
    out.b2 = float(b2_arr[0])
    out.version = w.version + 1
    report = TrainReport(epoch_losses=tuple(epoch_losses),
                         final_loss=epoch_losses[-1], samples=n)
    return out, report


class NetworkScorer:
    """ActionScorer backed by a weights snapshot.

    Scores a batch of candidate actions for one molecule, reusing the
    molecule-side column sum across the actions.  Matches forward() on the
    concatenated input to float rounding.
    """

    def __init__(self, weights: EgnWeights):
        self.weights = weights
        self._idx_cache: dict[bytes, np.ndarray] = {}

    def _indices(self, fp: bytes) -> np.ndarray:
        cached = self._idx_cache.get(fp)
        if cached is None:
            cached = fp_indices(fp)
            self._idx_cache[fp] = cached
        return cached

    def score_actions(self, item: Item, actions: Sequence[TemplateAction]) -> list[float]:
        if not actions:
            return []
        w = self.weights
        mol_part = w.w1[:, self._indices(item.fingerprint)].sum(axis=1) + w.b1
        scores = []
        for action in actions:
            a = mol_part + w.w1[:, FP_BITS + self._indices(action.fingerprint)].sum(axis=1)
            h = np.maximum(a, 0.0)
            u = np.clip(w.w2 @ h + w.b2, -U_CLIP, U_CLIP)
            scores.append(float(_sigmoid(u)))
        return scores


def save_weights(path, w: EgnWeights, seed: int = 0, training_round: int = 0,
                 metadata: Optional[dict] = None) -> None:
    """Versioned little-endian binary plus a JSON sidecar for provenance."""
    path = Path(path)
    header = WEIGHTS_MAGIC + struct.pack("<IIIIQI", WEIGHTS_FORMAT, w.version,
                                         N_IN, N_HIDDEN, seed, training_round)
    body = (w.w1.astype("<f8").tobytes() + w.b1.astype("<f8").tobytes()
            + w.w2.astype("<f8").tobytes() + struct.pack("<d", w.b2))
    path.write_bytes(header + body)
    sidecar = {
        "format": WEIGHTS_FORMAT,
        "version": w.version,
        "seed": seed,
        "training_round": training_round,
    }
    if metadata:
        sidecar.update(metadata)
    Path(str(path) + ".json").write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n")


def load_weights(path) -> EgnWeights:
    raw = Path(path).read_bytes()
    if raw[:4] != WEIGHTS_MAGIC:
        raise ValueError(f"{path} is not a weights file")
    fmt, version, n_in, n_hidden, _seed, _round = struct.unpack_from("<IIIIQI", raw, 4)
    if fmt != WEIGHTS_FORMAT:
        raise ValueError(f"unsupported weights format {fmt}")
    if n_in != N_IN or n_hidden != N_HIDDEN:
        raise DimensionMismatch(f"weights file dims {n_in}x{n_hidden} unsupported")
    offset = 4 + struct.calcsize("<IIIIQI")
    w1 = np.frombuffer(raw, dtype="<f8", count=N_HIDDEN * N_IN, offset=offset).reshape(
        N_HIDDEN, N_IN).copy()
    offset += N_HIDDEN * N_IN * 8
    b1 = np.frombuffer(raw, dtype="<f8", count=N_HIDDEN, offset=offset).copy()
    offset += N_HIDDEN * 8
    w2 = np.frombuffer(raw, dtype="<f8", count=N_HIDDEN, offset=offset).copy()
    offset += N_HIDDEN * 8
    (b2,) = struct.unpack_from("<d", raw, offset)
    return EgnWeights(w1=w1, b1=b1, w2=w2, b2=b2, version=version)
