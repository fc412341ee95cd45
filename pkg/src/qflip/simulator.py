"""Synthetic noisy device with planted ground truth.

The device executes nominally-identity circuits by applying depth steps of
a bit-flip Markov chain (shared or per-input flip-pattern rates), wrapped
by per-qubit preparation flips before and per-qubit readout confusion
after, then draws multinomial shot counts. Preparation and readout are
applied as the true tensor-product confusion maps; the Walsh-diagonal
summary ``spectral_spam`` is exact when every qubit's readout confusion is
symmetric (eps01 == eps10) and an approximation otherwise.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass

import numpy as np

from . import clifford
from .channel import InputChannel, NoiseModel, apply_transition_power
from .errors import ConfigError
from .records import CountsRecord, Dataset
from .transforms import MAX_QUBITS, require_prob_dist

__all__ = [
    "GroundTruth",
    "exact_distribution",
    "execute",
    "generate_dataset",
    "generate_circuits",
    "true_noise_model",
    "iid_bitflip",
    "depolarizing",
    "correlated_pair",
    "spam_only",
    "PRESETS",
    "build_preset",
    "ground_truth_from_profile",
    "DEFAULT_SHOTS",
    "DEFAULT_CIRCUITS_PER_DEPTH",
]

DEFAULT_SHOTS = 1024
DEFAULT_CIRCUITS_PER_DEPTH = 1000

# per-qubit error probabilities live strictly below a fair coin
MAX_FLIP_PROB = 0.5


def _per_qubit_pairs(readout, n: int) -> tuple[tuple[float, float], ...]:
    """Normalize a readout argument: scalar, per-qubit scalar, or (e01, e10)."""
    if np.isscalar(readout):
        pairs = [(float(readout), float(readout))] * n
    else:
        entries = list(readout)
        if len(entries) != n:
            raise ValueError(f"expected {n} readout entries, got {len(entries)}")
        pairs = []
        for entry in entries:
            if np.isscalar(entry):
                pairs.append((float(entry), float(entry)))
            else:
                e01, e10 = entry
                pairs.append((float(e01), float(e10)))
    for e01, e10 in pairs:
        if not (0.0 <= e01 < MAX_FLIP_PROB and 0.0 <= e10 < MAX_FLIP_PROB):
            raise ValueError(f"readout probabilities must be in [0, 0.5), got {(e01, e10)}")
    return tuple(pairs)


def _per_qubit_probs(prep, n: int) -> tuple[float, ...]:
    if np.isscalar(prep):
        probs = [float(prep)] * n
    else:
        probs = [float(x) for x in prep]
        if len(probs) != n:
            raise ValueError(f"expected {n} preparation entries, got {len(probs)}")
    for p in probs:
        if not 0.0 <= p < MAX_FLIP_PROB:
            raise ValueError(f"preparation flip probability must be in [0, 0.5), got {p}")
    return tuple(probs)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Planted device parameters: gate flip rates plus SPAM confusion."""

    n: int
    rates: np.ndarray
    readout: tuple[tuple[float, float], ...] = 0.0
    prep: tuple[float, ...] = 0.0
    rates_by_input: dict | None = None

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.n}")
        rates = require_prob_dist(self.rates).copy()
        if rates.size != 1 << self.n:
            raise ValueError(f"rates length {rates.size} does not match n={self.n}")
        rates.flags.writeable = False
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "readout", _per_qubit_pairs(self.readout, self.n))
        object.__setattr__(self, "prep", _per_qubit_probs(self.prep, self.n))
        overrides = {}
        if self.rates_by_input:
            for index, values in self.rates_by_input.items():
                index = int(index)
                if not 0 <= index < 1 << self.n:
                    raise ValueError(f"override input {index} out of range for n={self.n}")
                arr = require_prob_dist(values).copy()
                if arr.size != 1 << self.n:
                    raise ValueError(f"override for input {index} has wrong length")
                arr.flags.writeable = False
                overrides[index] = arr
        object.__setattr__(self, "rates_by_input", overrides)

    @property
    def size(self) -> int:
        return 1 << self.n

    def rates_for(self, input_index: int) -> np.ndarray:
        return self.rates_by_input.get(input_index, self.rates)

    def prep_matrices(self) -> list[np.ndarray]:
        return [np.array([[1.0 - p, p], [p, 1.0 - p]]) for p in self.prep]

    def readout_matrices(self) -> list[np.ndarray]:
        # column j = true bit j, row i = reported bit i
        return [
            np.array([[1.0 - e01, e10], [e01, 1.0 - e10]]) for e01, e10 in self.readout
        ]

    def spectral_spam(self) -> np.ndarray:
        """Walsh-diagonal SPAM attenuation per parity coefficient.

        Entry i multiplies factors (1 - e01 - e10)(1 - 2 prep) over the
        qubits set in i. Exact for symmetric readout; otherwise the
        composed confusion also has off-diagonal Walsh structure that this
        summary drops.
        """
        factors = [
            (1.0 - e01 - e10) * (1.0 - 2.0 * p)
            for (e01, e10), p in zip(self.readout, self.prep)
        ]
        spam = np.ones(self.size)
        idx = np.arange(self.size)
        for qubit, factor in enumerate(factors):
            spam[(idx >> qubit) & 1 == 1] *= factor
        return spam


def _apply_per_qubit(matrices, vec: np.ndarray, n: int) -> np.ndarray:
    """Apply one 2x2 matrix per qubit to a length-2**n vector, O(n 2**n)."""
    out = vec.reshape((2,) * n)
    for qubit, mat in enumerate(matrices):
        axis = n - 1 - qubit
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [axis])), 0, axis)
    return out.reshape(-1)


def exact_distribution(gt: GroundTruth, depth: int, input_index: int) -> np.ndarray:
    """True outcome distribution: readout . gate-chain^depth . prep . e_in."""
    if depth < 0:
        raise ValueError(f"depth must be >= 0, got {depth}")
    if not 0 <= input_index < gt.size:
        raise ValueError(f"input index {input_index} out of range for n={gt.n}")
    state = np.zeros(gt.size)
    state[input_index] = 1.0
    if any(p > 0.0 for p in gt.prep):
        state = _apply_per_qubit(gt.prep_matrices(), state, gt.n)
    state = apply_transition_power(gt.rates_for(input_index), depth, state)
    if any(e01 > 0.0 or e10 > 0.0 for e01, e10 in gt.readout):
        state = _apply_per_qubit(gt.readout_matrices(), state, gt.n)
    state = np.maximum(state, 0.0)
    return state / state.sum()


def execute(
    gt: GroundTruth,
    circuit: clifford.IdentityCircuit,
    input_index: int,
    shots: int,
    rng: np.random.Generator,
    sequence_id: int = 0,
) -> CountsRecord:
    """Run one circuit: sample shot counts from the exact distribution.

    The gate ids themselves do not alter the distribution; the planted
    noise depends only on depth, matching the average-channel model.
    """
    if circuit.n != gt.n:
        raise ValueError(f"circuit has {circuit.n} qubits, device has {gt.n}")
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    dist = exact_distribution(gt, circuit.depth, input_index)
    sample = rng.multinomial(shots, dist)
    counts = {i: int(c) for i, c in enumerate(sample) if c}
    return CountsRecord(
        depth=circuit.depth,
        input_index=input_index,
        sequence_id=sequence_id,
        shots=shots,
        counts=counts,
    )


def _shard_rng(seed: int, depth: int, sequence_id: int) -> np.random.Generator:
    # one stream per (depth, circuit); independent of list order and workers
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(depth, sequence_id)))


def _check_generation_args(gt, depths, circuits_per_depth, inputs, shots):
    depths = [int(d) for d in depths]
    if not depths:
        raise ValueError("need at least one depth")
    if len(set(depths)) != len(depths):
        raise ValueError("depths must be unique")
    if min(depths) < 0:
        raise ValueError("depths must be >= 0")
    inputs = [int(i) for i in inputs]
    if not inputs:
        raise ValueError("need at least one input state")
    if len(set(inputs)) != len(inputs):
        raise ValueError("input states must be unique")
    for index in inputs:
        if not 0 <= index < gt.size:
            raise ValueError(f"input index {index} out of range for n={gt.n}")
    if circuits_per_depth < 1:
        raise ValueError(f"circuits per depth must be >= 1, got {circuits_per_depth}")
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    return depths, sorted(inputs)


def _records_for_depth(gt, depth, circuits_per_depth, inputs, shots, seed):
    dists = {index: exact_distribution(gt, depth, index) for index in inputs}
    out = []
    for k in range(circuits_per_depth):
        rng = _shard_rng(seed, depth, k)
        # the circuit draw comes first so generate_circuits reproduces it
        if depth == 0:
            clifford.empty_circuit(gt.n)
        else:
            clifford.sample_identity_circuit(gt.n, depth, rng)
        for index in inputs:
            sample = rng.multinomial(shots, dists[index])
            out.append(
                CountsRecord(
                    depth=depth,
                    input_index=index,
                    sequence_id=k,
                    shots=shots,
                    counts={i: int(c) for i, c in enumerate(sample) if c},
                )
            )
    return out


def _depth_shard(args):
    return _records_for_depth(*args)


def generate_dataset(
    gt: GroundTruth,
    depths,
    circuits_per_depth: int = DEFAULT_CIRCUITS_PER_DEPTH,
    inputs=(0,),
    shots: int = DEFAULT_SHOTS,
    seed: int = 0,
    workers: int | None = None,
) -> Dataset:
    """Sample circuits_per_depth circuits at every depth and input state.

    Deterministic per seed: every (depth, circuit) pair derives its own
    random stream, so results are identical whether generation runs
    serially or sharded across worker processes.
    """
    depths, inputs = _check_generation_args(gt, depths, circuits_per_depth, inputs, shots)
    shard_args = [
        (gt, depth, circuits_per_depth, inputs, shots, seed) for depth in depths
    ]
    if workers is not None and workers > 1 and len(shard_args) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            shards = list(pool.map(_depth_shard, shard_args))
    else:
        shards = [_records_for_depth(*args) for args in shard_args]
    records = [record for shard in shards for record in shard]
    return Dataset(n=gt.n, records=records)


def generate_circuits(n: int, depths, circuits_per_depth: int, seed: int = 0):
    """The identity circuits generate_dataset draws, in dataset order."""
    circuits = []
    for depth in sorted(set(int(d) for d in depths)):
        for k in range(circuits_per_depth):
            rng = _shard_rng(seed, depth, k)
            if depth == 0:
                circuits.append(clifford.empty_circuit(n))
            else:
                circuits.append(clifford.sample_identity_circuit(n, depth, rng, seed=k))
    return circuits


def true_noise_model(gt: GroundTruth) -> NoiseModel:
    """The planted parameters as a fitted-model object (all input states).

    Exactly reproduces the device for symmetric readout confusion, where
    prep flips commute with the gate chain and fold into the Walsh-diagonal
    SPAM factor.
    """
    spam = gt.spectral_spam()
    channels = {
        index: InputChannel(rates=gt.rates_for(index), spam=spam)
        for index in range(gt.size)
    }
    return NoiseModel(n=gt.n, channels=channels)


def _tensor_flip_rates(n: int, flip_probs) -> np.ndarray:
    rates = np.ones(1)
    for q in range(n):
        f = float(flip_probs[q])
        # kron on the left: new qubit becomes bit q of the index
        rates = np.kron([1.0 - f, f], rates)
    return rates


def iid_bitflip(n: int, q: float, readout=0.0, prep=0.0) -> GroundTruth:
    """Independent per-qubit flip probability q each gate layer."""
    if not 0.0 <= q < MAX_FLIP_PROB:
        raise ValueError(f"flip probability must be in [0, 0.5), got {q}")
    rates = _tensor_flip_rates(n, [q] * n)
    return GroundTruth(n=n, rates=rates, readout=readout, prep=prep)


def depolarizing(n: int, alpha: float, readout=0.0, prep=0.0) -> GroundTruth:
    """Per-qubit depolarizing strength alpha; in the measured basis each
    qubit flips with probability alpha/2 per layer."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"depolarizing strength must be in [0, 1], got {alpha}")
    rates = _tensor_flip_rates(n, [alpha / 2.0] * n)
    return GroundTruth(n=n, rates=rates, readout=readout, prep=prep)


def correlated_pair(
    n: int, q: float, q_corr: float, first: int = 0, second: int = 1, readout=0.0, prep=0.0
) -> GroundTruth:
    """iid flips plus excess joint-flip mass on one qubit pair."""
    if not 0.0 <= q < MAX_FLIP_PROB:
        raise ValueError(f"flip probability must be in [0, 0.5), got {q}")
    if not 0.0 <= q_corr < 1.0:
        raise ValueError(f"correlated mass must be in [0, 1), got {q_corr}")
    if first == second or not (0 <= first < n and 0 <= second < n):
        raise ValueError(f"need two distinct qubits in range, got {(first, second)}")
    rates = _tensor_flip_rates(n, [q] * n)
    pattern = (1 << first) | (1 << second)
    rates[pattern] += q_corr
    rates /= 1.0 + q_corr
    return GroundTruth(n=n, rates=rates, readout=readout, prep=prep)


def spam_only(n: int, epsilon, prep=0.0) -> GroundTruth:
    """No gate noise at all; only readout confusion (and optional prep)."""
    rates = np.zeros(1 << n)
    rates[0] = 1.0
    return GroundTruth(n=n, rates=rates, readout=epsilon, prep=prep)


PRESETS = {
    "iid_bitflip": iid_bitflip,
    "depolarizing": depolarizing,
    "correlated_pair": correlated_pair,
    "spam_only": spam_only,
}


def build_preset(name: str, n: int, **params) -> GroundTruth:
    try:
        builder = PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r}; available: {known}") from None
    try:
        return builder(n=n, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for preset {name!r}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad parameters for preset {name!r}: {exc}") from exc


def ground_truth_from_profile(payload: dict):
    """Profile JSON -> (GroundTruth, seed). Shape:
    {"preset": name, "n": n, "seed": s, "params": {...}}."""
    try:
        name = payload["preset"]
        n = int(payload["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed profile: {exc}") from exc
    params = payload.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("profile params must be an object")
    seed = payload.get("seed")
    return build_preset(name, n, **params), seed
