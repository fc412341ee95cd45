"""Bit-indexed spectral and geometric kernels.

Everything here operates on real vectors of length 2**n indexed by n-bit
patterns: the Walsh-Hadamard transform in natural (Hadamard) ordering,
xor-relabeling of the index set, and Euclidean projection onto the
probability simplex. These are the shared primitives for the channel
algebra, the device simulator, and the estimation pipeline.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "fwht",
    "fwht_inverse",
    "xor_permute",
    "simplex_project",
    "num_qubits",
    "require_prob_dist",
]

MAX_QUBITS = 12

PROB_SUM_TOL = 1e-9
PROB_NEG_TOL = 1e-9


def num_qubits(values: np.ndarray) -> int:
    """Return n for a length-2**n vector, validating the length.

    Raises ValueError if the length is not a power of two in [2, 2**MAX_QUBITS]
    or the entries are not finite.
    """
    size = values.shape[-1] if values.ndim else 0
    if values.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {values.shape}")
    if size < 2 or size & (size - 1) != 0:
        raise ValueError(f"vector length {size} is not a power of two >= 2")
    n = size.bit_length() - 1
    if n > MAX_QUBITS:
        raise ValueError(f"vector length {size} exceeds {MAX_QUBITS}-qubit support")
    if not np.all(np.isfinite(values)):
        raise ValueError("vector entries must be finite")
    return n


def require_prob_dist(values: np.ndarray) -> np.ndarray:
    """Validate a probability distribution over bit patterns.

    Entries must be >= -PROB_NEG_TOL and sum to 1 within PROB_SUM_TOL.
    Returns the input as a float array (copy only if conversion is needed).
    """
    arr = np.asarray(values, dtype=float)
    num_qubits(arr)
    if arr.min() < -PROB_NEG_TOL:
        raise ValueError(f"distribution has negative entry {arr.min():g}")
    total = arr.sum()
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"distribution sums to {total!r}, expected 1")
    return arr


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform, natural ordering.

    Computes W @ values with W[i, j] = (-1)**popcount(i & j) using the
    in-place radix-2 butterfly, O(n * 2**n). The inverse is
    ``fwht_inverse`` (which carries the full 1/2**n factor).
    """
    arr = np.array(values, dtype=float)
    size = 1 << num_qubits(arr)
    half = 1
    while half < size:
        arr = arr.reshape(-1, 2, half)
        even = arr[:, 0, :] + arr[:, 1, :]
        odd = arr[:, 0, :] - arr[:, 1, :]
        arr[:, 0, :] = even
        arr[:, 1, :] = odd
        arr = arr.reshape(size)
        half *= 2
    return arr


def fwht_inverse(values: np.ndarray) -> np.ndarray:
    """Inverse Walsh-Hadamard transform: (1/2**n) * W @ values."""
    arr = np.asarray(values, dtype=float)
    size = 1 << num_qubits(arr)
    return fwht(arr) / size


def xor_permute(values: np.ndarray, basis_index: int) -> np.ndarray:
    """Relabel outcomes by xor: output[i] = values[i ^ basis_index].

    This is the input-alignment permutation: it maps the distribution seen
    on basis input ``basis_index`` to the flip-pattern frame of input 0.
    An involution (applying it twice is the identity).
    """
    arr = np.asarray(values, dtype=float)
    size = 1 << num_qubits(arr)
    if not 0 <= basis_index < size:
        raise ValueError(f"basis index {basis_index} out of range for size {size}")
    return arr[np.arange(size) ^ basis_index]


def simplex_project(values: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-and-threshold algorithm (Held/Wolfe/Crowder; see also Wang &
    Carreira-Perpinan 2013), O(N log N). Total on finite vectors of any
    length >= 1; idempotent; exact on inputs already on the simplex.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a nonempty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector entries must be finite")
    desc = np.sort(arr)[::-1]
    cumulative = np.cumsum(desc)
    counts = np.arange(1, arr.size + 1)
    support = np.nonzero(desc + (1.0 - cumulative) / counts > 0.0)[0]
    rho = support[-1]
    shift = (1.0 - cumulative[rho]) / (rho + 1.0)
    return np.maximum(arr + shift, 0.0)
