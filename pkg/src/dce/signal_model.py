"""Pilot allocation, received-grid construction, and complex/real packing.

Conventions:

* user 0 is the served user whose channel the estimators target; it fills
  every resource element outside all pilot sets with unit-power QPSK data;
* other in-cell users transmit only on their own pilot resource elements,
  so in-cell pilot observations are interference-free by construction;
* every user's pilots cover all subcarriers with exactly ``n_p`` resource
  elements per subcarrier (the block arrangement uses whole leading OFDM
  symbols, the random arrangement scatters the time positions per
  subcarrier), which keeps per-user extraction a full (antennas x
  subcarriers) observation;
* out-of-cell contamination is injected on a mask of resource elements,
  identical across antennas, as QPSK symbols through an independent
  interferer channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelModelSpec, draw_channel
from .numerics import RngStream

BLOCK_SYMBOL = "block_symbol"
RANDOM_TONES = "random_tones"

CONTAM_NONE = "none"
CONTAM_RANDOM = "random_res"
CONTAM_BLOCKS = "contiguous_blocks"

CONTAM_BLOCK_EDGE = 8


class InsufficientResources(Exception):
    """The requested pilot layout does not fit in the grid."""


@dataclass(frozen=True)
class UserPilots:
    """Pilot resource elements of one user, organized per subcarrier.

    time_idx[q] holds the n_p OFDM-symbol indices carrying pilots on
    subcarrier q; symbols[q] the unit-modulus pilot values sent there.
    """

    time_idx: np.ndarray  # (n_f, n_p) int
    symbols: np.ndarray  # (n_f, n_p) complex, unit modulus
    power: float = 1.0


@dataclass(frozen=True)
class PilotAllocation:
    n_f: int
    n: int
    n_p: int
    arrangement: str
    users: tuple[UserPilots, ...]

    def pilot_mask(self) -> np.ndarray:
        """Boolean (n_f, n) mask of resource elements used by any pilot."""
        mask = np.zeros((self.n_f, self.n), dtype=bool)
        q = np.arange(self.n_f)[:, None]
        for user in self.users:
            mask[q, user.time_idx] = True
        return mask


def make_pilot_allocation(
    k_users: int,
    n_p: int,
    arrangement: str,
    n_f: int,
    n: int,
    rng: RngStream,
    power: float = 1.0,
) -> PilotAllocation:
    """Assign disjoint pilot resource elements to each in-cell user."""
    if arrangement not in (BLOCK_SYMBOL, RANDOM_TONES):
        raise ValueError(f"unknown arrangement {arrangement!r}")
    if k_users < 1 or n_p < 1:
        raise ValueError("need k_users >= 1 and n_p >= 1")
    if k_users * n_p > n:
        raise InsufficientResources(
            f"{k_users} users x {n_p} pilots need {k_users * n_p} symbols, grid has {n}"
        )
    gen = rng.generator()
    users = []
    if arrangement == BLOCK_SYMBOL:
        for k in range(k_users):
            cols = np.arange(k * n_p, (k + 1) * n_p)
            time_idx = np.tile(cols, (n_f, 1))
            users.append((time_idx,))
    else:
        # per subcarrier, draw k_users * n_p distinct symbol slots and deal
        # them out n_p per user
        slots = np.empty((n_f, k_users * n_p), dtype=np.int64)
        for q in range(n_f):
            slots[q] = gen.permutation(n)[: k_users * n_p]
        users = [(slots[:, k * n_p : (k + 1) * n_p],) for k in range(k_users)]

    built = []
    # axis-aligned QPSK alphabet: x * conj(x) == 1 exactly in floating point,
    # so noiseless pilot extraction is bit-exact
    alphabet = np.array([1.0, 1.0j, -1.0, -1.0j])
    for (time_idx,) in users:
        symbols = alphabet[gen.integers(0, 4, size=(n_f, n_p))]
        built.append(UserPilots(time_idx=time_idx, symbols=symbols, power=power))
    return PilotAllocation(
        n_f=n_f, n=n, n_p=n_p, arrangement=arrangement, users=tuple(built)
    )


@dataclass(frozen=True)
class ContaminationSpec:
    kind: str = CONTAM_NONE
    fraction: float = 0.0
    n_blocks: int = 2
    sir_db: float = 0.0
    channel: ChannelModelSpec | None = None

    def __post_init__(self) -> None:
        if self.kind not in (CONTAM_NONE, CONTAM_RANDOM, CONTAM_BLOCKS):
            raise ValueError(f"unknown contamination kind {self.kind!r}")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must be in [0, 1]")


def contamination_mask(
    spec: ContaminationSpec, n_f: int, n: int, rng: RngStream
) -> np.ndarray:
    """Boolean (n_f, n) mask of contaminated resource elements."""
    mask = np.zeros((n_f, n), dtype=bool)
    if spec.kind == CONTAM_NONE:
        return mask
    gen = rng.generator()
    if spec.kind == CONTAM_RANDOM:
        count = int(spec.fraction * n_f * n)
        flat = gen.permutation(n_f * n)[:count]
        mask.ravel()[flat] = True
        return mask
    edge = CONTAM_BLOCK_EDGE
    if n_f < edge or n < edge:
        raise ValueError("grid too small for contiguous contamination blocks")
    placed = 0
    attempts = 0
    while placed < spec.n_blocks:
        attempts += 1
        if attempts > 10_000:
            raise ValueError("could not place non-overlapping contamination blocks")
        q0 = int(gen.integers(0, n_f - edge + 1))
        n0 = int(gen.integers(0, n - edge + 1))
        if mask[q0 : q0 + edge, n0 : n0 + edge].any():
            continue  # blocks are disjoint so the contaminated area is exact
        mask[q0 : q0 + edge, n0 : n0 + edge] = True
        placed += 1
    return mask


@dataclass
class ChannelScene:
    """Everything that produced one received grid, kept for ground truth."""

    channels: list[np.ndarray]  # per user, (m, n_f, n)
    allocation: PilotAllocation
    noise_var: float
    symbol_grids: list[np.ndarray]  # per user, (n_f, n); 0 where silent
    contamination: ContaminationSpec | None = None
    mask: np.ndarray | None = None
    interferer_channel: np.ndarray | None = None
    interferer_power: float = 0.0


@dataclass
class ReceivedGrid:
    y: np.ndarray  # (m, n_f, n)
    noise_var: float
    scene: ChannelScene


def build_received_grid(
    channels: list[np.ndarray],
    allocation: PilotAllocation,
    noise_var: float,
    rng: RngStream,
    contamination: ContaminationSpec | None = None,
) -> ReceivedGrid:
    """Superpose user transmissions, contamination, and noise on the grid."""
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    if len(channels) != len(allocation.users):
        raise ValueError("one channel realization per allocated user required")
    m, n_f, n = channels[0].shape
    if (n_f, n) != (allocation.n_f, allocation.n):
        raise ValueError("allocation grid does not match channel dims")

    pilot_mask = allocation.pilot_mask()
    q_idx = np.arange(n_f)[:, None]

    symbol_grids = []
    for k, user in enumerate(allocation.users):
        s = np.zeros((n_f, n), dtype=np.complex128)
        s[q_idx, user.time_idx] = user.symbols
        symbol_grids.append(s)

    # served user fills everything outside the pilot region with QPSK data
    data_gen = rng.child(0).generator()
    free = ~pilot_mask
    n_free = int(free.sum())
    bits = data_gen.integers(0, 2, size=(2, n_free))
    data = ((2 * bits[0] - 1) + 1j * (2 * bits[1] - 1)) / np.sqrt(2.0)
    symbol_grids[0][free] = data

    y = np.zeros((m, n_f, n), dtype=np.complex128)
    for k, user in enumerate(allocation.users):
        y += np.sqrt(user.power) * channels[k] * symbol_grids[k][None, :, :]

    scene = ChannelScene(
        channels=list(channels),
        allocation=allocation,
        noise_var=noise_var,
        symbol_grids=symbol_grids,
        contamination=contamination,
    )

    if contamination is not None and contamination.kind != CONTAM_NONE:
        if contamination.channel is None:
            raise ValueError("contamination requires an interferer channel spec")
        mask = contamination_mask(contamination, n_f, n, rng.child(1))
        h_i = draw_channel(contamination.channel, rng.child(2))
        i_gen = rng.child(3).generator()
        n_hit = int(mask.sum())
        bits = i_gen.integers(0, 2, size=(2, n_hit))
        d = ((2 * bits[0] - 1) + 1j * (2 * bits[1] - 1)) / np.sqrt(2.0)
        d_grid = np.zeros((n_f, n), dtype=np.complex128)
        d_grid[mask] = d
        rho_i = allocation.users[0].power * 10.0 ** (-contamination.sir_db / 10.0)
        y += np.sqrt(rho_i) * h_i * d_grid[None, :, :]
        scene.mask = mask
        scene.interferer_channel = h_i
        scene.interferer_power = rho_i

    if noise_var > 0:
        z_gen = rng.child(4).generator()
        parts = z_gen.standard_normal((2, m, n_f, n))
        y += np.sqrt(noise_var / 2.0) * (parts[0] + 1j * parts[1])

    return ReceivedGrid(y=y, noise_var=noise_var, scene=scene)


def extract_from_array(
    grid: np.ndarray, user: UserPilots, symbols: np.ndarray | None = None
) -> np.ndarray:
    """Correlate a grid against one user's pilots: (m, n_f) observation.

    With disjoint-tone allocations this reads the user's pilot resource
    elements and multiplies by the conjugated pilot values.
    """
    q_idx = np.arange(grid.shape[1])[:, None]
    picked = grid[:, q_idx, user.time_idx]  # (m, n_f, n_p)
    ref = user.symbols if symbols is None else symbols
    return np.sum(picked * ref.conj()[None, :, :], axis=2)


def extract_user_signal(received: ReceivedGrid, k: int) -> np.ndarray:
    """Per-user pilot observation from a received grid (m x n_f)."""
    users = received.scene.allocation.users
    if not 0 <= k < len(users):
        raise ValueError(f"user {k} has no pilot allocation")
    return extract_from_array(received.y, users[k])


def pack_grid(y: np.ndarray) -> np.ndarray:
    """Complex (m, f, t) grid -> real (2m, f, t) tensor, reals then imags."""
    return np.concatenate([y.real, y.imag], axis=0)


def unpack_grid(x: np.ndarray) -> np.ndarray:
    """Inverse of pack_grid."""
    if x.shape[0] % 2:
        raise ValueError("channel axis must be even to unpack")
    m = x.shape[0] // 2
    return x[:m] + 1j * x[m:]
