import logging
from typing import Optional
import numpy as np
import torch
from joblib import Parallel, delayed

from ..core import DTYPE, PathEnsemble, TimeGrid
from ..errors import InvalidShapeError

logger = logging.getLogger(__name__)

_SEED_MASK = (1 << 64) - 1
DEFAULT_BLOCK_SIZE = 4096


def path_stream(seed: int, path_index: int) -> np.random.Generator:
    """Counter-based substream of one path: Philox keyed by (seed, path index)."""
    key = (int(seed) & _SEED_MASK) | (int(path_index) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_block(seed: int, start: int, stop: int, num_steps: int, dim: int) -> np.ndarray:
    block = np.empty((stop - start, num_steps, dim), dtype=np.float64)
    for m in range(start, stop):
        # draw order inside a path is (step, component)
        block[m - start] = path_stream(seed, m).standard_normal((num_steps, dim))
    return block


def simulate_brownian(grid: TimeGrid, num_paths: int, dim: int, seed: int,
                      n_jobs: int = 1, block_size: Optional[int] = None) -> PathEnsemble:
    """
    Sample M independent k-dimensional Brownian paths on the grid.

    Every path owns its own counter-based stream, so the ensemble is a pure
    function of (grid, M, k, seed) whatever the number of workers.

    Args:
        grid: Time discretization
        num_paths: Number of paths M
        dim: Brownian dimension k
        seed: 64-bit seed
        n_jobs: joblib workers used for path blocks

    Returns:
        PathEnsemble with W[:, 0] = 0 and increments of covariance dt_i * I_k
    """
    if num_paths < 1 or dim < 1:
        raise InvalidShapeError(f"Need at least one path and one dimension, got M={num_paths}, k={dim}")

    block_size = block_size or DEFAULT_BLOCK_SIZE
    bounds = [(start, min(start + block_size, num_paths)) for start in range(0, num_paths, block_size)]
    blocks = Parallel(n_jobs=n_jobs)(
        delayed(_draw_block)(seed, start, stop, grid.num_steps, dim) for start, stop in bounds
    )
    normals = torch.from_numpy(np.concatenate(blocks, axis=0)).to(DTYPE)

    dW = normals * grid.dt.sqrt().view(1, -1, 1)
    logger.debug("Simulated %d Brownian paths of dimension %d on %d steps (seed=%d)",
                 num_paths, dim, grid.num_steps, seed)
    return PathEnsemble.from_increments(grid, dW, seed=seed)
