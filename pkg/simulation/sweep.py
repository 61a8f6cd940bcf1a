"""
Sweep driver: runs many independent simulations, in parallel when asked.

Each run derives its RNG streams from (seed, run_index), so results do not
depend on worker count or completion order.
"""

import asyncio
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

from simulation.engine import run
from simulation.metrics import RunReport
from simulation.settings import RunConfig

logger = logging.getLogger(__name__)


def _run_one(config: RunConfig, run_index: int) -> RunReport:
    return run(config, run_index=run_index)


async def run_sweep(
    configs: Sequence[RunConfig],
    max_workers: int = 1,
    run_indices: Optional[Sequence[int]] = None,
) -> List[RunReport]:
    """
    Run every configuration and return reports in input order.

    Args:
        configs: Configurations with resolved seeds
        max_workers: Process count; 1 or less runs sequentially in a worker thread
        run_indices: RNG run index per config; defaults to the position in configs

    Returns:
        One RunReport per configuration
    """
    if run_indices is None:
        run_indices = list(range(len(configs)))
    if len(run_indices) != len(configs):
        raise ValueError(f"Got {len(run_indices)} run indices for {len(configs)} configurations")

    configs = [config.resolve_seed() for config in configs]
    logger.info(f"Starting sweep of {len(configs)} runs with {max(1, max_workers)} worker(s)")

    if max_workers <= 1:
        reports = []
        for i, (config, run_index) in enumerate(zip(configs, run_indices), start=1):
            reports.append(await asyncio.to_thread(_run_one, config, run_index))
            logger.info(f"Sweep progress: {i}/{len(configs)}")
        return reports

    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        futures = [
            loop.run_in_executor(pool, _run_one, config, run_index)
            for config, run_index in zip(configs, run_indices)
        ]
        reports = list(await asyncio.gather(*futures))
    logger.info(f"Sweep finished: {len(reports)} runs")
    return reports


def run_sweep_sync(
    configs: Sequence[RunConfig],
    max_workers: int = 1,
    run_indices: Optional[Sequence[int]] = None,
) -> List[RunReport]:
    """Blocking wrapper around run_sweep for non-async callers."""
    return asyncio.run(run_sweep(configs, max_workers=max_workers, run_indices=run_indices))
