"""Runs independent numerical jobs concurrently & collects their results.

Jobs are plain callables executed in a thread pool driven by an asyncio
event loop; results come back in registration order whatever the
completion order, so every reduction over them is deterministic.
"""

import asyncio
from concurrent.futures import ThreadPoolExecutor
from logging import getLogger
import os
import signal
import threading
from typing import Any, Callable, Dict, List, Optional, Protocol

from .errors import ConfigError


LOGGER = getLogger(__name__)

THREADS_VARIABLE = 'WULFF_SPECTRA_THREADS'


def get_thread_limit() -> int:
    """Read the worker cap from `WULFF_SPECTRA_THREADS`.

    Falls back to the CPU count when unset; anything other than a positive
    integer is a configuration error.
    """
    env = os.getenv(THREADS_VARIABLE)

    if env is None:
        return os.cpu_count() or 1

    try:
        limit = int(env)
    except ValueError as err:
        raise ConfigError(
            f'{THREADS_VARIABLE} must be a positive integer, got `{env}`.'
        ) from err

    if limit < 1:
        raise ConfigError(
            f'{THREADS_VARIABLE} must be a positive integer, got `{env}`.')

    return limit


class Job(Protocol):
    """Protocol specifying a job: a callable taking no arguments."""

    # pylint: disable=too-few-public-methods

    def __call__(self) -> Any:
        """Compute & return the job's result."""
        ...


class Runner:
    """Helper to run registered jobs in parallel with graceful exits."""

    jobs: List[Job]
    max_workers: int

    def __init__(self, max_workers: Optional[int] = None) -> None:
        self.jobs = []
        self.max_workers = max_workers or get_thread_limit()

    @staticmethod
    def _quit(signum: int, _: Any) -> None:
        """Exit the process by raising an Exception."""
        LOGGER.info(f'Exit signal received: {signum}')
        raise SystemExit(0)

    def register_job(self, job: Job) -> None:
        """Add job to list to be run when the runner is run."""
        self.jobs.append(job)

    async def _run_jobs(self, executor: ThreadPoolExecutor,
                        return_exceptions: bool) -> List[Any]:
        """Gather registered jobs & await them in the executor."""
        loop = asyncio.get_running_loop()
        return await asyncio.gather(
            *[loop.run_in_executor(executor, job) for job in self.jobs],
            return_exceptions=return_exceptions)

    def _install_handlers(self) -> Dict[int, Any]:
        # signal handlers can only be set from the main thread
        if threading.current_thread() is not threading.main_thread():
            return {}

        previous = {}
        for signum in (signal.SIGINT, signal.SIGTERM):
            previous[signum] = signal.signal(signum, self._quit)
        return previous

    def run(self, return_exceptions: bool = False) -> List[Any]:
        """Run all registered jobs & return their results in order.

        With `return_exceptions`, a failing job contributes its exception
        to the results instead of aborting the run. Gracefully exit using
        SIGINT or SIGTERM.
        """
        workers = min(self.max_workers, max(1, len(self.jobs)))
        LOGGER.debug(f'running {len(self.jobs)} jobs on {workers} threads')

        previous = self._install_handlers()
        loop = asyncio.new_event_loop()
        executor = ThreadPoolExecutor(max_workers=workers)

        try:
            return loop.run_until_complete(
                self._run_jobs(executor, return_exceptions))
        except SystemExit:
            LOGGER.info('SystemExit caught, stopping jobs...')
            raise
        finally:
            executor.shutdown(wait=False, cancel_futures=True)
            loop.close()
            for signum, handler in previous.items():
                signal.signal(signum, handler)


def run_all(jobs: List[Callable[[], Any]],
            max_workers: Optional[int] = None,
            return_exceptions: bool = False) -> List[Any]:
    """Register every job on a fresh Runner & run them."""
    runner = Runner(max_workers)

    for job in jobs:
        runner.register_job(job)

    return runner.run(return_exceptions=return_exceptions)
