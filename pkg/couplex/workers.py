# This library is free software; you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as
# published by the Free Software Foundation; either version 3 of the
# License, or (at your option) any later version.
#
# This library is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the GNU
# Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public
# License along with this library; if not, see
# <http://www.gnu.org/licenses/>.



"""
Ordered parallel map over independent blocks of work.

Tasks are fed to helper processes through a queue as (index, task)
pairs and results are slotted back by index, so callers always see
results in task order no matter which helper finished first.

:author: The couplex authors
:license: LGPL
"""


import logging
import os

from multiprocessing import Process, Queue

from . import CouplexError


__all__ = ("WorkersError", "map_blocks", "resolve_workers", "WORKERS_ENV", )


_log = logging.getLogger(__name__)


WORKERS_ENV = "COUPLEX_WORKERS"


class WorkersError(CouplexError, ValueError):
    """
    a worker count that is not a non-negative integer
    """

    pass


def resolve_workers(workers=None):
    """
    the worker count to use: the explicit value, else the
    COUPLEX_WORKERS environment variable, else 1
    """

    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise WorkersError("%s must be an integer, not %r"
                                   % (WORKERS_ENV, env))
        else:
            workers = 1

    workers = int(workers)
    if workers < 0:
        raise WorkersError("worker count must not be negative")
    return max(workers, 1)


def map_blocks(func, tasks, processes=1):
    """
    [func(task) for task in tasks], spread over up to processes helper
    processes. func must be a module-level function and the tasks and
    results must pickle.
    """

    tasks = list(tasks)
    if processes is None or processes <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]

    # don't bother starting more helpers than we'll ever use
    process_count = min(processes, len(tasks))

    results = [None] * len(tasks)
    task_queue = Queue()
    result_queue = Queue()
    helpers = list()

    try:
        # as soon as we start using the task queue, we need to be
        # catching the KeyboardInterrupt event so that we can drain the
        # queue and let its underlying thread terminate happily.

        for index, task in enumerate(tasks):
            task_queue.put((index, task))

        for _i in range(process_count):
            task_queue.put(None)
            helper = Process(target=_mp_run_blocks,
                             args=(func, task_queue, result_queue))
            helper.daemon = False
            helper.start()
            helpers.append(helper)

        _log.debug("mapping %i blocks over %i helpers",
                   len(tasks), process_count)

        failure = None
        for _i in range(len(tasks)):
            index, ok, value = result_queue.get()
            if ok:
                results[index] = value
            elif failure is None or index < failure[0]:
                failure = (index, value)

    except KeyboardInterrupt:
        # drain the tasks queue so it will exit gracefully
        for _task in iter(task_queue.get, None):
            pass
        raise

    for helper in helpers:
        helper.join()

    if failure is not None:
        # the lowest failing block, as a single worker would report
        raise failure[1]

    return results


def _mp_run_blocks(func, task_queue, result_queue):
    """
    helper process body, runs tasks until it sees the None sentinel
    """

    try:
        for index, task in iter(task_queue.get, None):
            try:
                result_queue.put((index, True, func(task)))
            except Exception as exc:
                result_queue.put((index, False, exc))

    except KeyboardInterrupt:
        # prevent a billion lines of backtrace from hitting the user
        # in the face
        return


#
# The end.
