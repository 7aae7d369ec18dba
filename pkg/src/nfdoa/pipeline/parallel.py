"""Run independent jobs in parallel worker processes."""

import logging
import multiprocessing
import pickle
import queue
import signal
import traceback


def unpicklable_parts(item, path=()):
    """
    Yield ``(path, value)`` for each part of a job's arguments that cannot be
    pickled, where ``path`` holds the keys and indices leading to it.

    Dictionaries, lists and tuples are searched element by element, so that
    the offending feature array, estimator or callable is named rather than
    the whole job.
    """
    try:
        pickle.dumps(item)
        return
    except (pickle.PicklingError, TypeError, AttributeError):
        pass
    if isinstance(item, dict):
        keys = list(item)
    elif isinstance(item, (list, tuple)):
        keys = range(len(item))
    else:
        yield path, item
        return
    found = False
    for key in keys:
        for part in unpicklable_parts(item[key], path + (key,)):
            found = True
            yield part
    if not found:
        yield path, item


def fails_to_pickle(job_args):
    """
    Return ``True`` if a job's arguments cannot be sent to a worker process.

    Estimators travel with their payload (network weights, MUSIC grids and
    array geometry), so an estimator that holds a lambda or an open handle
    is reported here, before any worker is started. Each offending part is
    logged.
    """
    logger = logging.getLogger(__name__)
    parts = list(unpicklable_parts(job_args))
    for path, value in parts:
        where = ''.join('[{!r}]'.format(key) for key in path)
        logger.error('Job argument{} cannot be sent to a worker: {}'.format(
            where, type(value).__name__))
    return bool(parts)


def _picklable_error(exc):
    try:
        pickle.loads(pickle.dumps(exc))
        return exc
    except Exception:
        return RuntimeError(traceback.format_exc())


def _apply_func(func, job_q, result_q):
    # Ignore the signal that raises KeyboardInterrupt exceptions; the main
    # loop will handle this exception and ensure each process terminates.
    signal.signal(signal.SIGINT, signal.SIG_IGN)

    while True:
        job = job_q.get()
        if job is None:
            break
        index, args = job
        try:
            result_q.put((index, True, func(*args)))
        except Exception as e:
            result_q.put((index, False, _picklable_error(e)))


def run_in_parallel(func, iterable, n_proc):
    """
    Perform multiple jobs in parallel by spawning multiple processes.

    :param func: The (module-level) function that performs a single job.
    :param iterable: A sequence of job arguments, represented as tuples
        and *unpacked* before passing to ``func`` (i.e., ``func(*args)``).
    :param n_proc: The number of processes to spawn.

    :returns: The results of every job, in the order of ``iterable``.
    :raises ValueError: If any job arguments cannot be pickled.
    """
    # Note: we avoid using multiprocessing.Pool because it does not handle
    # KeyboardInterrupt exceptions correctly. For details, see:
    # http://bryceboe.com/2012/02/14/python-multiprocessing-pool-and-keyboardinterrupt-revisited/
    logger = logging.getLogger(__name__)
    job_q = multiprocessing.Queue()
    result_q = multiprocessing.Queue()
    workers = []

    jobs = list(iterable)
    for args in jobs:
        if fails_to_pickle(args):
            raise ValueError("Job arguments cannot be sent to a worker")
    n_job = len(jobs)
    if n_job == 0:
        return []
    for index, args in enumerate(jobs):
        job_q.put((index, args))

    # Spawn no more processes than there are jobs.
    n_proc = min(n_proc, n_job)
    for _ in range(n_proc):
        job_q.put(None)

    results = {}
    failures = {}
    try:
        logger.info("Spawning {} workers for {} jobs".format(n_proc, n_job))
        for i in range(n_proc):
            proc = multiprocessing.Process(target=_apply_func,
                                           args=[func, job_q, result_q])
            workers.append(proc)
            proc.start()
        # Drain the results before joining, so that workers never block on a
        # full result queue.
        while len(results) + len(failures) < n_job:
            try:
                index, ok, value = result_q.get(timeout=1)
            except queue.Empty:
                if not any(worker.is_alive() for worker in workers):
                    break
                continue
            if ok:
                results[index] = value
            else:
                failures[index] = value
    except KeyboardInterrupt:
        # Force each worker to terminate.
        logger.info("Received CTRL-C, terminating {} workers".format(n_proc))
        for worker in workers:
            worker.terminate()
        raise
    finally:
        for ix, worker in enumerate(workers):
            worker.join()
            # Note: worker.exitcode should be 0 if it completed successfully.
            # It will be -N if it was terminated by signal N.
            if worker.exitcode != 0:
                msg = "Worker {} exit code: {}"
                logger.info(msg.format(ix, worker.exitcode))

    if failures:
        index = min(failures)
        logger.error("Job {} of {} failed".format(index, n_job))
        raise failures[index]
    if len(results) < n_job:
        missing = sorted(set(range(n_job)) - set(results))
        raise RuntimeError("Workers exited without completing jobs {}"
                           .format(missing))
    return [results[index] for index in range(n_job)]


def map_jobs(func, iterable, n_proc=1):
    """
    Run a number of jobs in serial or in parallel.

    :param func: The function that performs a single job.
    :param iterable: A sequence of job argument tuples.
    :param n_proc: The number of processes to spawn in order to run these
        jobs; set this to values greater than 1 to run jobs in parallel.
    :returns: The job results, in order.
    """
    if n_proc < 1:
        raise ValueError('Invalid number of processes: {}'.format(n_proc))
    elif n_proc == 1:
        return [func(*args) for args in iterable]
    else:
        return run_in_parallel(func, iterable, n_proc)
