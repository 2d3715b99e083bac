"""Run every (trainer, seed) pair of an experiment spec."""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..data import make_dataset, ssl_split
from ..trainers import RunMetrics, train

__all__ = ["RunResult", "load_split", "run_experiment", "default_jobs"]


@dataclass
class RunResult:
    name: str
    config: object
    seed: int
    metrics: RunMetrics


def load_split(dataset, run_seed):
    """Generate and split the dataset for one run."""
    s = dataset.data_seed(run_seed)
    xs, ys = make_dataset(dataset.generator, seed=s, **dataset.kwargs())
    return ssl_split(xs, ys, dataset.labels_per_class, dataset.n_test, seed=s)


def _one(task):
    order, name, config, seed, dataset = task
    labeled, unlabeled, test = load_split(dataset, seed)
    metrics = train(config.with_(seed=seed), labeled, unlabeled, test)
    metrics.params = None  # keep the result small when crossing process boundaries
    return order, RunResult(name, config.with_(seed=seed), seed, metrics)


def default_jobs(n_tasks):
    return max(1, min(n_tasks, os.cpu_count() or 1))


def run_experiment(spec, jobs=1):
    """Execute the Cartesian product of trainers and seeds.

    Results come back in declaration order (trainer, then seed) however many
    worker processes were used.  Aborted runs are kept, not raised.
    """
    tasks = [
        ((ci, si), name, cfg, seed, spec.dataset)
        for ci, (name, cfg) in enumerate(spec.configs())
        for si, seed in enumerate(spec.seeds)
    ]
    if jobs is None:
        jobs = default_jobs(len(tasks))
    if jobs <= 1 or len(tasks) <= 1:
        done = [_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_one, tasks))
    done.sort(key=lambda item: item[0])
    return [r for _, r in done]
