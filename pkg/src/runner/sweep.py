#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Experiment sweeps

An experiment is a list of (task, acquisition, optimiser) tuples run
over a list of seeds. Every run is seeded from its tuple id and seed
only, so the results do not depend on how runs are spread over workers.
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import config
from src.acquisition.functions import AcquisitionSpec
from src.bo.engine import BoConfig, OptimiserConfig, run_bo
from src.bo.tasks import make_task
from src.utils.errors import BenchIOError, ConfigError
from src.utils.helpers import derive_seed, setup_logging

logger = logging.getLogger(__name__)

# Per-tuple fields that map straight onto BoConfig
_PROTOCOL_FIELDS = ("q", "n_steps", "t_opt", "minibatch", "n_raw", "n_restarts", "n_init",
                    "pool_size", "k1", "k2", "restart_strategy", "fit_steps", "fit_restarts")


@dataclass(frozen=True)
class ExperimentTuple:
    """
    One (task, acquisition, optimiser) combination

    Attributes:
        task (str): Task id
        dim (int): Task dimension
        acq (str): Acquisition kind
        form (str): Acquisition form
        optimizer (str): Optimiser id
        params (dict): Optimiser hyperparameter overrides
        protocol (dict): BoConfig overrides (q, n_steps, t_opt, ...)
        beta (float): UCB constant
        tau (float): PI temperature
        tuple_id (str): Stable identifier, derived from the other fields when empty
    """

    task: str
    dim: int
    acq: str
    form: str
    optimizer: str
    params: dict = field(default_factory=dict, hash=False)
    protocol: dict = field(default_factory=dict, hash=False)
    beta: float = config.UCB_BETA
    tau: float = config.PI_TAU
    tuple_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "acq", self.acq.upper())
        object.__setattr__(self, "form", self.form.upper())
        if not self.tuple_id:
            object.__setattr__(self, "tuple_id", "_".join(
                [self.task, str(self.dim), self.acq.lower(), self.form.lower(), self.optimizer]))
        unknown = set(self.protocol) - set(_PROTOCOL_FIELDS)
        if unknown:
            raise ConfigError(f"{self.tuple_id}: unknown protocol field(s) {sorted(unknown)}")
        # Resolve every id now so a bad file fails before any run starts
        make_task(self.task, self.dim)
        self.bo_config(0)

    def bo_config(self, seed):
        """
        BoConfig for one seed

        Args:
            seed (int): Sweep seed

        Returns:
            BoConfig: Settings seeded by (tuple_id, seed)
        """
        try:
            acq = AcquisitionSpec(self.acq, self.form, beta=self.beta, tau=self.tau)
        except ValueError as exc:
            raise ConfigError(f"{self.tuple_id}: {exc}") from exc
        optimiser = OptimiserConfig(self.optimizer, self.form, dict(self.params))
        return BoConfig(acq=acq, optimiser=optimiser, seed=derive_seed(self.tuple_id, seed), **self.protocol)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    A sweep

    Attributes:
        tuples (tuple): ExperimentTuple entries
        seeds (tuple): Distinct seeds run for every tuple
        output (str): Output directory
        jobs (int): Worker processes
    """

    tuples: tuple = ()
    seeds: tuple = config.DEFAULT_SEEDS
    output: str = config.OUTPUT_DIR
    jobs: int = config.DEFAULT_JOBS

    def __post_init__(self):
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {list(self.seeds)}")
        ids = [t.tuple_id for t in self.tuples]
        if len(set(ids)) != len(ids):
            raise ConfigError("tuple ids must be unique; set tuple_id on repeated combinations")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be at least 1, got {self.jobs}")

    @classmethod
    def from_dict(cls, data):
        """
        Build a sweep from a parsed JSON document

        Fields under "defaults" apply to every tuple unless the tuple sets them.

        Args:
            data (dict): Parsed document

        Returns:
            ExperimentConfig: The sweep
        """
        defaults = dict(data.get("defaults", {}))
        tuples = []
        for k, entry in enumerate(data.get("tuples", [])):
            merged = {**defaults, **entry}
            protocol = {key: merged.pop(key) for key in list(merged) if key in _PROTOCOL_FIELDS}
            try:
                tuples.append(ExperimentTuple(protocol=protocol, **merged))
            except TypeError as exc:
                raise ConfigError(f"tuple {k}: {exc}") from exc
        return cls(tuple(tuples), tuple(data.get("seeds", config.DEFAULT_SEEDS)),
                   data.get("output", config.OUTPUT_DIR), int(data.get("jobs", config.DEFAULT_JOBS)))

    @classmethod
    def load(cls, path):
        """
        Read a sweep from a JSON file

        Raises:
            BenchIOError: If the file cannot be read
            ConfigError: If it is not a valid sweep
        """
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise BenchIOError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        return {"tuples": [asdict(t) for t in self.tuples], "seeds": list(self.seeds),
                "output": self.output, "jobs": self.jobs}


@dataclass
class RecordRow:
    """Per-step values kept in the results file"""

    step: int
    incumbent: float
    regret: float
    opt_ms: float = None
    fit_ms: float = None


@dataclass
class RunRecord:
    """
    Outcome of one (tuple, seed) run

    Attributes:
        tuple_id (str): Tuple identifier
        task (str): Task id
        dim (int): Task dimension
        acq (str): Acquisition kind
        form (str): Acquisition form
        optimizer (str): Optimiser id
        seed (int): Sweep seed
        rows (list): RecordRow per step, N + 1 for a finished run
        status (str): "ok" or "error:<Name>: <message>"
    """

    tuple_id: str
    task: str
    dim: int
    acq: str
    form: str
    optimizer: str
    seed: int
    rows: list = field(default_factory=list)
    status: str = "ok"

    @property
    def ok(self):
        return self.status == "ok"

    @property
    def final_regret(self):
        return self.rows[-1].regret if self.rows else None


def run_one(entry, seed, debug=None):
    """
    Run one tuple for one seed, capturing any failure in the status

    Args:
        entry (ExperimentTuple): Combination to run
        seed (int): Sweep seed
        debug (bool, optional): Logging level for worker processes

    Returns:
        RunRecord: Trace or error status
    """
    setup_logging(debug)
    record = RunRecord(entry.tuple_id, entry.task, entry.dim, entry.acq, entry.form, entry.optimizer, seed)
    try:
        trace = run_bo(entry.bo_config(seed), make_task(entry.task, entry.dim))
    except Exception as exc:
        record.status = f"error:{type(exc).__name__}: {exc}"
        logger.warning("run %s seed %d ended with %s", entry.tuple_id, seed, record.status)
        return record
    record.rows = [RecordRow(row.step, row.incumbent, row.regret, row.opt_ms, row.fit_ms)
                   for row in trace.rows]
    return record


def run_sweep(experiment, jobs=None, debug=None):
    """
    Run every (tuple, seed) pair

    Args:
        experiment (ExperimentConfig): The sweep
        jobs (int, optional): Worker processes, defaults to experiment.jobs
        debug (bool, optional): Debug logging in workers

    Returns:
        list: RunRecord per pair, in tuple then seed order
    """
    jobs = experiment.jobs if jobs is None else jobs
    work = [(entry, seed) for entry in experiment.tuples for seed in experiment.seeds]
    if not work:
        return []
    logger.info("sweep: %d tuples x %d seeds on %d worker(s)", len(experiment.tuples),
                len(experiment.seeds), jobs)
    if jobs <= 1:
        return [run_one(entry, seed, debug) for entry, seed in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(run_one, entry, seed, debug) for entry, seed in work]
        return [future.result() for future in futures]
