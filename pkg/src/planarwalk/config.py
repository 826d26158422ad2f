"""Experiment configuration, dispatch, and result envelopes.

Configs are JSON with a versioned schema; every stochastic experiment
requires a seed, and replica work is distributed by index over a worker
pool, so parallel and serial runs produce identical payloads.
"""
from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import __version__
from .errors import ConfigInvalid
from .laws import JumpLaw, load_law, preset

SCHEMA_VERSION = 1

EXPERIMENT_KINDS = ("potential", "green", "hitprob", "skip", "harnack",
                    "excursions", "histories", "localtime", "census",
                    "etratio", "verify")

_STOCHASTIC = {"excursions", "localtime", "census", "etratio", "verify"}


@dataclass
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)
    law: Optional[str] = None            # preset name or path to a law file
    seed: Optional[int] = None
    replicas: int = 1
    threads: int = 1
    out: Optional[str] = None
    format: str = "json"                 # "json" or "csv"
    schema_version: int = SCHEMA_VERSION

    def validate(self) -> "ExperimentConfig":
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigInvalid(f"schema_version {self.schema_version} != "
                                f"{SCHEMA_VERSION}")
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigInvalid(f"unknown experiment kind {self.kind!r}")
        if self.kind in _STOCHASTIC and self.seed is None:
            raise ConfigInvalid(f"{self.kind} is stochastic: a seed is mandatory")
        if self.format not in ("json", "csv"):
            raise ConfigInvalid(f"unknown format {self.format!r}")
        if self.replicas < 1 or self.threads < 1:
            raise ConfigInvalid("replicas and threads must be >= 1")
        return self

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        return cls(**data).validate()

    def resolve_law(self) -> JumpLaw:
        if self.law is None:
            raise ConfigInvalid("experiment requires a law")
        if self.law.endswith(".json"):
            return load_law(self.law)
        return preset(self.law)


@dataclass
class ResultEnvelope:
    config: dict
    version: str
    wall_time: float
    metadata: dict
    payload: list[dict]

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True,
                          default=_jsonable)

    def payload_csv(self) -> str:
        """Deterministic CSV of the payload table (sorted header)."""
        if not self.payload:
            return ""
        cols = sorted({k for row in self.payload for k in row})
        lines = [",".join(cols)]
        for row in self.payload:
            lines.append(",".join(_csv_cell(row.get(c)) for c in cols))
        return "\n".join(lines) + "\n"


def _jsonable(obj):
    import numpy as np
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def replica_map(fn: Callable[[int], Any], n: int, threads: int = 1) -> list:
    """fn(replica_index) for indices 0..n-1, merged in index order.

    Each replica derives its own stream from its index, so the result is
    identical however the indices are scheduled.
    """
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(n)))


def run_experiment(config: ExperimentConfig) -> ResultEnvelope:
    """Dispatch a validated config to the module operations."""
    config.validate()
    t0 = time.time()
    meta: dict = {}
    payload = _DISPATCH[config.kind](config, meta)
    env = ResultEnvelope(dataclasses.asdict(config), __version__,
                         time.time() - t0, meta, payload)
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(env.payload_csv() if config.format == "csv"
                     else env.to_json())
    return env


# --- dispatch targets ------------------------------------------------------

def _run_potential(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .potential import potential_kernel
    law = cfg.resolve_law()
    box = int(cfg.params.get("box", 128))
    pkm = potential_kernel(law, box)
    meta.update({"k_hat": pkm.k_hat, "slope": pkm.slope,
                 "fit_residual_max": pkm.fit_residual_max,
                 "truncation": pkm.truncation})
    rows = []
    for x in range(0, box + 1):
        for y in range(0, x + 1):
            rows.append({"x": x, "y": y, "a": pkm.value((x, y))})
    return rows


def _run_green(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .potential import green_disk, p23_crosscheck, potential_kernel
    from .walk import DiskDomain
    law = cfg.resolve_law()
    radius = float(cfg.params["radius"])
    g = green_disk(law, DiskDomain((0, 0), radius))
    col = g.column((0, 0))
    i0 = g.domain.locate([[0, 0]])[0]
    meta["residual_target"] = g.residual_target
    meta["green_00"] = float(col[i0])
    if cfg.params.get("verify_p2_3"):
        pkm = potential_kernel(law, min(int(2 * radius) + 8, 96))
        chk = p23_crosscheck(law, radius, pkm, (0, 0), (0, 0))
        meta["p2_3_crosscheck"] = chk
    pts = g.domain.points
    return [{"x": int(p[0]), "y": int(p[1]), "green_from_0": float(v)}
            for p, v in zip(pts, col)]


def _run_hitprob(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .potential import crossing_probability
    law = cfg.resolve_law()
    r, R = float(cfg.params["r"]), float(cfg.params["R"])
    x = tuple(cfg.params["x"])
    rows = []
    for direction in ("outward", "inward"):
        rows.append({"direction": direction, "r": r, "R": R,
                     "x": str(x),
                     "prob": crossing_probability(law, r, R, x, direction)})
    return rows


def _run_skip(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .potential import band_skip_probability
    law = cfg.resolve_law()
    rep = band_skip_probability(law, int(cfg.params["n"]),
                                float(cfg.params["s"]),
                                cfg.params.get("side", "interior"))
    return [rep]


def _run_harnack(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .harnack import exterior_harnack_ratio, interior_harnack_ratio
    law = cfg.resolve_law()
    side = cfg.params.get("side", "interior")
    r, R = float(cfg.params["r"]), float(cfg.params["R"])
    band = float(cfg.params.get("band", 2))
    if side == "interior":
        rep = interior_harnack_ratio(law, r, R, band)
    else:
        rep = exterior_harnack_ratio(law, r, R, band)
    return [{"side": side, "max_ratio": rep.max_ratio,
             "min_ratio": rep.min_ratio, "geometry": str(rep.geometry),
             "truncation_gap": rep.truncation_gap}]


def _parse_ladder(spec: str, law):
    from .excursions import RadiiLadder
    if spec.startswith("geometric:"):
        kv = dict(part.split("=") for part in spec.split(":", 1)[1].split(","))
        return RadiiLadder.geometric(float(kv["r0"]), float(kv["lambda"]),
                                     int(kv["n"]), law=law)
    if spec.startswith("classic:"):
        return RadiiLadder.classic(int(spec.split(":", 1)[1].split("=")[-1]))
    raise ConfigInvalid(f"cannot parse ladder spec {spec!r}")


def _run_excursions(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .excursions import (SuccessPredicate, is_n_successful,
                             simulate_trace, _band_start)
    from .rng import replica_stream
    law = cfg.resolve_law()
    ladder = _parse_ladder(cfg.params.get("ladder",
                                          "geometric:r0=1000,lambda=5,n=3"), law)
    a = float(cfg.params.get("a", 0.5))
    pred = SuccessPredicate(a, ladder.n)
    exit_radius = float(cfg.params.get("exit_factor", 4.0)) * ladder.levels[0]
    start = _band_start(ladder, 0)

    def one(i: int) -> dict:
        tr, outer = simulate_trace(law, ladder, replica_stream(cfg.seed, i),
                                   start, exit_radius=exit_radius)
        ok, _ = is_n_successful(tr, pred) if tr.complete else (False, None)
        row = {"replica": i, "complete": tr.complete,
               "skips": len(tr.skip_events), "successful": ok,
               "steps": tr.total_steps}
        row.update({f"N{k}": int(tr.counts[k]) for k in range(1, ladder.n + 1)})
        return row

    rows = replica_map(one, cfg.replicas, cfg.threads)
    meta["ladder"] = {"levels": list(ladder.levels), "band": ladder.band_width,
                      "exit_radius": exit_radius, "k0": pred.k0}
    meta["success_rate"] = sum(r["successful"] for r in rows) / len(rows)
    return rows


def _run_histories(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .histories import HistorySpec, count_histories, ladder_sum
    sub = cfg.params.get("sub", "count")
    if sub == "count":
        spec = HistorySpec(int(cfg.params["n"]),
                           tuple(int(v) for v in cfg.params["m"]))
        return [{"n": spec.n, "m": ",".join(map(str, spec.m)),
                 "count": str(count_histories(spec))}]
    if sub == "ladder":
        res = ladder_sum(float(cfg.params["a"]), int(cfg.params["n"]))
        return [{"a": res.a, "n": res.n, "log_value": res.log_value,
                 "delta1": res.delta1, "delta2": res.delta2,
                 "value": str(res.value), "dps": res.dps}]
    raise ConfigInvalid(f"unknown histories sub-command {sub!r}")


def _run_localtime(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .localtime import (local_time_law, local_time_moments,
                            simulate_local_times)
    from .walk import DiskDomain
    law = cfg.resolve_law()
    radius = float(cfg.params.get("radius", 30))
    x0 = tuple(cfg.params.get("x0", (5, 0)))
    k_max = int(cfg.params.get("moments", 4))
    ltl = local_time_law(law, radius, x0)
    meta.update({"h": ltl.h, "g": ltl.g})
    rows = []
    for k in range(1, k_max + 1):
        rows.append({"k": k, "exact_moment": ltl.moment(k),
                     "falling_moment": ltl.falling_moment(k),
                     "classical_display": local_time_moments(
                         law, DiskDomain((0, 0), radius), x0, k)})
    if cfg.replicas > 1:
        sims = simulate_local_times(law, radius, x0, cfg.replicas, cfg.seed)
        for row in rows:
            k = row["k"]
            row["mc_moment"] = float((sims.astype(float) ** k).mean())
    return rows


def _run_census(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .census import run_census
    law = cfg.resolve_law()
    mode = cfg.params.get("mode", "exit")
    size = float(cfg.params.get("radius", cfg.params.get("n", 2000)))
    a = float(cfg.params.get("a", cfg.params.get("alpha", 0.5)))
    res = run_census(law, mode, size, a, cfg.replicas, cfg.seed)
    return [dataclasses.asdict(r) | {"top_site": str(r.top_site)} for r in res]


def _run_etratio(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .census import et_ratio_series
    law = cfg.resolve_law()
    checkpoints = [int(float(c)) for c in cfg.params.get(
        "checkpoints", [1e4, 1e5, 1e6])]
    res = et_ratio_series(law, checkpoints, cfg.replicas, cfg.seed)
    meta["median"] = [float(v) for v in res["median"]]
    rows = []
    for rep in range(cfg.replicas):
        for j, n in enumerate(res["checkpoints"]):
            rows.append({"replica": rep, "n": n,
                         "ratio": float(res["ratios"][rep, j])})
    return rows


def _run_verify(cfg: ExperimentConfig, meta: dict) -> list[dict]:
    from .acceptance import verify_all
    report = verify_all(cfg.params.get("profile", "quick"),
                        seed=cfg.seed or 20240801)
    meta["all_passed"] = report["all_passed"]
    return report["criteria"]


_DISPATCH = {
    "potential": _run_potential,
    "green": _run_green,
    "hitprob": _run_hitprob,
    "skip": _run_skip,
    "harnack": _run_harnack,
    "excursions": _run_excursions,
    "histories": _run_histories,
    "localtime": _run_localtime,
    "census": _run_census,
    "etratio": _run_etratio,
    "verify": _run_verify,
}
