"""Config-driven experiment runner and reporting layer.

Configs are JSON with strict key checking: unknown keys are rejected by
name, defaults are filled in and echoed into every output so results are
regenerable from their own files. Outputs are a pure function of
(config, seed) regardless of thread count; CSV bytes are reproducible,
while the JSON summary additionally carries version and wall-clock fields.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import subprocess
import time
from dataclasses import dataclass

import numpy as np

from . import classical, langevin, quantum
from ._streams import LANE_FIDELITY_CURVE, check_master_seed, substream
from .arrow import TimeArrow, arrow_probability
from .errors import ConfigError, ValidationError

KINDS = ("langevin", "classical", "quantum", "fidelity-curve", "verify")

_DEFAULT_SAMPLES = {
    "langevin": 10_000,
    "classical": 10_000,
    "quantum": 100_000,
    "fidelity-curve": 100_000,
    "verify": 0,
}

# declared tolerances, echoed into summaries next to the flags they gate
INTEGRAL_SIGMA = 3.0
RATIO_JOINT_WINDOW = (1.9, 2.1)
RATIO_MARGINAL_WINDOW = (0.95, 1.05)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    samples: int
    fmt: str
    threads: int
    backend: str | None
    out: str | None
    params: dict

    def resolved(self) -> dict:
        return {
            "experiment": self.kind,
            "seed": self.seed,
            "samples": self.samples,
            "format": self.fmt,
            "threads": self.threads,
            "backend": self.backend,
            "out": self.out,
            "params": self.params,
        }


@dataclass(frozen=True)
class ResultRecord:
    experiment_id: str
    columns: list
    rows: list
    summary: dict
    config: dict
    version: str
    runtime_seconds: float


def _require_mapping(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    return obj


def _reject_unknown(d: dict, allowed, where: str) -> None:
    for k in d:
        if k not in allowed:
            raise ConfigError(
                f'unknown key "{k}" in {where}; allowed keys: {", ".join(sorted(allowed))}',
                key=k,
            )


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where} must be a finite number", key=where)
    return float(v)


def _integer(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where} must be an integer", key=where)
    return v


def _positive_int(v, where: str) -> int:
    n = _integer(v, where)
    if n < 1:
        raise ConfigError(f"{where} must be positive", key=where)
    return n


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a JSON config document."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config parse error at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return build_config(raw)


def build_config(raw) -> ExperimentConfig:
    """Validate an already-decoded config mapping (the CLI merges flag
    overrides into the mapping before calling this)."""
    raw = _require_mapping(raw, "config")
    _reject_unknown(
        raw,
        {"experiment", "seed", "samples", "format", "threads", "backend", "out", "params"},
        "config",
    )
    if "experiment" not in raw:
        raise ConfigError('config is missing required key "experiment"', key="experiment")
    kind = raw["experiment"]
    if kind not in KINDS:
        raise ConfigError(
            f'experiment must be one of {", ".join(KINDS)}; got {kind!r}', key="experiment"
        )
    seed = raw.get("seed", 0)
    seed = _integer(seed, "seed")
    try:
        seed = check_master_seed(seed)
    except ValidationError as e:
        raise ConfigError(str(e), key="seed") from e
    samples = raw.get("samples", _DEFAULT_SAMPLES[kind])
    if kind != "verify":
        samples = _positive_int(samples, "samples")
    else:
        samples = _integer(samples, "samples") if "samples" in raw else 0
    fmt = raw.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f'format must be "csv" or "json", got {fmt!r}', key="format")
    threads = _positive_int(raw.get("threads", 1), "threads")
    backend = raw.get("backend")
    if backend is not None and backend not in ("numpy", "cython"):
        raise ConfigError(f'backend must be "numpy" or "cython", got {backend!r}', key="backend")
    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out must be a path string", key="out")
    params = _require_mapping(raw.get("params", {}), "params")
    resolver = _PARAM_RESOLVERS[kind]
    params = resolver(params)
    return ExperimentConfig(
        kind=kind, seed=seed, samples=samples, fmt=fmt,
        threads=threads, backend=backend, out=out, params=params,
    )


def _resolve_langevin(params: dict) -> dict:
    _reject_unknown(
        params, {"lambda", "gamma", "dt", "t1", "t2", "protocol"}, "langevin params"
    )
    for req in ("lambda", "gamma", "t2", "protocol"):
        if req not in params:
            raise ConfigError(f'langevin params missing required key "{req}"', key=req)
    lam = _number(params["lambda"], "lambda")
    if lam <= 0:
        raise ConfigError("lambda must be positive", key="lambda")
    gamma = _number(params["gamma"], "gamma")
    if gamma <= 0:
        raise ConfigError("gamma must be positive for ensemble experiments", key="gamma")
    t1 = _number(params.get("t1", 0.0), "t1")
    t2 = _number(params["t2"], "t2")
    dt = _number(params.get("dt", 1e-3 / lam), "dt")
    proto = _require_mapping(params["protocol"], "protocol")
    _reject_unknown(proto, {"points", "values", "constant", "interp"}, "protocol")
    modes = [k for k in ("points", "values", "constant") if k in proto]
    if len(modes) != 1:
        raise ConfigError(
            'protocol must contain exactly one of "points", "values", "constant"'
        )
    resolved_proto: dict = {}
    if "points" in proto:
        pts = proto["points"]
        if not isinstance(pts, list) or not pts or not all(
            isinstance(p, list) and len(p) == 2 for p in pts
        ):
            raise ConfigError("protocol points must be a nonempty list of [t, x] pairs", key="points")
        interp = proto.get("interp", "previous")
        if interp not in ("previous", "linear"):
            raise ConfigError('interp must be "previous" or "linear"', key="interp")
        resolved_proto = {"points": [[_number(t, "point t"), _number(x, "point x")] for t, x in pts],
                          "interp": interp}
    elif "values" in proto:
        if "interp" in proto:
            raise ConfigError('interp applies only to "points" protocols', key="interp")
        vals = proto["values"]
        if not isinstance(vals, list) or len(vals) < 2:
            raise ConfigError("protocol values must be a list of at least 2 numbers", key="values")
        resolved_proto = {"values": [_number(v, "protocol value") for v in vals]}
    else:
        if "interp" in proto:
            raise ConfigError('interp applies only to "points" protocols', key="interp")
        resolved_proto = {"constant": _number(proto["constant"], "constant")}
    resolved = {
        "lambda": lam, "gamma": gamma, "dt": dt, "t1": t1, "t2": t2,
        "protocol": resolved_proto,
    }
    _build_langevin_objects(resolved)
    return resolved


def _build_langevin_objects(params: dict) -> tuple:
    p = langevin.LangevinParams(
        lam=params["lambda"], gamma=params["gamma"], dt=params["dt"],
        t1=params["t1"], t2=params["t2"],
    )
    proto_cfg = params["protocol"]
    if "points" in proto_cfg:
        proto = langevin.protocol_from_points(proto_cfg["points"], p, interp=proto_cfg["interp"])
    elif "values" in proto_cfg:
        proto = langevin.Protocol(np.asarray(proto_cfg["values"], dtype=np.float64))
        langevin._check_grid(p, proto)
    else:
        proto = langevin.constant_protocol(p, proto_cfg["constant"])
    return p, proto


def _resolve_classical(params: dict) -> dict:
    _reject_unknown(params, {"rho1", "n"}, "classical params")
    for req in ("rho1", "n"):
        if req not in params:
            raise ConfigError(f'classical params missing required key "{req}"', key=req)
    rho1 = params["rho1"]
    if not isinstance(rho1, list) or len(rho1) < 2:
        raise ConfigError("rho1 must be a list of at least 2 probabilities", key="rho1")
    rho1 = [_number(v, "rho1 entry") for v in rho1]
    n = _positive_int(params["n"], "n")
    classical.SimplexDistribution(np.asarray(rho1))
    return {"rho1": rho1, "n": n}


def _parse_matrix(rows) -> np.ndarray:
    def entry(v):
        if isinstance(v, list):
            if len(v) != 2:
                raise ConfigError("matrix entries must be numbers or [re, im] pairs", key="rho1")
            return complex(_number(v[0], "re"), _number(v[1], "im"))
        return complex(_number(v, "matrix entry"), 0.0)

    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ConfigError("rho1 must be a list of matrix rows", key="rho1")
    return np.array([[entry(v) for v in r] for r in rows], dtype=np.complex128)


def _resolve_quantum(params: dict) -> dict:
    _reject_unknown(params, {"spectrum", "rho1", "d", "n", "delta"}, "quantum params")
    if ("spectrum" in params) == ("rho1" in params):
        raise ConfigError('quantum params need exactly one of "spectrum" or "rho1"')
    if "n" not in params:
        raise ConfigError('quantum params missing required key "n"', key="n")
    n = _positive_int(params["n"], "n")
    delta = _number(params.get("delta", 0.0), "delta")
    if delta < 0:
        raise ConfigError("delta must be nonnegative", key="delta")
    if "spectrum" in params:
        if not isinstance(params["spectrum"], list):
            raise ConfigError("spectrum must be a list of eigenvalues", key="spectrum")
        vals = [_number(v, "spectrum entry") for v in params["spectrum"]]
        if not quantum.MIN_DIM <= len(vals) <= quantum.MAX_DIM:
            raise ConfigError(
                f"spectrum length must be in [{quantum.MIN_DIM}, {quantum.MAX_DIM}]", key="spectrum"
            )
        spec = quantum.Spectrum(np.asarray(vals))
        resolved: dict = {"spectrum": vals}
    else:
        mat = _parse_matrix(params["rho1"])
        if not quantum.MIN_DIM <= mat.shape[0] <= quantum.MAX_DIM:
            raise ConfigError(f"rho1 dimension must be in [{quantum.MIN_DIM}, {quantum.MAX_DIM}] (d <= 8)", key="rho1")
        spec = quantum.DensityMatrix(mat).spectrum()
        resolved = {"rho1": params["rho1"]}
    d = params.get("d", spec.dim)
    d = _positive_int(d, "d")
    if not quantum.MIN_DIM <= d <= quantum.MAX_DIM:
        raise ConfigError(
            f"d = {d} is out of range ({quantum.MIN_DIM} <= d <= {quantum.MAX_DIM})", key="d"
        )
    if d != spec.dim:
        raise ConfigError(f"d = {d} does not match the state dimension {spec.dim}", key="d")
    # feasibility check up front so bad configs fail at parse time
    n_classes = math.comb(n + d - 1, d - 1)
    if n_classes > quantum.TYPE_CLASS_LIMIT:
        raise ConfigError(
            f"(n={n}, d={d}) needs {n_classes} type classes, over the limit {quantum.TYPE_CLASS_LIMIT}", key="n"
        )
    resolved.update({"d": d, "n": n, "delta": delta})
    return resolved


def _quantum_spectrum(params: dict) -> quantum.Spectrum:
    if "spectrum" in params:
        return quantum.Spectrum(np.asarray(params["spectrum"], dtype=np.float64))
    return quantum.DensityMatrix(_parse_matrix(params["rho1"])).spectrum()


def _resolve_fidelity_curve(params: dict) -> dict:
    _reject_unknown(params, {"delta_i_values", "start", "stop", "step"}, "fidelity-curve params")
    if "delta_i_values" in params:
        if any(k in params for k in ("start", "stop", "step")):
            raise ConfigError('give either "delta_i_values" or a start/stop/step range, not both')
        vals = params["delta_i_values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError("delta_i_values must be a nonempty list", key="delta_i_values")
        vals = [_number(v, "delta_i value") for v in vals]
    else:
        start = _number(params.get("start", 0.0), "start")
        stop = _number(params.get("stop", 6.0), "stop")
        step = _number(params.get("step", 0.5), "step")
        if step <= 0 or stop < start:
            raise ConfigError("need step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = [start + k * step for k in range(count)]
    if any(v < 0 for v in vals):
        raise ConfigError("delta_i values must be nonnegative", key="delta_i_values")
    return {"delta_i_values": vals}


def _resolve_verify(params: dict) -> dict:
    _reject_unknown(params, {"criteria"}, "verify params")
    criteria = params.get("criteria")
    if criteria is not None:
        if not isinstance(criteria, list) or not criteria:
            raise ConfigError("criteria must be a nonempty list of criterion ids", key="criteria")
        criteria = [str(c) for c in criteria]
    return {"criteria": criteria}


_PARAM_RESOLVERS = {
    "langevin": _resolve_langevin,
    "classical": _resolve_classical,
    "quantum": _resolve_quantum,
    "fidelity-curve": _resolve_fidelity_curve,
    "verify": _resolve_verify,
}


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=os.path.dirname(os.path.abspath(__file__)),
            capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    from . import __version__

    return f"v{__version__}"


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return m, se


def _run_langevin(config: ExperimentConfig) -> tuple[list, list, dict]:
    p, proto = _build_langevin_objects(config.params)
    record = langevin.forward_reverse_experiment(
        p, proto, config.samples, config.seed,
        backend=config.backend, threads=config.threads,
    )
    columns = ["arm", "path_index", "delta_i", "d", "xi", "eta"]
    rows = []
    for arm_name, arm in (("forward", record.forward), ("reverse", record.reverse)):
        for i in range(arm.n_paths):
            rows.append({
                "arm": arm_name, "path_index": i,
                "delta_i": float(arm.delta_i[i]), "d": float(arm.d[i]),
                "xi": float(arm.xi[i]), "eta": float(arm.eta[i]),
            })
    exp_d = np.exp(-record.forward.d)
    m, se = _mean_se(exp_d)
    di_f = _mean_se(record.forward.delta_i)
    di_r = _mean_se(record.reverse.delta_i)
    d_f = _mean_se(record.forward.d)
    summary = {
        "backend": record.backend,
        "n_paths": record.n_paths,
        "mean_delta_i_forward": di_f[0], "se_delta_i_forward": di_f[1],
        "mean_delta_i_reverse": di_r[0], "se_delta_i_reverse": di_r[1],
        "mean_d_forward": d_f[0], "se_d_forward": d_f[1],
        "mean_exp_minus_d_forward": m, "se_exp_minus_d_forward": se,
        "integral_relation_sigma": INTEGRAL_SIGMA,
        "integral_relation_pass": bool(abs(m - 1.0) <= INTEGRAL_SIGMA * se),
    }
    return columns, rows, summary


def _run_classical(config: ExperimentConfig) -> tuple[list, list, dict]:
    rho1 = classical.SimplexDistribution(np.asarray(config.params["rho1"]))
    rec = classical.factor_two_experiment(
        rho1, config.params["n"], config.samples, config.seed
    )
    columns = ["sample_index", "d_joint", "d_marginal"]
    rows = [
        {"sample_index": i, "d_joint": float(rec.d_joint[i]), "d_marginal": float(rec.d_marginal[i])}
        for i in range(rec.n_samples)
    ]
    mj, sej = rec.mean_d_joint_empirical
    mm, sem = rec.mean_d_marginal_empirical
    summary = {
        "delta_i": rec.delta_i,
        "mean_d_joint": mj, "se_d_joint": sej,
        "mean_d_marginal": mm, "se_d_marginal": sem,
        "mean_d_joint_closed": rec.mean_d_joint_closed,
        "di_leading": rec.di_leading, "d_leading": rec.d_leading,
        "ratio_joint": rec.ratio_joint, "ratio_marginal": rec.ratio_marginal,
        "ratio_joint_window": list(RATIO_JOINT_WINDOW),
        "ratio_marginal_window": list(RATIO_MARGINAL_WINDOW),
        "ratio_joint_pass": (
            None if rec.ratio_joint is None
            else bool(RATIO_JOINT_WINDOW[0] <= rec.ratio_joint <= RATIO_JOINT_WINDOW[1])
        ),
        "ratio_marginal_pass": (
            None if rec.ratio_marginal is None
            else bool(RATIO_MARGINAL_WINDOW[0] <= rec.ratio_marginal <= RATIO_MARGINAL_WINDOW[1])
        ),
    }
    return columns, rows, summary


def _run_quantum(config: ExperimentConfig) -> tuple[list, list, dict]:
    spec = _quantum_spectrum(config.params)
    rec = quantum.fidelity_experiment(
        spec, config.params["d"], config.params["n"], config.params["delta"],
        config.samples, config.seed,
    )
    post_plus_one = arrow_probability(-rec.delta_i, TimeArrow.PLUS)
    cell_meta = {
        "plus_one": ("plus", 1, post_plus_one, post_plus_one),
        "plus_zero": ("plus", 0, 1.0, 1.0),
        "minus_one": ("minus", 1, post_plus_one, 1.0 - post_plus_one),
        "minus_zero": ("minus", 0, 1.0, 0.0),
    }
    columns = ["truth", "outcome", "count", "posterior_plus", "score"]
    rows = []
    for key, (truth, outcome, p_plus, score) in cell_meta.items():
        rows.append({
            "truth": truth, "outcome": outcome, "count": rec.counts[key],
            "posterior_plus": p_plus, "score": score,
        })
    est = rec.f_empirical
    # the closed form is the idealized (exact-regime) value; only gate the
    # empirical estimate against it when the traces actually realize that
    # regime, otherwise a systematic finite-n gap is expected and reported
    exact_regime = (
        abs(rec.tr_xi - 1.0) <= 1e-12
        and abs(rec.tr_eta - math.exp(-rec.delta_i)) <= 1e-12
    )
    if not exact_regime:
        fidelity_pass = None
    elif est.std_error > 0:
        fidelity_pass = bool(abs(est.mean - rec.f_closed) <= INTEGRAL_SIGMA * est.std_error)
    else:
        fidelity_pass = bool(est.mean == rec.f_closed)
    summary = {
        "delta_i": rec.delta_i,
        "tr_xi": rec.tr_xi, "tr_eta": rec.tr_eta, "rank": rec.rank,
        "f_closed": rec.f_closed,
        "f_empirical": est.mean, "se_f_empirical": est.std_error,
        "fidelity_sigma": INTEGRAL_SIGMA,
        "exact_regime": exact_regime,
        "fidelity_pass": fidelity_pass,
    }
    return columns, rows, summary


def _run_fidelity_curve(config: ExperimentConfig) -> tuple[list, list, dict]:
    """Empirical fidelity of the two-outcome inference along a ΔI grid,
    sampled from the idealized outcome laws."""
    columns = ["delta_i", "f_closed", "f_empirical", "stderr"]
    rows = []
    max_z = 0.0
    m = config.samples
    for j, di in enumerate(config.params["delta_i_values"]):
        gen = substream(config.seed, LANE_FIDELITY_CURVE, j)
        u = gen.random((m, 2))
        truth_plus = u[:, 0] < 0.5
        p_one = np.where(truth_plus, math.exp(-di), 1.0)
        one = u[:, 1] < p_one
        post_plus = arrow_probability(-di, TimeArrow.PLUS)
        post_minus = arrow_probability(-di, TimeArrow.MINUS)
        scores = np.where(
            one,
            np.where(truth_plus, post_plus, post_minus),
            np.where(truth_plus, 1.0, 0.0),
        )
        mean, se = _mean_se(scores)
        closed = arrow_probability(di, TimeArrow.PLUS)
        rows.append({"delta_i": di, "f_closed": closed, "f_empirical": mean, "stderr": se})
        if se > 0:
            max_z = max(max_z, abs(mean - closed) / se)
    summary = {"n_trials_per_point": m, "max_abs_z": max_z}
    return columns, rows, summary


def _run_verify(config: ExperimentConfig) -> tuple[list, list, dict]:
    from . import acceptance

    results = acceptance.run_all(
        criteria=config.params["criteria"],
        backend=config.backend,
        threads=config.threads,
    )
    columns = ["criterion", "name", "status", "runtime_seconds", "detail"]
    rows = [
        {
            "criterion": r.index, "name": r.name,
            "status": ("PASS" if r.passed else ("FAIL (expected: documented defect)" if r.expected_failure else "FAIL")),
            "runtime_seconds": round(r.runtime_seconds, 3),
            "detail": r.detail,
        }
        for r in results
    ]
    summary = {
        "total": len(results),
        "passed": sum(1 for r in results if r.passed),
        "failed": sum(1 for r in results if not r.passed),
        "expected_failures": sum(1 for r in results if not r.passed and r.expected_failure),
        "all_passed": all(r.passed for r in results),
    }
    return columns, rows, summary


_RUNNERS = {
    "langevin": _run_langevin,
    "classical": _run_classical,
    "quantum": _run_quantum,
    "fidelity-curve": _run_fidelity_curve,
    "verify": _run_verify,
}


def run_experiment(config: ExperimentConfig) -> ResultRecord:
    start = time.monotonic()
    columns, rows, summary = _RUNNERS[config.kind](config)
    return ResultRecord(
        experiment_id=config.kind,
        columns=columns,
        rows=rows,
        summary=summary,
        config=config.resolved(),
        version=version_string(),
        runtime_seconds=time.monotonic() - start,
    )


def render_csv(record: ResultRecord) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(record.columns)
    for row in record.rows:
        writer.writerow([row[c] for c in record.columns])
    return buf.getvalue()


def summary_document(record: ResultRecord) -> dict:
    return {
        "experiment": record.experiment_id,
        "config": record.config,
        "version": record.version,
        "runtime_seconds": record.runtime_seconds,
        "summary": record.summary,
    }


def emit(record: ResultRecord, fmt: str, out: str) -> list:
    """Write the record to `out`. csv: data file plus a JSON summary sidecar
    at out + '.summary.json'. json: a single self-contained document.
    Returns the list of paths written."""
    if fmt not in ("csv", "json"):
        raise ValidationError(f'format must be "csv" or "json", got {fmt!r}')
    if not out:
        raise ValidationError("output path is required")
    parent = os.path.dirname(os.path.abspath(out))
    if parent and not os.path.isdir(parent):
        raise ValidationError(f"output directory does not exist: {parent}")
    written = []
    if fmt == "csv":
        with open(out, "w", newline="") as fh:
            fh.write(render_csv(record))
        written.append(out)
        sidecar = out + ".summary.json"
        with open(sidecar, "w") as fh:
            json.dump(summary_document(record), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(sidecar)
    else:
        doc = summary_document(record)
        doc["columns"] = record.columns
        doc["rows"] = record.rows
        with open(out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(out)
    return written
