"""Reproducible experiments comparing simulation with exact and asymptotic values.

Replication ``i`` of an experiment draws from the stream ``(seed, i)``, so the
numeric payload of a report depends only on the configuration, never on the
number of worker processes.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import json
import math
import multiprocessing

import numpy as np
from scipy import stats

from ._rng import stream
from .asymptotics import (predict_mean, predict_residual, predict_unseen, ratio_limit)
from .errors import (AccuracyError, DegenerateVarianceError, InsufficientReplicationsError,
                     ParameterDomainError)
from .frequency_models import realize_stick_breaking
from .literals import parse_model
from .moments import (HOLDS, diagnose_variance, phi_fixed, phi_fixed_r, phi_poisson,
                      phi_poisson_r, var_fixed, var_poisson)
from .sampler import OccupancyState, _draw, run_fixed

Z_CRIT = 4.0
JITTER_KEY = 2 ** 32
KINDS = ("mc_vs_exact", "clt", "trace", "scan_variance", "power_law")


@dataclass
class ExperimentConfig:
    kind: str
    model: str
    n: int = None
    t: float = None
    grid: list = None
    reps: int = 1
    seed: int = 0
    r_max: int = 3
    k: int = None
    inner_reps: int = 20
    tolerances: dict = field(default_factory=dict)
    workers: int = 1
    out: str = None
    format: str = "json"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ParameterDomainError(f"unknown experiment kind {self.kind!r}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ParameterDomainError("reps must be a positive integer")
        if self.grid is not None:
            g = list(self.grid)
            if any(b <= a for a, b in zip(g, g[1:])):
                raise ParameterDomainError("grids must be strictly increasing")
        if self.format not in ("json", "csv"):
            raise ParameterDomainError("format must be json or csv")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ParameterDomainError("workers must be a positive integer")

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ParameterDomainError(f"unknown config fields {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# replication machinery
# ---------------------------------------------------------------------------
_MODELS = {}


def _model(literal):
    m = _MODELS.get(literal)
    if m is None:
        m = _MODELS[literal] = parse_model(literal)
    return m


def _task(job):
    fn, literal, params, reps = job
    model = _model(literal)
    return [fn(model, params, rep) for rep in reps]


def replicate(fn, literal, params, reps, workers=1):
    """``[fn(model, params, rep) for rep in range(reps)]``, possibly in parallel."""
    if workers <= 1 or reps < 2:
        model = _model(literal)
        return [fn(model, params, rep) for rep in range(reps)]
    n_jobs = min(reps, 4 * workers)
    bounds = np.linspace(0, reps, n_jobs + 1).astype(int)
    jobs = [(fn, literal, params, range(a, b)) for a, b in zip(bounds, bounds[1:])]
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        parts = list(pool.map(_task, jobs))
    return [r for part in parts for r in part]


def _fixed_stats(model, params, rep):
    n, r_max, seed = params["n"], params["r_max"], params["seed"]
    st = run_fixed(model, n, stream(seed, rep))
    return [st.K] + [st.K_r(r) for r in range(1, r_max + 1)]


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------
def _moments_of(x):
    x = np.asarray(x, dtype=float)
    M = len(x)
    mean = math.fsum(x.tolist()) / M
    d = x - mean
    var = math.fsum((d * d).tolist()) / (M - 1) if M > 1 else 0.0
    m4 = math.fsum((d ** 4).tolist()) / M
    return mean, var, m4


def _stat_entry(x, exact_mean=None, exact_var=None, z_crit=Z_CRIT):
    M = len(x)
    mean, var, m4 = _moments_of(x)
    se = math.sqrt(var / M)
    entry = {"mean": mean, "var": var, "se": se, "exact_mean": exact_mean,
             "exact_var": exact_var}
    verdicts = []
    if exact_mean is not None:
        z = (mean - exact_mean) / se if se > 0 else (0.0 if abs(mean - exact_mean) <= 1e-12 else math.inf)
        entry["z_mean"] = z
        verdicts.append(abs(z) <= z_crit)
    if exact_var is not None and M > 3:
        s4 = var * var
        se_var = math.sqrt(max(m4 - s4 * (M - 3) / (M - 1), 0.0) / M)
        z = (var - exact_var) / se_var if se_var > 0 else (0.0 if abs(var - exact_var) <= 1e-12 else math.inf)
        entry["se_var"] = se_var
        entry["z_var"] = z
        verdicts.append(abs(z) <= z_crit)
    entry["pass"] = all(verdicts)
    return entry


@dataclass
class ReplicationSummary:
    kind: str
    config: dict
    stats: dict
    normality: dict = None
    label: str = "asserted"
    verdict: bool = True
    extra: dict = None

    def payload(self):
        d = {"kind": self.kind, "stats": self.stats, "normality": self.normality,
             "label": self.label, "verdict": self.verdict, "extra": self.extra}
        cfg = dict(self.config)
        cfg.pop("workers", None)
        cfg.pop("out", None)
        d["config"] = cfg
        return d

    def to_json(self):
        return json.dumps(_clean(self.payload()), sort_keys=True, indent=1)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------
def mc_vs_exact(config):
    """Empirical mean and variance of ``K_n`` and means of ``K_{n,r}`` against exact values."""
    model = _model(config.model)
    n = int(config.n)
    params = {"n": n, "r_max": config.r_max, "seed": config.seed}
    rows = np.array(replicate(_fixed_stats, config.model, params, config.reps, config.workers))
    try:
        v_exact = var_fixed(model, n)
        v_label = "fixed"
    except AccuracyError:
        v_exact = None
        v_label = "unavailable"
    z = config.tolerances.get("z_crit", Z_CRIT)
    out = {"K": _stat_entry(rows[:, 0], phi_fixed(model, n), v_exact, z)}
    for r in range(1, config.r_max + 1):
        ex = phi_fixed_r(model, n, r) if r <= n else 0.0
        out[f"K_{r}"] = _stat_entry(rows[:, r], ex, None, z)
    verdict = all(e["pass"] for e in out.values())
    return ReplicationSummary("mc_vs_exact", config.to_dict(), out, verdict=verdict,
                              extra={"variance_reference": v_label})


def normality_statistics(z, z_ad=None):
    """Skewness, excess kurtosis and Anderson-Darling statistic at the 1% level.

    ``z_ad``, if given, replaces ``z`` in the Anderson-Darling test (used for
    jittered lattice data, where ties inflate the statistic).
    """
    z = np.asarray(z, dtype=float)
    ad = stats.anderson(z if z_ad is None else np.asarray(z_ad, dtype=float), "norm")
    levels = list(ad.significance_level)
    crit = float(ad.critical_values[levels.index(1.0)])
    return {"skewness": float(stats.skew(z)), "excess_kurtosis": float(stats.kurtosis(z)),
            "anderson_darling": float(ad.statistic), "ad_critical_1pct": crit,
            "ad_pass": bool(ad.statistic < crit),
            "mean": float(np.mean(z)), "sd": float(np.std(z, ddof=1))}


def clt_experiment(config):
    """Standardize ``K_n`` by ``Phi(n)`` and ``V(n)`` and test normality."""
    if config.reps < 2:
        raise InsufficientReplicationsError("a normality check needs at least 2 replications")
    model = _model(config.model)
    n = int(config.n)
    V = var_poisson(model, n)
    if not V > 1e-12:
        raise DegenerateVarianceError(f"V({n}) = {V!r} is degenerate")
    mu = phi_poisson(model, n)
    params = {"n": n, "r_max": 0, "seed": config.seed}
    K = np.array(replicate(_fixed_stats, config.model, params, config.reps, config.workers))[:, 0]
    z = (K - mu) / math.sqrt(V)
    # K is integer valued: a uniform continuity jitter removes ties before the AD test
    jitter = stream(config.seed, JITTER_KEY).random(len(K)) - 0.5
    norm = normality_statistics(z, (K + jitter - mu) / math.sqrt(V))
    diag = diagnose_variance(model)
    label = "asserted" if diag.variance_diverges == HOLDS else "exploratory"
    tol = config.tolerances
    skew_max = tol.get("skewness", 0.15)
    kurt_max = tol.get("excess_kurtosis", 0.3)
    norm["skewness_pass"] = abs(norm["skewness"]) <= skew_max
    norm["kurtosis_pass"] = abs(norm["excess_kurtosis"]) <= kurt_max
    verdict = norm["ad_pass"] and norm["skewness_pass"] and norm["kurtosis_pass"]
    if label == "exploratory":
        verdict = True
    st = {"K": {"mean": float(np.mean(K)), "var": float(np.var(K, ddof=1)),
                "center": mu, "scale_var": V}}
    return ReplicationSummary("clt", config.to_dict(), st, norm, label, verdict,
                              extra={"diagnosis": diag.summary()})


def _checkpoints(config):
    if config.grid is not None:
        return [int(x) for x in config.grid]
    n = int(config.n)
    pts = []
    m = max(n, 1)
    while m >= 16:
        pts.append(m)
        m //= 2
    return sorted(pts)


def strong_law_trace(config):
    """Single trajectory of ``K_n``, ``K_{n,r}``, ``S_n`` and ``R_k`` at checkpoints."""
    model = _model(config.model)
    grid = _checkpoints(config)
    ids = _draw(model, grid[-1], stream(config.seed, 0))
    spec = model.rv
    proper = spec is not None and spec.regime == "proper"
    rows = []
    for n in grid:
        st = OccupancyState.from_draws(model, ids[:n])
        phi = phi_fixed(model, n)
        row = {"n": n, "K": st.K, "Phi_n": phi, "K_over_Phi": st.K / phi, "S": st.S,
               "E_S": model.sum_f(lambda p: p * np.exp(n * np.log1p(-p)), lambda q: 1.0,
                                  p_crit=1.0 / n)[0]}
        if proper:
            row["K_over_pred"] = st.K / predict_mean(spec, n, 0)
            for r in range(1, config.r_max + 1):
                row[f"K_{r}_over_pred"] = st.K_r(r) / predict_mean(spec, n, r)
            row["S_over_pred"] = st.S / predict_unseen(spec, n)
        rows.append(row)
    final = rows[-1]
    st = OccupancyState.from_draws(model, ids)
    R = 1 - np.cumsum(np.asarray(st.probs, dtype=np.longdouble))
    R = R.astype(float)
    ks = [2 ** i for i in range(int(math.log2(max(st.K, 1))) + 1)]
    if config.k is not None and config.k <= st.K and config.k not in ks:
        ks = sorted(ks + [int(config.k)])
    rk = []
    for k in ks:
        entry = {"k": k, "R_k": float(R[k - 1])}
        if proper:
            entry["R_over_pred"] = float(R[k - 1]) / predict_residual(spec, k)
        rk.append(entry)
    lo, hi = config.tolerances.get("band", (0.9, 1.1))
    verdict = lo <= final["K_over_Phi"] <= hi
    extra = {"residual_trace": rk, "band": [lo, hi]}
    return ReplicationSummary("trace", config.to_dict(), {"checkpoints": rows},
                              verdict=verdict, extra=extra)


def variance_scan(config):
    """Exact ``V(t)``, ``Phi_1(t)`` and ``Phi_2(t)`` on a grid, summarized per dyadic band."""
    model = _model(config.model)
    grid = [float(x) for x in (config.grid or np.geomspace(1, 2 ** 24, 97))]
    rows = []
    for t in grid:
        rows.append({"t": t, "V": var_poisson(model, t), "Phi_1": phi_poisson_r(model, t, 1),
                     "Phi_2": phi_poisson_r(model, t, 2)})
    bands = {}
    for row in rows:
        b = int(math.floor(math.log2(row["t"]))) if row["t"] > 0 else 0
        e = bands.setdefault(b, {})
        for key in ("V", "Phi_1", "Phi_2"):
            e[f"{key}_min"] = min(e.get(f"{key}_min", math.inf), row[key])
            e[f"{key}_max"] = max(e.get(f"{key}_max", -math.inf), row[key])
    extra = {"bands": bands}
    verdict = True
    tol = config.tolerances
    if "limit" in tol:
        dev = abs(rows[-1]["V"] - tol["limit"])
        extra["limit_deviation"] = dev
        verdict = dev <= tol.get("limit_tol", 0.05)
    try:
        diag = diagnose_variance(model)
        extra["diagnosis"] = diag.summary()
    except ParameterDomainError:
        pass
    return ReplicationSummary("scan_variance", config.to_dict(), {"grid": rows},
                              verdict=verdict, extra=extra)


def _gem_rep(model, params, rep):
    del model
    alpha, theta, n, inner, seed = (params[k] for k in ("alpha", "theta", "n", "inner", "seed"))
    real_seed = int(stream(seed, rep, 0).integers(0, 2 ** 62))
    m = realize_stick_breaking(theta, alpha, real_seed)
    norm = n ** alpha if alpha > 0 else math.log(n)
    return [run_fixed(m, n, stream(seed, rep, 1, j)).K / norm for j in range(inner)]


def _fixed_rep(model, params, rep):
    n, inner, seed, alpha = params["n"], params["inner"], params["seed"], params["alpha"]
    norm = n ** alpha if alpha > 0 else math.log(n)
    return [run_fixed(model, n, stream(seed, rep, 1, j)).K / norm for j in range(inner)]


def power_law_experiment(config):
    """Cross-realization versus within-realization spread of ``K_n / n**alpha``.

    For a ``gem:`` literal each replication realizes fresh frequencies; any
    other literal keeps the frequencies fixed, so only sampling noise remains.
    """
    from .literals import _split
    family, args = _split(config.model)
    n = int(config.n)
    inner = int(config.inner_reps)
    if family == "gem":
        alpha = float(args.get("alpha", 0.0))
        params = {"alpha": alpha, "theta": float(args.get("theta", 0.0)), "n": n,
                  "inner": inner, "seed": config.seed}
        fn = _gem_rep
        lit = "geometric:q=0.5"  # placeholder; realizations are built per replication
    else:
        model = _model(config.model)
        alpha = model.rv.alpha if model.rv is not None else 0.0
        params = {"alpha": alpha, "n": n, "inner": inner, "seed": config.seed}
        fn = _fixed_rep
        lit = config.model
    D = np.array(replicate(fn, lit, params, config.reps, config.workers))
    means = D.mean(axis=1)
    within = float(np.mean(D.var(axis=1, ddof=1))) if inner > 1 else 0.0
    cross = float(np.var(means, ddof=1)) if config.reps > 1 else 0.0
    ratio = cross / within if within > 0 else math.inf
    extra = {"D_hat_per_realization": means.tolist(), "cross_var": cross,
             "within_var": within, "ratio": ratio}
    verdict = True
    if family == "gem" and config.reps > 1:
        verdict = ratio > config.tolerances.get("dominance", 2.0)
    st = {"D_hat": {"mean": float(means.mean()), "grand_var": float(D.var(ddof=1))}}
    if family != "gem" and model.rv is not None and model.rv.regime == "proper":
        st["D_hat"]["limit"] = predict_mean(model.rv, 1.0, 0)
    return ReplicationSummary("power_law", config.to_dict(), st, verdict=verdict, extra=extra)


RUNNERS = {"mc_vs_exact": mc_vs_exact, "clt": clt_experiment, "trace": strong_law_trace,
           "scan_variance": variance_scan, "power_law": power_law_experiment}


def run_experiment(config):
    return RUNNERS[config.kind](config)


def singleton_ratios(literal, n, reps, seed, workers=1, r_max=2):
    """Per-replication ``K_{n,r}/K_n`` for ``r <= r_max``."""
    params = {"n": int(n), "r_max": r_max, "seed": seed}
    rows = np.array(replicate(_fixed_stats, literal, params, reps, workers), dtype=float)
    return rows[:, 1:] / rows[:, :1]


def residual_after_discovery(literal, k, reps, seed, workers=1):
    """Per-replication ``R_k`` from independent discovery runs."""
    return replicate(_residual_rep, literal, {"k": int(k), "seed": seed}, reps, workers)


def _residual_rep(model, params, rep):
    from .sampler import discovery_process
    return float(discovery_process(model, params["k"], stream(params["seed"], rep)).R[-1])


def ratio_targets(alpha, r_max=2):
    return [ratio_limit(alpha, r) for r in range(1, r_max + 1)]
