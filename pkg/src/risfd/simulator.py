"""Monte-Carlo simulation of the training phase and NMSE sweeps.

The simulator evaluates the physical receive equation instant by instant —
reflected path through the noisy RIS, distorted transmit pilots, power-tracking
receiver distortion, thermal noise — and never reuses the estimator-side
moment formulas, so closed form and simulation stay independent routes.

Reproducibility: every trial derives its generator from
SeedSequence((master_seed, kind, scheme, hardware, point, trial)), so results
are bit-identical for a given config regardless of worker count or execution
order, and any single trial can be replayed in isolation.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    Geometry,
    SystemDims,
    complex_normal,
    sample_channels,
    stack_channels,
)
from .error_stats import aggregate_error_stats
from .estimators import expected_hi_estimate, hi_estimate, ls_estimate
from .impairments import (
    ImpairmentProfile,
    receiver_distortion_cov,
    received_covariance,
    sample_phase_offsets,
    sample_tx_distortion,
)
from .training import build_plan, equalize_energy

__all__ = [
    "SimConfig",
    "TrialRecord",
    "PointStats",
    "CurveResult",
    "SweepResult",
    "BiasReport",
    "simulate_training_rx",
    "nmse",
    "run_trial",
    "run_sweep",
    "measure_estimator_bias",
    "block_averaged_rx_cov",
    "SWEEP_KINDS",
]

SWEEP_KINDS = ("snr", "kappa", "n")
_KIND_CODE = {"snr": 1, "kappa": 2, "n": 3, "bias": 4}
_HW_CODE = {"impaired": 0, "ideal": 1}


@dataclass(frozen=True)
class SimConfig:
    """Full description of a simulation study (see config.load_config)."""

    m: int = 3
    k: int = 2
    n: int = 8
    scheme: int = 1
    trials: int = 2000
    master_seed: int = 1
    geometry: Geometry = field(default_factory=Geometry.reference)
    kappa_ris: float = 4.0
    sigma2_ta: float = 0.1
    sigma2_tu: float = 0.1
    sigma2_ra: float = 0.1
    p_ref: float = 1.0
    snr_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    sweep_snr_db: float = 20.0
    kappa_grid: tuple = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0)
    n_grid: tuple = (4, 8, 16)
    energy_reference_scheme: int = 1
    t_override: int | None = None
    gamma_variant: str = "exact"
    mse_variant: str = "centered"
    ris_offsets: str = "per_instant"
    oracle_draws: int = 50000
    oracle_trials: int = 2000

    def __post_init__(self):
        if not 1 <= self.k <= self.m:
            raise ValueError(f"need 1 <= k <= m, got k={self.k}, m={self.m}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.scheme not in (1, 2, 3) or self.energy_reference_scheme not in (1, 2, 3):
            raise ValueError("scheme must be 1, 2 or 3")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.p_ref <= 0:
            raise ValueError("p_ref must be positive")
        for name in ("snr_db", "kappa_grid", "n_grid"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must not be empty")
        if min(self.kappa_grid) < 0:
            raise ValueError("kappa_grid entries must be >= 0")
        if min(self.n_grid) < 1:
            raise ValueError("n_grid entries must be >= 1")
        if self.gamma_variant not in ("exact", "symmetrized"):
            # "literal" produces a non-Hermitian matrix and cannot drive a
            # distortion covariance; it stays available on received_covariance
            # for side-by-side reporting only.
            raise ValueError(
                f"gamma_variant must be 'exact' or 'symmetrized', got {self.gamma_variant!r}"
            )
        if self.mse_variant not in ("centered", "moment"):
            raise ValueError(f"unknown mse_variant {self.mse_variant!r}")
        if self.ris_offsets not in ("per_instant", "per_block"):
            raise ValueError(f"unknown ris_offsets {self.ris_offsets!r}")
        if self.t_override is not None:
            blocks = self.n + 1
            if self.t_override % blocks:
                raise ValueError(
                    f"t = {self.t_override} is not a multiple of n + 1 = {blocks}"
                )
            expected = self.scheme_l(self.scheme) * blocks
            if self.t_override != expected:
                raise ValueError(
                    f"t = {self.t_override} does not match scheme {self.scheme} "
                    f"(needs {expected} = l * (n + 1))"
                )

    def scheme_l(self, scheme):
        return 2 * self.m if scheme in (1, 2) else self.m + self.k

    @property
    def dims(self):
        return SystemDims(self.m, self.k, self.n)

    def profile(self, kappa=None, ideal=False):
        if ideal:
            return ImpairmentProfile.ideal()
        return ImpairmentProfile(
            kappa_ris=self.kappa_ris if kappa is None else kappa,
            sigma2_ta=self.sigma2_ta,
            sigma2_tu=self.sigma2_tu,
            sigma2_ra=self.sigma2_ra,
        )


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: tuple
    nmse_ls: float | None
    nmse_hi: float | None
    path_ls: str | None
    path_hi: str | None
    fault: str | None = None

    @property
    def ok(self):
        return self.fault is None


@dataclass(frozen=True)
class PointStats:
    value: float
    nmse_ls: float
    nmse_ls_se: float
    nmse_hi: float
    nmse_hi_se: float
    trials: int
    faulted: int


@dataclass
class CurveResult:
    scheme: int
    hardware: str
    points: list
    records: list  # list (per point) of lists of TrialRecord


@dataclass
class SweepResult:
    kind: str
    master_seed: int
    curves: list
    config_hash: str = ""

    def curve(self, scheme, hardware="impaired"):
        for c in self.curves:
            if c.scheme == scheme and c.hardware == hardware:
                return c
        raise KeyError(f"no curve for scheme={scheme}, hardware={hardware}")


@dataclass(frozen=True)
class _PointContext:
    """Everything one grid point needs, shareable across workers."""

    stream: tuple  # (master_seed, kind, scheme, hw, point)
    value: float
    dims: SystemDims
    geometry: Geometry
    profile: ImpairmentProfile
    plan: object
    stats: object
    sigma2: float
    gamma_variant: str
    offsets_per_block: bool


def simulate_training_rx(
    ch, plan, profile, sigma2, rng, *, gamma_variant="exact", offsets_per_block=False
):
    """Received pilot block (t, m) with all impairments and thermal noise.

    Draw order is fixed (phase offsets, AP distortion, UE distortion,
    receiver-distortion normals, thermal noise) and independent of which
    severities are zero, so a given generator state always yields aligned
    randomness across impairment settings.
    """
    dims = plan.dims
    tt, m, k, n = plan.t, dims.m, dims.k, dims.n
    if offsets_per_block:
        per_block = sample_phase_offsets(profile.kappa_ris, (n + 1, n), rng)
        theta = np.repeat(per_block, plan.l, axis=0)
    else:
        theta = sample_phase_offsets(profile.kappa_ris, (tt, n), rng)
    d_ta = sample_tx_distortion(profile.sigma2_ta * plan.p_a, (tt, m), rng)
    d_tu = sample_tx_distortion(profile.sigma2_tu * plan.p_u, (tt, k), rng)
    rx_unit = complex_normal(rng, (tt, m), 1.0)
    noise = complex_normal(rng, (tt, m), sigma2)

    xa = plan.ap_pilots + d_ta
    xu = plan.ue_pilots + d_tu
    refl = plan.ris_per_t * np.exp(1j * theta)
    into_ris = xa @ ch.h_ar.T + xu @ ch.h_ur.T
    y = xa @ ch.g_a.T + xu @ ch.h_ua.T + (refl * into_ris) @ ch.h_ra.T
    if profile.sigma2_ra > 0:
        stds = np.empty((n + 1, m))
        for b in range(n + 1):
            gamma = received_covariance(
                ch, plan.phi_blocks[b], plan.p_a, plan.p_u, profile, gamma_variant
            )
            stds[b] = np.sqrt(np.diag(receiver_distortion_cov(gamma, profile.sigma2_ra)).real)
        y = y + rx_unit * np.repeat(stds, plan.l, axis=0)
    return y + noise


def block_averaged_rx_cov(ch, plan, profile, gamma_variant="exact"):
    """Receiver-distortion covariance averaged over the RIS schedule blocks."""
    acc = np.zeros((plan.dims.m, plan.dims.m), dtype=complex)
    for b in range(plan.dims.n + 1):
        gamma = received_covariance(
            ch, plan.phi_blocks[b], plan.p_a, plan.p_u, profile, gamma_variant
        )
        acc += receiver_distortion_cov(gamma, profile.sigma2_ra)
    return acc / (plan.dims.n + 1)


def nmse(h, h_hat):
    """||h_hat - h||^2 / ||h||^2."""
    denom = float(np.sum(np.abs(h) ** 2))
    if denom == 0:
        raise ValueError("true parameter vector has zero norm")
    return float(np.sum(np.abs(h_hat - h) ** 2)) / denom


def run_trial(ctx, trial):
    """One independent trial: fresh channels, one training phase, both estimates."""
    seed = ctx.stream + (trial,)
    root = np.random.SeedSequence(seed)
    ch_seq, rx_seq = root.spawn(2)
    ch = sample_channels(ctx.dims, ctx.geometry, np.random.default_rng(ch_seq))
    h = stack_channels(ch)
    rx = simulate_training_rx(
        ch,
        ctx.plan,
        ctx.profile,
        ctx.sigma2,
        np.random.default_rng(rx_seq),
        gamma_variant=ctx.gamma_variant,
        offsets_per_block=ctx.offsets_per_block,
    )
    try:
        res_ls = ls_estimate(ctx.plan, rx)
        res_hi = hi_estimate(ctx.plan, ctx.stats, rx)
    except np.linalg.LinAlgError as exc:
        return TrialRecord(trial, seed, None, None, None, None, fault=str(exc))
    return TrialRecord(
        trial,
        seed,
        nmse(h, res_ls.h_hat),
        nmse(h, res_hi.h_hat),
        res_ls.solver_path,
        res_hi.solver_path,
    )


def _trial_batch(ctx, trials):
    return [run_trial(ctx, t) for t in trials]


def _snr_to_sigma2(cfg, snr_db):
    return cfg.p_ref / 10.0 ** (snr_db / 10.0)


def _equalized_plan(cfg, dims, scheme):
    """Plan for ``scheme`` with pilot energies matched to the reference scheme."""
    if scheme == cfg.energy_reference_scheme:
        return build_plan(dims, scheme, cfg.p_ref, cfg.p_ref)
    reference = build_plan(dims, cfg.energy_reference_scheme, cfg.p_ref, cfg.p_ref)
    candidate = build_plan(dims, scheme, 1.0, 1.0)
    p_a, p_u = equalize_energy(reference, candidate)
    return build_plan(dims, scheme, p_a, p_u)


def _contexts(cfg, kind):
    """Grid of (scheme, hardware, point) contexts for one sweep kind."""
    out = []
    code = _KIND_CODE[kind]
    if kind == "snr":
        plan = _equalized_plan(cfg, cfg.dims, cfg.scheme)
        profile = cfg.profile()
        stats = aggregate_error_stats(plan, profile)
        for idx, snr in enumerate(cfg.snr_db):
            out.append(
                _PointContext(
                    stream=(cfg.master_seed, code, cfg.scheme, _HW_CODE["impaired"], idx),
                    value=float(snr),
                    dims=cfg.dims,
                    geometry=cfg.geometry,
                    profile=profile,
                    plan=plan,
                    stats=stats,
                    sigma2=_snr_to_sigma2(cfg, snr),
                    gamma_variant=cfg.gamma_variant,
                    offsets_per_block=cfg.ris_offsets == "per_block",
                )
            )
    elif kind == "kappa":
        plan = _equalized_plan(cfg, cfg.dims, cfg.scheme)
        sigma2 = _snr_to_sigma2(cfg, cfg.sweep_snr_db)
        for idx, kappa in enumerate(cfg.kappa_grid):
            profile = cfg.profile(kappa=kappa)
            out.append(
                _PointContext(
                    stream=(cfg.master_seed, code, cfg.scheme, _HW_CODE["impaired"], idx),
                    value=float(kappa),
                    dims=cfg.dims,
                    geometry=cfg.geometry,
                    profile=profile,
                    plan=plan,
                    stats=aggregate_error_stats(plan, profile),
                    sigma2=sigma2,
                    gamma_variant=cfg.gamma_variant,
                    offsets_per_block=cfg.ris_offsets == "per_block",
                )
            )
    elif kind == "n":
        if cfg.t_override is not None:
            raise ValueError("t override cannot be combined with an n sweep")
        sigma2 = _snr_to_sigma2(cfg, cfg.sweep_snr_db)
        for scheme in (1, 2, 3):
            for hardware in ("impaired", "ideal"):
                profile = cfg.profile(ideal=hardware == "ideal")
                for idx, n in enumerate(cfg.n_grid):
                    dims = SystemDims(cfg.m, cfg.k, int(n))
                    plan = _equalized_plan(cfg, dims, scheme)
                    out.append(
                        _PointContext(
                            stream=(cfg.master_seed, code, scheme, _HW_CODE[hardware], idx),
                            value=float(n),
                            dims=dims,
                            geometry=cfg.geometry,
                            profile=profile,
                            plan=plan,
                            stats=aggregate_error_stats(plan, profile),
                            sigma2=sigma2,
                            gamma_variant=cfg.gamma_variant,
                            offsets_per_block=cfg.ris_offsets == "per_block",
                        )
                    )
    else:
        raise ValueError(f"unknown sweep kind {kind!r}, expected one of {SWEEP_KINDS}")
    return out


def _aggregate(value, records):
    good_ls = np.array([r.nmse_ls for r in records if r.ok])
    good_hi = np.array([r.nmse_hi for r in records if r.ok])
    n_ok = len(good_ls)
    if n_ok == 0:
        raise RuntimeError(f"every trial faulted at point {value}")

    def mean_se(x):
        mean = float(x.mean())
        se = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
        return mean, se

    m_ls, se_ls = mean_se(good_ls)
    m_hi, se_hi = mean_se(good_hi)
    return PointStats(
        value=value,
        nmse_ls=m_ls,
        nmse_ls_se=se_ls,
        nmse_hi=m_hi,
        nmse_hi_se=se_hi,
        trials=len(records),  # attempted; means run over trials - faulted
        faulted=len(records) - n_ok,
    )


def run_sweep(cfg, kind, workers=1, trials=None, config_hash=""):
    """Run a full sweep; results are independent of ``workers``.

    ``trials`` optionally overrides cfg.trials (used by quick looks and tests).
    """
    if kind not in SWEEP_KINDS:
        raise ValueError(f"unknown sweep kind {kind!r}, expected one of {SWEEP_KINDS}")
    trials = cfg.trials if trials is None else trials
    contexts = _contexts(cfg, kind)
    per_point = []
    if workers is None or workers < 1:
        raise ValueError("workers must be a positive integer")
    if workers == 1:
        for ctx in contexts:
            per_point.append(_trial_batch(ctx, range(trials)))
    else:
        chunk = max(1, math.ceil(trials / (4 * workers)))
        jobs = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for ci, ctx in enumerate(contexts):
                for start in range(0, trials, chunk):
                    idx = range(start, min(start + chunk, trials))
                    jobs.append((ci, start, pool.submit(_trial_batch, ctx, idx)))
            chunks = {}
            for ci, start, fut in jobs:
                chunks.setdefault(ci, []).append((start, fut.result()))
        for ci in range(len(contexts)):
            records = []
            for _, batch in sorted(chunks[ci]):
                records.extend(batch)
            per_point.append(records)

    by_curve = {}
    for ctx, records in zip(contexts, per_point):
        key = (ctx.stream[2], ctx.stream[3])  # (scheme, hw code)
        by_curve.setdefault(key, []).append((ctx, records))
    curves = []
    for (scheme, hw), entries in by_curve.items():
        hardware = "ideal" if hw == _HW_CODE["ideal"] else "impaired"
        points = [_aggregate(ctx.value, recs) for ctx, recs in entries]
        curves.append(
            CurveResult(
                scheme=scheme,
                hardware=hardware,
                points=points,
                records=[recs for _, recs in entries],
            )
        )
    return SweepResult(
        kind=kind, master_seed=cfg.master_seed, curves=curves, config_hash=config_hash
    )


@dataclass(frozen=True)
class BiasReport:
    """Empirical estimator bias for one fixed channel realization."""

    trials: int
    rel_bias_ls: float
    rel_bias_hi: float
    rel_bias_hi_predicted: float
    mc_rel_3sigma: float
    mse_ls_emp: float
    mse_hi_emp: float

    def describe(self):
        return "\n".join(
            [
                f"trials                    = {self.trials}",
                f"|mean(h_ls) - h| / |h|    = {self.rel_bias_ls:.6e}",
                f"|mean(h_hi) - h| / |h|    = {self.rel_bias_hi:.6e}",
                f"predicted HI-aware bias   = {self.rel_bias_hi_predicted:.6e}",
                f"3-sigma MC resolution     = {self.mc_rel_3sigma:.6e}",
                f"empirical MSE (plain LS)  = {self.mse_ls_emp:.6e}",
                f"empirical MSE (HI-aware)  = {self.mse_hi_emp:.6e}",
            ]
        )


def measure_estimator_bias(
    ch, plan, profile, sigma2, trials, seed, *, gamma_variant="exact", offsets_per_block=False
):
    """Hold the channel fixed and average both estimators over many draws.

    Reports ||mean(h_hat) - h|| / ||h|| for each estimator, the closed-form
    prediction for the HI-aware one, and a 3-sigma Monte-Carlo resolution
    bound so "bias below MC noise" is distinguishable from measured bias.
    """
    stats = aggregate_error_stats(plan, profile)
    h = stack_channels(ch)
    norm_h = math.sqrt(float(np.sum(np.abs(h) ** 2)))
    root = np.random.SeedSequence((seed, _KIND_CODE["bias"]))
    sum_ls = np.zeros_like(h)
    sum_hi = np.zeros_like(h)
    sq_ls = 0.0
    sq_hi = 0.0
    for seq in root.spawn(trials):
        rx = simulate_training_rx(
            ch,
            plan,
            profile,
            sigma2,
            np.random.default_rng(seq),
            gamma_variant=gamma_variant,
            offsets_per_block=offsets_per_block,
        )
        e_ls = ls_estimate(plan, rx).h_hat
        e_hi = hi_estimate(plan, stats, rx).h_hat
        sum_ls += e_ls
        sum_hi += e_hi
        sq_ls += float(np.sum(np.abs(e_ls - h) ** 2))
        sq_hi += float(np.sum(np.abs(e_hi - h) ** 2))
    mean_ls = sum_ls / trials
    mean_hi = sum_hi / trials
    predicted = expected_hi_estimate(plan, stats, h)
    # mean of `trials` i.i.d. vectors: ||mean - E|| has rms ~ sqrt(tr(cov)/trials)
    mc_rel = 3.0 * math.sqrt(sq_hi / trials / trials) / norm_h
    return BiasReport(
        trials=trials,
        rel_bias_ls=float(np.linalg.norm(mean_ls - h)) / norm_h,
        rel_bias_hi=float(np.linalg.norm(mean_hi - h)) / norm_h,
        rel_bias_hi_predicted=float(np.linalg.norm(predicted - h)) / norm_h,
        mc_rel_3sigma=mc_rel,
        mse_ls_emp=sq_ls / trials,
        mse_hi_emp=sq_hi / trials,
    )
