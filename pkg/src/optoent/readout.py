"""Second (readout) cavity on the back of the mirror, and the simulated experiment.

The extended state is ``(dq, dp, dX, dY, dX2, dY2)``. For a linear system
driven by Gaussian white noise, a classical ensemble whose increments have
covariance D dt reproduces the symmetrized quantum second moments, so Euler-
Maruyama trajectories stand in for repeated homodyne runs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constants import HBAR
from .entanglement import EntanglementReport, entanglement_report, log_negativity
from .errors import ConfigError, RegimeViolation, StepTooLarge, UnphysicalState, UnstableSystem
from .kernels import get_kernel
from .lyapunov import CovarianceMatrix, check_physicality, solve_lyapunov, symplectic_eigenvalues

BATCH = 8
CHUNK = 4096
REGIME_RATIO = 10.0
BACK_ACTION_RATIO = 0.01


@dataclass(frozen=True)
class ReadoutParams:
    kappa2: float
    delta2: float
    alpha2: float
    G2: float
    wm: float
    alpha_s: float = math.nan
    length2: float = math.nan
    wc2: float = math.nan

    @classmethod
    def from_geometry(cls, kappa2, delta2, alpha2, length2, wc2, mass, wm, alpha_s=math.nan):
        g2 = (wc2 / length2) * math.sqrt(HBAR / (mass * wm))
        return cls(kappa2=kappa2, delta2=delta2, alpha2=alpha2, G2=g2, wm=wm,
                   alpha_s=alpha_s, length2=length2, wc2=wc2)

    @property
    def readout_rate(self) -> float:
        """G₂α₂/√2, the mirror-to-cavity-2 rate in the rotating frame."""
        return self.G2 * abs(self.alpha2) / math.sqrt(2)

    @property
    def rwa_ok(self) -> bool:
        return abs(self.delta2 - self.wm) <= 1e-9 * self.wm

    def regime_failures(self) -> list[str]:
        out = []
        if not self.rwa_ok:
            out.append(f"Δ₂ = w_m required (Δ₂/w_m = {self.delta2 / self.wm:.6g})")
        if not self.wm >= REGIME_RATIO * self.kappa2:
            out.append(f"w_m >> κ₂ violated (w_m/κ₂ = {self.wm / self.kappa2:.3g} < {REGIME_RATIO:g})")
        rate = self.readout_rate
        if not self.kappa2 >= REGIME_RATIO * rate:
            ratio = math.inf if rate == 0 else self.kappa2 / rate
            out.append(f"κ₂ >> G₂α₂/√2 violated (ratio {ratio:.3g} < {REGIME_RATIO:g})")
        return out

    @property
    def adiabatic_ok(self) -> bool:
        return not self.regime_failures()

    @property
    def back_action_negligible(self) -> bool:
        return abs(self.alpha2) <= BACK_ACTION_RATIO * abs(self.alpha_s)


def make_readout(d, p, kappa2=None, delta2=None, alpha2=None, length2=None, wc2=None) -> ReadoutParams:
    """Readout cavity with defaults κ₂ = w_m/20, Δ₂ = w_m, G₂α₂/√2 = κ₂/20, L₂ = L, w_c2 = w_c."""
    kappa2 = d.wm / 20 if kappa2 is None else kappa2
    delta2 = d.wm if delta2 is None else delta2
    length2 = p.cavity_length if length2 is None else length2
    wc2 = d.wc if wc2 is None else wc2
    r = ReadoutParams.from_geometry(kappa2, delta2, 0.0, length2, wc2, p.mass, d.wm, alpha_s=d.alpha_s)
    if alpha2 is None:
        alpha2 = math.sqrt(2) * (kappa2 / 20) / r.G2
    return ReadoutParams(kappa2=kappa2, delta2=delta2, alpha2=alpha2, G2=r.G2, wm=d.wm,
                         alpha_s=d.alpha_s, length2=length2, wc2=wc2)


@dataclass(frozen=True, eq=False)
class ExtendedModel:
    drift: np.ndarray
    diffusion: np.ndarray
    back_action: bool = False
    rate_scale: float = math.nan

    def __post_init__(self):
        a = np.array(self.drift, dtype=float)
        d = np.array(self.diffusion, dtype=float)
        if a.shape != d.shape or a.shape[0] != a.shape[1]:
            raise ValueError("drift and diffusion must be square and of equal shape")
        a.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "drift", a)
        object.__setattr__(self, "diffusion", d)
        if math.isnan(self.rate_scale):
            object.__setattr__(self, "rate_scale", float(np.max(np.abs(a))))

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    def relaxation_time(self) -> float:
        return 1.0 / -float(np.max(np.linalg.eigvals(self.drift).real))


def build_extended(d, r: ReadoutParams, back_action: bool = False) -> ExtendedModel:
    a = np.zeros((6, 6))
    a[:4, :4] = d.drift
    g2 = r.G2 * r.alpha2 * math.sqrt(2)
    a[4, 4] = a[5, 5] = -r.kappa2
    a[4, 5] = r.delta2
    a[5, 4] = -r.delta2
    a[5, 0] = g2
    if back_action:
        a[1, 4] = g2
    diff = np.diag(list(np.diag(d.diffusion)) + [r.kappa2, r.kappa2])
    scale = max(d.wm, d.kappa, r.kappa2, abs(d.delta))
    return ExtendedModel(a, diff, back_action=back_action, rate_scale=scale)


def back_action_shift(d, r: ReadoutParams) -> tuple[float, float]:
    """(E_N of the 4x4 model, E_N of the mirror+cavity block of the 6x6 model with back-action)."""
    margin = d.stability_margin
    v4 = solve_lyapunov(d.drift, d.diffusion, margin=margin)
    ext = build_extended(d, r, back_action=True)
    v6 = solve_lyapunov(ext.drift, ext.diffusion, margin=margin)
    return log_negativity(v4), log_negativity(v6.reduced(4))


def adiabatic_output_gain(r: ReadoutParams) -> float:
    """g = G₂α₂/√κ₂ in a₂ᵒᵘᵗ = i g δb̃ + a₂ⁱⁿ; raises RegimeViolation outside RWA/adiabatic regime."""
    failures = r.regime_failures()
    if failures:
        raise RegimeViolation("; ".join(failures))
    return r.G2 * r.alpha2 / math.sqrt(r.kappa2)


def predicted_output_variance(r: ReadoutParams, mirror_variance: float) -> float:
    """Variance of the readout quadrature carrying δq̃ in the frame rotating at w_m.

    The output is normalised over the cavity response time 1/(2κ₂), which is
    the rotating-frame intracavity quadrature: g²/(2κ₂)·⟨δq̃²⟩ + 1/2.
    """
    g = adiabatic_output_gain(r)
    return g * g / (2 * r.kappa2) * mirror_variance + 0.5


def rotating_frame(x, y, t, wm):
    """(X̃, Ỹ) with X̃ + iỸ = (X + iY)·exp(i w_m t)."""
    c, s = np.cos(wm * t), np.sin(wm * t)
    return x * c - y * s, x * s + y * c


@dataclass(frozen=True)
class TrajectoryConfig:
    dt: float
    burn_in: float
    sample_time: float
    n_traj: int
    seed: int = 0
    richardson: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("dt must be > 0")
        if self.burn_in < 0 or not self.sample_time > 0:
            raise ConfigError("burn_in must be >= 0 and sample_time > 0")
        if int(self.n_traj) != self.n_traj or self.n_traj < 2:
            raise ConfigError("n_traj must be an integer >= 2 (standard errors need an ensemble)")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def largest_step(self) -> float:
        """The coarse companion path of a Richardson run steps at 2·dt."""
        return 2 * self.dt if self.richardson else self.dt

    def validate_for(self, m: ExtendedModel) -> None:
        ev = np.linalg.eigvals(m.drift)
        top = float(np.max(ev.real))
        if top >= -1e-6 * m.rate_scale:
            raise UnstableSystem(f"extended drift not Hurwitz (max Re eig = {top:.6g})")
        h = self.largest_step
        if h > 0.01 / m.rate_scale * (1 + 1e-12):
            raise StepTooLarge(f"step {h:.3g} exceeds 0.01/max rate = {0.01 / m.rate_scale:.3g}")
        if float(np.max(np.abs(ev))) * h > 0.1:
            raise StepTooLarge("max |eigenvalue| * step exceeds 0.1")
        relax = 1.0 / -top
        if self.sample_time < 50 * relax * (1 - 1e-12):
            raise ConfigError(
                f"sample_time {self.sample_time:.3g} shorter than 50 relaxation times ({50 * relax:.3g})"
            )


def default_trajectory_config(m: ExtendedModel, n_traj: int = 32, seed: int = 0,
                              relaxations: float = 400.0) -> TrajectoryConfig:
    """Richardson-extrapolated run whose coarse path sits at the largest allowed step.

    Plain Euler-Maruyama shifts stationary moments by O(dt·rate). For the
    strongly coupled mirror that shift exceeds the ensemble standard error
    on the small cross-correlations unless dt is cut far below the limit;
    extrapolation removes it at 1.5x the cost of one pass.
    """
    relax = m.relaxation_time()
    fastest = float(np.max(np.abs(np.linalg.eigvals(m.drift))))
    dt = min(0.005 / m.rate_scale, 0.05 / fastest) / 2
    return TrajectoryConfig(dt=dt, burn_in=10 * relax, sample_time=relaxations * relax,
                            n_traj=n_traj, seed=seed, richardson=True)


def trajectory_seeds(master_seed: int, n_traj: int) -> list[int]:
    """Per-trajectory 64-bit seeds derived from (master_seed, index)."""
    return [
        int(np.random.SeedSequence(entropy=int(master_seed), spawn_key=(i,)).generate_state(1, np.uint64)[0])
        for i in range(n_traj)
    ]


@dataclass(frozen=True, eq=False)
class CMEstimate:
    V: CovarianceMatrix
    stderr: np.ndarray
    n_traj: int
    seeds: list = field(default_factory=list)
    backend: str = ""
    per_trajectory: np.ndarray | None = field(default=None, repr=False)
    records: np.ndarray | None = field(default=None, repr=False)
    record_times: np.ndarray | None = field(default=None, repr=False)


def _sym(acc):
    acc = np.triu(acc)
    return acc + np.triu(acc, 1).transpose(0, 2, 1)


def _run_batch(kernel, a, scale, dt, seeds, n_burn, n_sample, stride, richardson=False):
    nb, n = len(seeds), a.shape[0]
    rngs = [np.random.default_rng(s) for s in seeds]
    u = np.zeros((nb, n))
    acc = np.zeros((nb, n, n))
    if richardson:
        # coarse path at 2·dt driven by the summed fine increments (n_burn, n_sample, CHUNK even)
        u2 = np.zeros((nb, n))
        acc2 = np.zeros((nb, n, n))
        scale2 = scale * math.sqrt(2)
        empty = np.zeros((nb, 0, n))
    total = n_burn + n_sample
    kept = []
    done = 0
    while done < total:
        steps = min(CHUNK, total - done)
        noise = np.stack([g.standard_normal((steps, n)) for g in rngs])
        if richardson:
            coarse = np.ascontiguousarray((noise[:, 0::2] + noise[:, 1::2]) * math.sqrt(0.5))
            kernel(a, scale2, 2 * dt, u2, coarse, acc2, (n_burn - done) // 2, empty, 0)
        if stride:
            buf = np.zeros((nb, steps // stride, n))
            kernel(a, scale, dt, u, noise, acc, n_burn - done, buf, stride)
            # chunks start at multiples of CHUNK, so buf[:, r] is global step done + (r+1)*stride
            first = max(0, (n_burn - done) // stride)
            kept.append(buf[:, first:])
        else:
            kernel(a, scale, dt, u, noise, acc, n_burn - done, np.zeros((nb, 0, n)), 0)
        done += steps
    records = np.concatenate(kept, axis=1) if stride else None
    v = _sym(acc) / n_sample
    if richardson:
        v = 2 * v - _sym(acc2) / (n_sample // 2)
    return v, records


def _record_steps(n_burn, n_sample, stride):
    """Global step counts (1-based) at which states are recorded."""
    g = np.arange(stride, n_burn + n_sample + 1, stride)
    return g[g > n_burn]


def simulate_trajectories(m: ExtendedModel, c: TrajectoryConfig, *, jobs: int = 1, backend: str | None = None,
                          keep: int = 4, record_stride: int = 0) -> CMEstimate:
    """Euler-Maruyama ensemble estimate of the stationary CM over the first ``keep`` variables.

    Each trajectory starts at 0, is integrated for ``burn_in``, then its
    second moments are time-averaged over ``sample_time``. With
    ``c.richardson`` each trajectory also runs a coupled path at 2·dt on the
    same Brownian motion and reports 2·V(dt) − V(2dt). ``V̂`` is the
    ensemble mean and ``stderr`` the standard error over trajectories.
    Batches of trajectories are fixed in size, so results do not depend on
    ``jobs``.
    """
    c.validate_for(m)
    if record_stride and CHUNK % record_stride:
        raise ConfigError(f"record_stride must divide {CHUNK}")
    name, kernel = get_kernel(backend)
    a = np.ascontiguousarray(m.drift)
    scale = np.ascontiguousarray(np.sqrt(np.diag(m.diffusion) * c.dt))
    n_burn = int(math.ceil(c.burn_in / c.dt))
    n_sample = int(math.ceil(c.sample_time / c.dt))
    if c.richardson:
        n_burn += n_burn % 2
        n_sample += n_sample % 2
    seeds = trajectory_seeds(c.seed, c.n_traj)
    batches = [seeds[i:i + BATCH] for i in range(0, len(seeds), BATCH)]

    def work(batch):
        return _run_batch(kernel, a, scale, c.dt, batch, n_burn, n_sample, record_stride, c.richardson)

    if jobs > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, batches))
    else:
        results = [work(b) for b in batches]

    per_traj = np.concatenate([r[0] for r in results])
    v_full = per_traj.mean(axis=0)
    se_full = per_traj.std(axis=0, ddof=1) / math.sqrt(c.n_traj)
    records = times = None
    if record_stride:
        records = np.concatenate([r[1] for r in results])
        times = _record_steps(n_burn, n_sample, record_stride) * c.dt
    return CMEstimate(
        V=CovarianceMatrix(v_full[:keep, :keep]),
        stderr=se_full[:keep, :keep],
        n_traj=c.n_traj,
        seeds=seeds,
        backend=name,
        per_trajectory=per_traj,
        records=records,
        record_times=times,
    )


@dataclass(frozen=True)
class Reconstruction:
    report: EntanglementReport
    log_neg_sigma: float
    min_symplectic: float
    min_symplectic_sigma: float
    n_resamples: int


def _resample(v, se, rng):
    z = rng.standard_normal(v.shape)
    z = np.triu(z) + np.triu(z, 1).T
    return v + z * se


RESAMPLING_METHODS = ("auto", "bootstrap", "entries")


def reconstruct_entanglement(est: CMEstimate, n_resamples: int = 200, seed: int = 0,
                             method: str = "auto") -> Reconstruction:
    """E_N of V̂ with an uncertainty from resampling.

    ``"bootstrap"`` resamples whole trajectories, which keeps the
    correlations between CM entries. ``"entries"`` perturbs each entry
    independently within its standard error; the entries of a thermal mirror
    CM are strongly correlated, so this overstates the spread of E_N by up to
    two orders of magnitude. ``"auto"`` bootstraps when per-trajectory
    moments are present.
    """
    if method not in RESAMPLING_METHODS:
        raise ConfigError(f"unknown resampling method {method!r}; choose from {RESAMPLING_METHODS}")
    if method == "bootstrap" and est.per_trajectory is None:
        raise ConfigError("bootstrap resampling needs per-trajectory moments")
    v = est.V.matrix
    k = v.shape[0]
    rng = np.random.default_rng(seed)
    _, nu = check_physicality(v)
    if method != "entries" and est.per_trajectory is not None:
        per = est.per_trajectory[:, :k, :k]
        idx = rng.integers(0, per.shape[0], size=(n_resamples, per.shape[0]))
        samples = [per[i].mean(axis=0) for i in idx]
    else:
        se = np.asarray(est.stderr, dtype=float)
        samples = [_resample(v, se, rng) for _ in range(n_resamples)]
    nus = np.array([symplectic_eigenvalues(s)[0] for s in samples])
    nu_sigma = float(nus.std(ddof=1)) if n_resamples > 1 else 0.0
    if nu < 0.5 - max(3 * nu_sigma, 1e-9):
        raise UnphysicalState(
            f"estimated CM violates the uncertainty relation: min symplectic eigenvalue {nu:.6g} "
            f"is more than 3 sigma ({nu_sigma:.3g}) below 1/2"
        )
    report = entanglement_report(v)
    ens = []
    for s in samples:
        try:
            ens.append(log_negativity(s))
        except UnphysicalState:
            continue
    sigma = float(np.std(ens, ddof=1)) if len(ens) > 1 else 0.0
    return Reconstruction(report, sigma, nu, nu_sigma, len(ens))
