"""Gaussian orthogonal ensembles and the uniform-observable experiment.

A GOE draw is H = (X + X^T) / 2 with X filled by i.i.d. N(0, sigma^2), so
diagonal entries have variance sigma^2 and off-diagonal sigma^2 / 2.  The
companion observable is "uniform" in Liouville space: equal components along
every orthonormalized eigendirection of L = [H, .].  Concretely, with
u = sum of the eigenvectors of H, O = u u^dag / (d sqrt(nu0)); in the H
eigenbasis this is the all-ones matrix, which touches each frequency slot
with the same weight and drives the Lanczos chain to its maximal length
D = d^2 - d + 1 for a generic spectrum.

Reproducibility scheme: realization i of an ensemble seeded with s draws
from numpy's SeedSequence(entropy=s, spawn_key=(i,)) and a PCG64 generator,
so results are independent of how realizations are distributed over worker
processes, and any single realization can be redrawn in isolation.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from ._util import open_write
from .operators import InnerProductSpec, OperatorVector, as_hermitian
from .lanczos import DEFAULT_HALT_TOL, ReorthPolicy, default_policy, run_lanczos
from .dynamics import ComplexityProfile, complexity_profile, evolve_amplitudes

__all__ = [
    "GoeSpec",
    "goe_sample",
    "uniform_observable",
    "EnsembleResult",
    "run_ensemble",
    "ensemble_to_dict",
    "save_ensemble_json",
    "load_ensemble_dict",
    "save_ensemble_csv",
]


@dataclass(frozen=True)
class GoeSpec:
    """Parameters of one ensemble run.

    policy = None defers to :func:`kbound.lanczos.default_policy` for the
    dimension; seed feeds the per-realization SeedSequence scheme above.
    """

    dim: int
    sigma: float = 1.0
    count: int = 1
    seed: int = 0
    policy: ReorthPolicy | None = None
    halt_tol: float = DEFAULT_HALT_TOL

    def __post_init__(self):
        if int(self.dim) < 2:
            raise ValidationError(f"dim must be >= 2, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        sigma = float(self.sigma)
        if not np.isfinite(sigma) or sigma <= 0.0:
            raise ValidationError(f"sigma must be positive and finite, got {self.sigma}")
        object.__setattr__(self, "sigma", sigma)
        if int(self.count) < 1:
            raise ValidationError(f"count must be >= 1, got {self.count}")
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "seed", int(self.seed))
        if self.policy is not None and not isinstance(self.policy, ReorthPolicy):
            raise ValidationError("policy must be a ReorthPolicy or None")


def goe_sample(dim: int, sigma: float = 1.0, seed=None) -> np.ndarray:
    """One symmetric draw H = (X + X^T)/2, X i.i.d. N(0, sigma^2).

    seed may be an int, a numpy SeedSequence, a Generator, or None for
    fresh entropy.  Equal seeds give bit-equal matrices.
    """
    if int(dim) < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise ValidationError(f"sigma must be positive and finite, got {sigma}")
    if isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.normal(0.0, sigma, size=(int(dim), int(dim)))
    return 0.5 * (x + x.T)


def uniform_observable(hamiltonian, spec: InnerProductSpec | None = None) -> OperatorVector:
    """The unit-norm operator with equal weight on every eigendirection of L.

    Requires a beta = 0 inner product (the eigen-operator basis E_i E_j^dag
    is orthonormal only there).  With u the sum of the eigenvectors of H,
    returns u u^dag / (d sqrt(nu0)), which has <O|O> = 1 exactly.
    """
    H = as_hermitian(hamiltonian)
    if spec is None:
        spec = InnerProductSpec()
    if spec.beta != 0.0:
        raise ValidationError("uniform observable requires a beta = 0 inner product")
    d = H.dim
    _, vectors = np.linalg.eigh(H.entries)
    u = vectors.sum(axis=1)
    nu0 = spec.norm_factor(d)
    mat = np.outer(u, u.conj()) / (d * np.sqrt(nu0))
    return OperatorVector.from_matrix(mat, spec)


@dataclass(eq=False)
class EnsembleResult:
    """Aggregated ensemble output.

    b_list holds one coefficient array per successful realization, in
    realization order.  mean_b_sq / std_b_sq are the pointwise ensemble
    moments of b_n^2 over the shared chain length (the shortest realization;
    population std).  failed records (index, message) for realizations that
    raised, without aborting the rest.  profile, when requested, holds the
    pointwise mean of every per-realization profile column (NaN wherever
    the column is undefined for at least one member).
    """

    spec: GoeSpec
    b_list: list[np.ndarray]
    indices: list[int]
    D_values: np.ndarray
    D_histogram: dict[int, int]
    mean_b_sq: np.ndarray
    std_b_sq: np.ndarray
    truncated_flags: list[bool] = field(default_factory=list)
    failed: list[tuple[int, str]] = field(default_factory=list)
    profile: ComplexityProfile | None = None
    profile_times: np.ndarray | None = None


def _one_realization(args):
    dim, sigma, seed, index, policy, halt_tol, times = args
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    try:
        H = goe_sample(dim, sigma, ss)
        obs = uniform_observable(H)
        res = run_lanczos(H, obs, policy=policy, halt_tol=halt_tol, store_basis=False)
        out = {"index": index, "b": res.b, "D": res.D, "truncated": res.truncated}
        if times is not None:
            prof = complexity_profile(evolve_amplitudes(res.b, times))
            out["profile"] = (prof.complexity, prof.rate, prof.dispersion,
                              prof.bound, prof.ratio, prof.tau_k, prof.b1)
        return out
    except (ValidationError, NumericalError, np.linalg.LinAlgError) as exc:
        return {"index": index, "error": f"{type(exc).__name__}: {exc}"}


def run_ensemble(spec: GoeSpec, profile_times=None, workers: int = 1) -> EnsembleResult:
    """Draw, chain, and aggregate ``spec.count`` realizations.

    Parameters
    ----------
    spec : GoeSpec
    profile_times : array-like, optional
        When given, each realization is also evolved on this grid and the
        ensemble-averaged complexity profile is attached to the result.
    workers : int
        Process count.  Results are aggregated in realization order, so the
        outcome is identical for any worker count, bit for bit.
    """
    workers = int(workers)
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    policy = spec.policy if spec.policy is not None else default_policy(spec.dim)
    times = None
    if profile_times is not None:
        times = np.asarray(profile_times, dtype=np.float64).ravel()
        if times.size == 0 or not np.all(np.isfinite(times)):
            raise ValidationError("profile_times must be a non-empty finite array")
        if times.size > 1 and not np.all(np.diff(times) > 0.0):
            raise ValidationError("profile_times must be strictly increasing")
    tasks = [(spec.dim, spec.sigma, spec.seed, i, policy, spec.halt_tol, times)
             for i in range(spec.count)]
    if workers == 1:
        raw = [_one_realization(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_one_realization, tasks, chunksize=1))
    raw.sort(key=lambda r: r["index"])

    b_list = []
    indices = []
    D_values = []
    truncated_flags = []
    failed = []
    profiles = []
    for r in raw:
        if "error" in r:
            failed.append((r["index"], r["error"]))
            continue
        b_list.append(np.asarray(r["b"], dtype=np.float64))
        indices.append(int(r["index"]))
        D_values.append(r["D"])
        truncated_flags.append(bool(r["truncated"]))
        if times is not None:
            profiles.append(r["profile"])
    if not b_list:
        raise NumericalError(
            "every realization failed; first error: "
            + (failed[0][1] if failed else "none recorded")
        )
    D_values = np.asarray(D_values, dtype=np.int64)
    hist: dict[int, int] = {}
    for D in D_values:
        hist[int(D)] = hist.get(int(D), 0) + 1
    shared = min(arr.size for arr in b_list)
    stack = np.stack([arr[:shared] ** 2 for arr in b_list])
    mean_b_sq = stack.mean(axis=0)
    std_b_sq = stack.std(axis=0)

    profile = None
    if times is not None:
        cols = [np.stack([p[i] for p in profiles]).mean(axis=0) for i in range(6)]
        b1_mean = float(np.mean([p[6] for p in profiles]))
        profile = ComplexityProfile(
            times=times,
            complexity=cols[0],
            rate=cols[1],
            dispersion=cols[2],
            bound=cols[3],
            ratio=cols[4],
            tau_k=cols[5],
            b1=b1_mean,
        )
    return EnsembleResult(
        spec=spec,
        b_list=b_list,
        indices=indices,
        D_values=D_values,
        D_histogram=hist,
        mean_b_sq=mean_b_sq,
        std_b_sq=std_b_sq,
        truncated_flags=truncated_flags,
        failed=failed,
        profile=profile,
        profile_times=times,
    )


def _float_or_none(x):
    v = float(x)
    return None if np.isnan(v) else v


def _nan_to_none(arr) -> list:
    return [_float_or_none(x) for x in np.asarray(arr, dtype=np.float64)]


def ensemble_to_dict(result: EnsembleResult) -> dict:
    """JSON-ready dict; undefined values are null, never NaN."""
    spec = result.spec
    policy = spec.policy
    out = {
        "dim": spec.dim,
        "sigma": spec.sigma,
        "count": spec.count,
        "seed": spec.seed,
        "halt_tol": spec.halt_tol,
        "policy": None if policy is None else {"mode": policy.mode,
                                               "threshold": policy.threshold},
        "D_histogram": {str(k): v for k, v in sorted(result.D_histogram.items())},
        "mean_b_sq": [float(x) for x in result.mean_b_sq],
        "std_b_sq": [float(x) for x in result.std_b_sq],
        "realizations": [
            {
                "index": int(idx),
                "D": int(D),
                "truncated": bool(tr),
                "b": [float(x) for x in b],
            }
            for idx, D, tr, b in zip(result.indices, result.D_values,
                                     result.truncated_flags, result.b_list)
        ],
        "failed": [{"index": int(i), "error": msg} for i, msg in result.failed],
    }
    if result.profile is not None:
        p = result.profile
        out["profile"] = {
            "t": [float(x) for x in p.times],
            "K": [float(x) for x in p.complexity],
            "rate": [float(x) for x in p.rate],
            "dispersion": [float(x) for x in p.dispersion],
            "bound": [float(x) for x in p.bound],
            "ratio": _nan_to_none(p.ratio),
            "tau_K": _nan_to_none(p.tau_k),
            "b1": p.b1,
        }
    else:
        out["profile"] = None
    return out


def save_ensemble_json(result: EnsembleResult, path) -> None:
    with open_write(path) as fh:
        json.dump(ensemble_to_dict(result), fh)
        fh.write("\n")


def load_ensemble_dict(path) -> dict:
    """Raw dict from an ensemble JSON file (schema of ensemble_to_dict)."""
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict) or "realizations" not in payload:
        raise ValidationError(f"{path}: missing field 'realizations'")
    return payload


def save_ensemble_csv(result: EnsembleResult, path) -> None:
    """Summary CSV: n, mean_b_sq, std_b_sq."""
    with open_write(path) as fh:
        fh.write("n,mean_b_sq,std_b_sq\n")
        for n in range(result.mean_b_sq.size):
            fh.write(f"{n + 1},{result.mean_b_sq[n]:.17g},{result.std_b_sq[n]:.17g}\n")
