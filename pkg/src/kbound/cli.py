"""Command-line front end.

Six subcommands cover the pipeline end to end:

    model    analytic family -> coefficient artifact and closed-form curves
    lanczos  Hamiltonian matrix (JSON) -> coefficient chain
    evolve   coefficient chain -> amplitude trajectory
    bound    coefficient chain -> complexity profile vs the dispersion bound
    closure  coefficient chain -> saturation test (alpha, gamma)
    goe      random-matrix ensemble -> aggregated chains / averaged profile

Chains are exchanged as JSON artifacts because a bare CSV cannot say whether
the listed coefficients are a complete finite chain or the head of an
infinite family; CSV is an export format.  Floats in CSV carry 17
significant digits; undefined values are null in JSON and nan in CSV.

Exit codes: 0 success, 1 bad input or usage, 2 a computation left its
tolerance regime.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import NumericalError, ValidationError
from ._util import open_write
from . import algebras, dynamics, ensembles, lanczos, operators

__all__ = ["RunConfig", "run_command", "main"]

_FORMATS = ("json", "csv")


@dataclass
class RunConfig:
    """One resolved invocation: command, inputs, grid, tolerances, output."""

    command: str
    inputs: list[str] = field(default_factory=list)
    out: str = "-"
    fmt: str | None = None
    tmax: float | None = None
    steps: int | None = None
    tol_halt: float = lanczos.DEFAULT_HALT_TOL
    tol_closure: float = algebras.CLOSURE_TOL
    reorth: str | None = None
    threshold: float | None = None
    seed: int = 0
    workers: int = 1
    model_spec: str | None = None
    coeffs: int = 256
    coeffs_out: str | None = None
    observable: str | None = None
    beta: float = 0.0
    normalization: float | None = None
    max_steps: int | None = None
    store_basis: bool = False
    method: str = "eigen"
    rk4_step: float | None = None
    truncation: int | None = None
    realization: int | None = None
    dim: int | None = None
    sigma: float = 1.0
    count: int = 1

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        data = {k: v for k, v in vars(ns).items() if k in names}
        return cls(**data)


def _fmt17(x: float) -> str:
    return f"{float(x):.17g}"


def _time_grid(config: RunConfig) -> np.ndarray:
    tmax = 3.0 if config.tmax is None else float(config.tmax)
    steps = 301 if config.steps is None else int(config.steps)
    if not np.isfinite(tmax) or tmax <= 0.0:
        raise ValidationError(f"--tmax must be positive, got {tmax}")
    if steps < 2:
        raise ValidationError(f"--steps must be >= 2, got {steps}")
    return np.linspace(0.0, tmax, steps)


def _policy(config: RunConfig) -> lanczos.ReorthPolicy | None:
    if config.reorth is None:
        return None
    if config.threshold is not None:
        return lanczos.ReorthPolicy(config.reorth, config.threshold)
    return lanczos.ReorthPolicy(config.reorth)


def _resolve_format(config: RunConfig, default: str) -> str:
    fmt = config.fmt
    if fmt is None:
        if config.out not in (None, "-"):
            suffix = config.out.rsplit(".", 1)[-1].lower()
            if suffix in _FORMATS:
                return suffix
        return default
    if fmt not in _FORMATS:
        raise ValidationError(f"--format must be one of {_FORMATS}, got {fmt!r}")
    return fmt


def _emit(config: RunConfig, writer) -> None:
    """Call writer(handle) on the chosen output (stdout for '-')."""
    if config.out in (None, "-"):
        writer(sys.stdout)
    else:
        with open_write(config.out) as fh:
            writer(fh)


def _dump_json(payload: dict, fh) -> None:
    json.dump(payload, fh, allow_nan=False)
    fh.write("\n")


def _none_if_nan(x: float | None):
    if x is None:
        return None
    x = float(x)
    return None if not np.isfinite(x) else x


def _float_list(arr) -> list:
    return [float(x) for x in np.asarray(arr, dtype=np.float64)]


def _nullable_list(arr) -> list:
    return [_none_if_nan(x) for x in np.asarray(arr, dtype=np.float64)]


# ---------------------------------------------------------------- chain I/O

def _load_chain(config: RunConfig) -> tuple[np.ndarray, int | None, bool]:
    """(b, D or None, cut_flag) from a chain JSON artifact.

    Accepts model artifacts, Lanczos results, closure inputs ({"b": ...}),
    and ensemble files via --realization.  cut_flag means the listed
    coefficients continue past the list (truncated result or infinite
    family), so the chain end is not a physical boundary.
    """
    if not config.inputs:
        raise ValidationError(f"{config.command} needs an input file")
    path = config.inputs[0]
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    if "realizations" in payload:
        if config.realization is None:
            raise ValidationError(
                f"{path} is an ensemble file; pick one entry with --realization"
            )
        entries = payload["realizations"]
        idx = int(config.realization)
        if not 0 <= idx < len(entries):
            raise ValidationError(
                f"--realization must lie in [0, {len(entries)}), got {idx}"
            )
        payload = entries[idx]
    elif config.realization is not None:
        raise ValidationError(f"{path} is not an ensemble file; drop --realization")
    if "b" not in payload:
        raise ValidationError(f"{path}: missing field 'b'")
    try:
        b = np.asarray(payload["b"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: field 'b' must be a numeric list") from exc
    if b.ndim != 1 or b.size == 0:
        raise ValidationError(f"{path}: field 'b' must be a non-empty list")
    D = payload.get("D")
    if D is not None:
        D = int(D)
    truncated = bool(payload.get("truncated", False))
    cut = truncated or D is None or D != b.size + 1
    return b, D, cut


def _chain_for_evolution(config: RunConfig, b: np.ndarray, cut: bool):
    """What to hand evolve_amplitudes: the exact array, or a capped family."""
    if not cut:
        return b, config.truncation
    size = b.size

    def family(n):
        ns = np.asarray(n)
        if np.any(ns > size):
            raise NumericalError(
                f"the input lists {size} coefficients but the time grid needs "
                "more; regenerate the chain with more coefficients or drop "
                "--truncation"
            )
        return b[ns - 1]

    start = size if config.truncation is None else min(int(config.truncation), size)
    return family, start


# ------------------------------------------------------------- subcommands

def _cmd_model(config: RunConfig) -> int:
    model = algebras.parse_model_spec(config.model_spec)
    times = _time_grid(config)
    profile = algebras.model_observables(model, times)
    if model.D is not None:
        bchain = model.b(np.arange(1, model.D))
    else:
        if config.coeffs < 1:
            raise ValidationError(f"--coeffs must be >= 1, got {config.coeffs}")
        bchain = model.b(np.arange(1, config.coeffs + 1))
    fmt = _resolve_format(config, "json")
    if fmt == "json":
        payload = {
            "model": model.label(),
            "kind": model.kind,
            "alpha": model.alpha,
            "gamma": model.gamma,
            "D": model.D,
            "b": _float_list(bchain),
            "curve": {
                "t": _float_list(times),
                "K": _float_list(profile.complexity),
                "dispersion": _float_list(profile.dispersion),
            },
        }
        _emit(config, lambda fh: _dump_json(payload, fh))
    else:
        def write(fh):
            fh.write("t,K,dispersion\n")
            for k in range(times.size):
                fh.write(
                    f"{_fmt17(times[k])},{_fmt17(profile.complexity[k])},"
                    f"{_fmt17(profile.dispersion[k])}\n"
                )
        _emit(config, write)
    if config.coeffs_out:
        lanczos.save_coefficients_csv(bchain, config.coeffs_out)
    return 0


def _cmd_lanczos(config: RunConfig) -> int:
    if not config.inputs:
        raise ValidationError("lanczos needs a Hamiltonian matrix JSON file")
    H = operators.load_hamiltonian(config.inputs[0])
    spec = operators.InnerProductSpec(
        config.beta, config.normalization, H if config.beta > 0.0 else None
    )
    if config.observable is not None:
        obs_matrix = operators.load_matrix(config.observable)
        obs = operators.OperatorVector.from_matrix(obs_matrix, spec)
    else:
        if config.beta > 0.0:
            raise ValidationError(
                "the default (uniform) observable needs beta = 0; pass --observable"
            )
        obs = ensembles.uniform_observable(H, spec)
    result = lanczos.run_lanczos(
        H,
        obs,
        spec=spec,
        policy=_policy(config),
        halt_tol=config.tol_halt,
        max_steps=config.max_steps,
        store_basis=config.store_basis,
    )
    fmt = _resolve_format(config, "json")
    if fmt == "json":
        payload = lanczos.result_to_dict(result, include_basis=config.store_basis)
        _emit(config, lambda fh: _dump_json(payload, fh))
    else:
        _emit(config, lambda fh: lanczos.save_coefficients_csv(result.b, fh))
    return 0


def _cmd_evolve(config: RunConfig) -> int:
    b, _, cut = _load_chain(config)
    times = _time_grid(config)
    chain, truncation = _chain_for_evolution(config, b, cut)
    traj = dynamics.evolve_amplitudes(
        chain, times, method=config.method,
        truncation=truncation, rk4_step=config.rk4_step,
    )
    fmt = _resolve_format(config, "csv")
    if fmt == "csv":
        _emit(config, lambda fh: dynamics.save_amplitudes_csv(traj, fh))
    else:
        payload = {
            "t": _float_list(traj.times),
            "b": _float_list(traj.b),
            "truncated": bool(traj.truncated),
            "tail_mass": float(traj.tail_mass),
            "phi": [_float_list(row) for row in traj.phi],
        }
        _emit(config, lambda fh: _dump_json(payload, fh))
    return 0


def _profile_and_tau(config: RunConfig):
    b, _, cut = _load_chain(config)
    times = _time_grid(config)
    chain, truncation = _chain_for_evolution(config, b, cut)
    traj = dynamics.evolve_amplitudes(
        chain, times, method=config.method,
        truncation=truncation, rk4_step=config.rk4_step,
    )
    profile = dynamics.complexity_profile(traj)
    tau_d = float("nan")
    if traj.b.size >= 3:
        try:
            tau_d = dynamics.deviation_time(traj.b[0], traj.b[1], traj.b[2])
        except NumericalError:
            tau_d = float("nan")
    return profile, tau_d


def _cmd_bound(config: RunConfig) -> int:
    profile, tau_d = _profile_and_tau(config)
    fmt = _resolve_format(config, "csv")
    if fmt == "csv":
        _emit(config, lambda fh: dynamics.save_profile_csv(profile, fh, tau_d=tau_d))
    else:
        payload = {
            "t": _float_list(profile.times),
            "K": _float_list(profile.complexity),
            "rate": _float_list(profile.rate),
            "dispersion": _float_list(profile.dispersion),
            "bound": _float_list(profile.bound),
            "ratio": _nullable_list(profile.ratio),
            "tau_K": _nullable_list(profile.tau_k),
            "b1": profile.b1,
            "tau_d": _none_if_nan(tau_d),
        }
        _emit(config, lambda fh: _dump_json(payload, fh))
    return 0


def _cmd_closure(config: RunConfig) -> int:
    b, D, cut = _load_chain(config)
    report = algebras.closure_test(b, D=None if cut else D, tol=config.tol_closure)
    classification = algebras.classify_algebra(report.alpha) if report.closed else None
    fmt = _resolve_format(config, "json")
    if fmt == "json":
        payload = {
            "closed": report.closed,
            "alpha": report.alpha,
            "gamma": report.gamma,
            "max_residual": report.max_residual,
            "trivial": report.trivial,
            "tol": report.tol,
            "classification": classification,
            "f_values": _float_list(report.f_values),
        }
        _emit(config, lambda fh: _dump_json(payload, fh))
    else:
        def write(fh):
            fh.write("key,value\n")
            fh.write(f"closed,{int(report.closed)}\n")
            fh.write(f"alpha,{_fmt17(report.alpha)}\n")
            fh.write(f"gamma,{_fmt17(report.gamma)}\n")
            fh.write(f"max_residual,{_fmt17(report.max_residual)}\n")
            fh.write(f"trivial,{int(report.trivial)}\n")
            fh.write(f"classification,{classification or ''}\n")
        _emit(config, write)
    return 0


def _cmd_goe(config: RunConfig) -> int:
    if config.dim is None:
        raise ValidationError("goe needs --dim")
    spec = ensembles.GoeSpec(
        dim=config.dim,
        sigma=config.sigma,
        count=config.count,
        seed=config.seed,
        policy=_policy(config),
        halt_tol=config.tol_halt,
    )
    profile_times = None
    if config.tmax is not None or config.steps is not None:
        profile_times = _time_grid(config)
    result = ensembles.run_ensemble(spec, profile_times=profile_times,
                                    workers=config.workers)
    fmt = _resolve_format(config, "json")
    if fmt == "json":
        payload = ensembles.ensemble_to_dict(result)
        _emit(config, lambda fh: _dump_json(payload, fh))
    else:
        _emit(config, lambda fh: ensembles.save_ensemble_csv(result, fh))
    if result.failed:
        print(f"warning: {len(result.failed)} of {spec.count} realizations failed",
              file=sys.stderr)
    return 0


_COMMANDS = {
    "model": _cmd_model,
    "lanczos": _cmd_lanczos,
    "evolve": _cmd_evolve,
    "bound": _cmd_bound,
    "closure": _cmd_closure,
    "goe": _cmd_goe,
}


def run_command(config: RunConfig) -> int:
    """Execute a resolved RunConfig; raises the package's error types."""
    if config.command not in _COMMANDS:
        raise ValidationError(f"unknown command {config.command!r}")
    return _COMMANDS[config.command](config)


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; route them through the package's
    # validation path (exit 1) instead.
    def error(self, message):
        raise ValidationError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="kbound", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_out(p):
        p.add_argument("--out", default="-", help="output path ('-' = stdout)")
        p.add_argument("--format", dest="fmt", choices=_FORMATS, default=None,
                       help="output format (default: by extension, else per command)")

    def add_grid(p):
        p.add_argument("--tmax", type=float, default=None,
                       help="end of the time grid [0, tmax] (default 3)")
        p.add_argument("--steps", type=int, default=None,
                       help="number of grid points (default 301)")

    def add_reorth(p):
        p.add_argument("--reorth", choices=("none", "full", "partial"), default=None,
                       help="reorthogonalization mode (default: by dimension)")
        p.add_argument("--threshold", type=float, default=None,
                       help="overlap trigger for --reorth partial")
        p.add_argument("--tol-halt", dest="tol_halt", type=float,
                       default=lanczos.DEFAULT_HALT_TOL,
                       help="halting tolerance relative to b_1")

    def add_chain_input(p):
        p.add_argument("inputs", nargs=1, metavar="CHAIN_JSON",
                       help="chain artifact (model/lanczos/ensemble JSON)")
        p.add_argument("--realization", type=int, default=None,
                       help="entry to pick when the input is an ensemble file")

    p = sub.add_parser("model", help="analytic family: coefficients and curves")
    p.add_argument("model_spec", metavar="SPEC",
                   help="su2:j=..,nu=.. | hw:nu=.. | syk:eta=..,nu=.. | "
                        "sat:alpha=..,gamma=..[,D=..]")
    p.add_argument("--coeffs", type=int, default=256,
                   help="coefficients to materialize for infinite families")
    p.add_argument("--coeffs-out", dest="coeffs_out", default=None,
                   help="also write the coefficients as CSV here")
    add_grid(p)
    add_out(p)

    p = sub.add_parser("lanczos", help="coefficient chain of a Hamiltonian")
    p.add_argument("inputs", nargs=1, metavar="HAMILTONIAN_JSON",
                   help='matrix file {"dim": d, "re": [[..]], "im": [[..]]}')
    p.add_argument("--observable", default=None,
                   help="seed operator matrix JSON (default: uniform observable)")
    p.add_argument("--beta", type=float, default=0.0,
                   help="inverse temperature of the inner product (default 0)")
    p.add_argument("--normalization", type=float, default=None,
                   help="beta = 0 normalization (default 1/d)")
    p.add_argument("--max-steps", dest="max_steps", type=int, default=None)
    p.add_argument("--store-basis", dest="store_basis", action="store_true",
                   help="keep the Krylov basis in the JSON output")
    add_reorth(p)
    add_out(p)

    p = sub.add_parser("evolve", help="amplitudes phi_n(t) of a chain")
    add_chain_input(p)
    p.add_argument("--method", choices=("eigen", "rk4"), default="eigen")
    p.add_argument("--rk4-step", dest="rk4_step", type=float, default=None)
    p.add_argument("--truncation", type=int, default=None,
                   help="starting chain length for cut chains")
    add_grid(p)
    add_out(p)

    p = sub.add_parser("bound", help="complexity profile vs the dispersion bound")
    add_chain_input(p)
    p.add_argument("--method", choices=("eigen", "rk4"), default="eigen")
    p.add_argument("--rk4-step", dest="rk4_step", type=float, default=None)
    p.add_argument("--truncation", type=int, default=None)
    add_grid(p)
    add_out(p)

    p = sub.add_parser("closure", help="saturation test of a chain")
    add_chain_input(p)
    p.add_argument("--tol-closure", dest="tol_closure", type=float,
                   default=algebras.CLOSURE_TOL,
                   help="constancy tolerance (relative to max(1, b_1^2))")
    add_out(p)

    p = sub.add_parser("goe", help="random-matrix ensemble pipeline")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    add_reorth(p)
    add_grid(p)
    add_out(p)

    return parser


def main(argv=None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
        config = RunConfig.from_namespace(ns)
        return run_command(config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        code = exc.code
        return 0 if code in (0, None) else 1


if __name__ == "__main__":
    sys.exit(main())
