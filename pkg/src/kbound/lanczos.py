"""Lanczos recursion for the Liouvillian in operator space.

Given a Hamiltonian H and a seed operator O, the recursion

    A_{n+1} = L O_n - b_n O_{n-1},      b_{n+1} = ||A_{n+1}||,

with L = [H, .] builds the Krylov chain O_0, O_1, ... and its coefficients
b_1, b_2, ...  The inner products used here make L self-adjoint and kill the
diagonal coefficients <O_n|L O_n>, which is what keeps the recursion
two-term; that property is checked at every step rather than assumed.

The iteration runs in the eigenbasis of H with the inner-product weights
folded into the components (an exact unitary change of frame).  There the
Liouvillian acts elementwise, L -> (E_j - E_i) *, so one step costs O(d^2)
instead of the O(d^3) of two matrix products, and the inner product reduces
to the plain dot product.  The chain terminates at D <= d^2 - d + 1 basis
vectors: d^2 - d off-diagonal frequency slots plus a single direction out of
the d-dimensional commutant block.

In finite precision the computed vectors lose orthogonality, so a
reorthogonalization policy is part of the run: "full" re-projects every new
vector on the whole stored basis (two classical Gram-Schmidt passes, safe,
O(D d^2) per step); "partial" propagates an orthogonality-loss estimate and
sweeps only when it crosses a threshold; "none" is the bare recursion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from ._util import open_write
from .operators import (
    HermitianMatrix,
    InnerProductSpec,
    OperatorVector,
    as_hermitian,
    inner_product,
)

DEFAULT_HALT_TOL = 1e-10
FULL_REORTH_MAX_DIM = 4096  # d^2 at or below this defaults to mode "full"
DIAGONAL_TOL = 1e-8
_EPS = float(np.finfo(np.float64).eps)
DEFAULT_PRO_THRESHOLD = float(np.sqrt(_EPS))

__all__ = [
    "DEFAULT_HALT_TOL",
    "FULL_REORTH_MAX_DIM",
    "DEFAULT_PRO_THRESHOLD",
    "ReorthPolicy",
    "default_policy",
    "LanczosResult",
    "run_lanczos",
    "OrthogonalityReport",
    "orthogonality_report",
    "max_chain_length",
    "result_to_dict",
    "save_result_json",
    "load_result_json",
    "save_coefficients_csv",
]


def max_chain_length(dim: int) -> int:
    """Largest possible Krylov dimension for a d-dimensional Hilbert space."""
    if dim < 1:
        raise ValidationError(f"dim must be >= 1, got {dim}")
    return dim * dim - dim + 1


@dataclass(frozen=True)
class ReorthPolicy:
    """How to fight loss of orthogonality in the computed basis.

    mode is one of "full", "partial", "none" (see module docstring);
    threshold is the trigger level for "partial" overlap estimates and is
    ignored by the other modes.
    """

    mode: str = "full"
    threshold: float = DEFAULT_PRO_THRESHOLD

    def __post_init__(self):
        if self.mode not in ("full", "partial", "none"):
            raise ValidationError(
                f"mode must be one of 'full', 'partial', 'none', got {self.mode!r}"
            )
        t = float(self.threshold)
        if not (0.0 < t < 1.0):
            raise ValidationError(f"threshold must lie in (0, 1), got {self.threshold}")
        object.__setattr__(self, "threshold", t)


def default_policy(dim: int) -> ReorthPolicy:
    """Full reorthogonalization up to d^2 = FULL_REORTH_MAX_DIM, else partial."""
    return ReorthPolicy("full" if dim * dim <= FULL_REORTH_MAX_DIM else "partial")


@dataclass(eq=False)
class LanczosResult:
    """Output of :func:`run_lanczos`.

    b is the coefficient array (b[0] = b_1, length D - 1) and D the Krylov
    dimension reached.  basis, when stored, holds the column-major
    vectorized operators O_0 .. O_{D-1} as rows, and ortho_error is then
    max |<O_i|O_j> - delta_ij| over that basis.  truncated marks a run
    stopped by max_steps instead of the halting test.
    """

    b: np.ndarray
    D: int
    dim: int
    spec: InnerProductSpec
    basis: np.ndarray | None = None
    ortho_error: float | None = None
    truncated: bool = False
    halt_tol: float = DEFAULT_HALT_TOL

    def basis_operator(self, n: int) -> OperatorVector:
        """O_n as an OperatorVector (requires a stored basis)."""
        if self.basis is None:
            raise ValidationError("result was produced without a stored basis")
        if not 0 <= n < self.D:
            raise ValidationError(f"n must lie in [0, {self.D}), got {n}")
        return OperatorVector(self.basis[n], self.dim, self.spec)


class _Frame:
    """H-eigenbasis representation with the inner-product weights folded in.

    Frame vectors satisfy <A|B>_spec = vdot(x_A, x_B), and the Liouvillian
    is the elementwise multiply by omega[j, i] = E_j - E_i.
    """

    def __init__(self, H: HermitianMatrix, spec: InnerProductSpec):
        d = H.dim
        energies, vectors = np.linalg.eigh(H.entries)
        omega = energies[:, None] - energies[None, :]
        if spec.beta == 0.0:
            weights = np.full((d, d), spec.norm_factor(d))
        else:
            w = spec._weights
            weights = np.outer(w, w) / spec._partition
            if np.any(weights == 0.0) or not np.all(np.isfinite(weights)):
                raise NumericalError(
                    "thermal weights underflowed; beta * spectral width too large"
                )
        self.dim = d
        self.vectors = vectors
        self.sqrt_weights = np.sqrt(weights)
        self.omega_flat = omega.ravel(order="F")
        self.omega_scale = float(np.max(np.abs(omega)))
        self.real_hamiltonian = bool(np.all(H.entries.imag == 0.0))

    def to_frame(self, components: np.ndarray) -> np.ndarray:
        A = components.reshape((self.dim, self.dim), order="F")
        At = self.vectors.conj().T @ A @ self.vectors
        return (self.sqrt_weights * At).ravel(order="F")

    def from_frame(self, x: np.ndarray) -> np.ndarray:
        At = x.reshape((self.dim, self.dim), order="F") / self.sqrt_weights
        A = self.vectors @ At @ self.vectors.conj().T
        return A.ravel(order="F")


def _cgs2(w: np.ndarray, B: np.ndarray) -> np.ndarray:
    # Two classical Gram-Schmidt passes; the second mops up the rounding of
    # the first. Both are BLAS-2 on the stacked basis.
    for _ in range(2):
        w = w - B.T @ (B.conj() @ w)
    return w


def _propagate_overlaps(b: list[float], bnew: float, prev: np.ndarray,
                        cur: np.ndarray) -> np.ndarray:
    """Overlap estimates of the incoming vector q_{n+1} with q_0 .. q_n.

    The exact overlaps obey the same zero-diagonal three-term recurrence as
    the basis itself; rounding feeds in at machine-epsilon scale.  prev and
    cur are the estimate rows for q_{n-1} (length n) and q_n (length n + 1,
    last entry 1), b holds b_1 .. b_n and bnew the provisional b_{n+1}.
    """
    n = len(b)
    bnew = max(bnew, 1e-300)
    bmax = max(max(b), bnew)
    noise = _EPS * (bmax + bnew) / bnew
    out = np.empty(n + 1)
    for j in range(n):
        acc = b[j] * cur[j + 1]
        if j >= 1:
            acc += b[j - 1] * cur[j - 1]
        acc -= b[-1] * prev[j]
        out[j] = acc / bnew + noise
    out[n] = noise
    return out


def run_lanczos(
    hamiltonian,
    operator,
    spec: InnerProductSpec | None = None,
    policy: ReorthPolicy | None = None,
    halt_tol: float = DEFAULT_HALT_TOL,
    max_steps: int | None = None,
    store_basis: bool = True,
) -> LanczosResult:
    """Run the operator-space Lanczos recursion for L = [H, .].

    Parameters
    ----------
    hamiltonian : HermitianMatrix or array
    operator : OperatorVector or square array
        Seed O_0.  Normalized internally, so only its direction matters.
    spec : InnerProductSpec, optional
        Defaults to the spec carried by ``operator`` (beta = 0 with
        normalization 1/d for a bare array).  A beta > 0 spec without a
        bound Hamiltonian is bound to ``hamiltonian``.
    policy : ReorthPolicy, optional
        Defaults to :func:`default_policy` for the operand dimension.
    halt_tol : float
        Stop when ||A_{n+1}|| <= halt_tol * b_1 (at the very first step the
        Liouvillian's spectral width stands in for b_1).
    max_steps : int, optional
        Cap on the number of coefficients; stopping there flags the result
        as truncated.  Independently of this, the recursion never runs past
        d^2 - d coefficients: the operator space has at most d^2 - d + 1
        Krylov directions, so any further "coefficient" is a rounding
        artifact (near-degenerate Liouvillian frequencies can keep the
        residual above the halting threshold right at exhaustion).  Hitting
        that structural bound is exhaustion, not truncation.
    store_basis : bool
        Keep the Krylov operators (and their Gram diagnostics) in the
        result.  The run itself stores frame vectors whenever the policy
        needs them, regardless of this flag.

    Raises
    ------
    NumericalError
        If some diagonal coefficient <O_n|L O_n> fails to vanish
        ("inner-product property 2 violated"): the seed operator is not
        compatible with the two-term recursion under this inner product.
    """
    H = as_hermitian(hamiltonian)
    if isinstance(operator, OperatorVector):
        op = operator
        if spec is None:
            spec = op.spec
    else:
        op = OperatorVector.from_matrix(operator)
        if spec is None:
            spec = InnerProductSpec()
    if H.dim != op.dim:
        raise ValidationError(
            f"hamiltonian dim {H.dim} does not match operator dim {op.dim}"
        )
    if spec.beta > 0.0:
        if spec.hamiltonian is None:
            spec = InnerProductSpec(spec.beta, spec.normalization, H)
        elif not np.array_equal(spec.hamiltonian.entries, H.entries):
            raise ValidationError(
                "inner-product hamiltonian differs from the evolution hamiltonian"
            )
    if policy is None:
        policy = default_policy(H.dim)
    halt_tol = float(halt_tol)
    if not (0.0 < halt_tol < 1.0):
        raise ValidationError(f"halt_tol must lie in (0, 1), got {halt_tol}")
    structural_cap = max_chain_length(H.dim) - 1
    if max_steps is None:
        max_steps = structural_cap
    elif max_steps < 1:
        raise ValidationError(f"max_steps must be >= 1, got {max_steps}")
    else:
        max_steps = min(int(max_steps), structural_cap)
    user_capped = max_steps < structural_cap

    frame = _Frame(H, spec)
    q0 = frame.to_frame(op.components)
    norm0 = float(np.linalg.norm(q0))
    if norm0 == 0.0:
        raise ValidationError("operator has zero norm")
    q0 = q0 / norm0
    # A real H with a real-framed seed keeps every iterate real; this halves
    # memory and arithmetic for symmetric-matrix ensembles.
    if frame.real_hamiltonian and np.all(q0.imag == 0.0):
        q0 = q0.real.copy()

    keep_rows = store_basis or policy.mode in ("full", "partial")
    buf = None
    nrows = 0
    if keep_rows:
        buf = np.empty((min(64, max_steps + 1), q0.size), dtype=q0.dtype)
        buf[0] = q0
        nrows = 1

    b: list[float] = []
    truncated = False
    est_prev = np.empty(0)
    est_cur = np.empty(0)
    force_sweep = False
    q_prev: np.ndarray | None = None
    q_cur = q0

    while True:
        n = len(b)
        w = frame.omega_flat * q_cur
        diag = complex(np.vdot(q_cur, w))
        diag_scale = max(float(np.linalg.norm(w)), frame.omega_scale, 1e-300)
        if abs(diag) > DIAGONAL_TOL * diag_scale:
            raise NumericalError(
                "inner-product property 2 violated: <O_n|L O_n> = "
                f"{diag:.3e} at step {n}, expected 0; the seed operator is "
                "incompatible with the two-term recursion under this inner product"
            )
        if q_prev is not None:
            w = w - b[-1] * q_prev

        if policy.mode == "full":
            w = _cgs2(w, buf[:nrows])
        elif policy.mode == "partial" and n >= 1:
            new_est = _propagate_overlaps(b, float(np.linalg.norm(w)), est_prev, est_cur)
            trigger = bool(np.max(np.abs(new_est[:n])) > policy.threshold)
            if trigger or force_sweep:
                w = _cgs2(w, buf[:nrows])
                new_est[:] = _EPS
                force_sweep = trigger  # a triggered sweep also cleans the next step
            est_prev, est_cur = est_cur, np.append(new_est, 1.0)

        bnew = float(np.linalg.norm(w))
        halt_scale = b[0] if b else max(frame.omega_scale, 1.0)
        if bnew <= halt_tol * halt_scale:
            break
        if len(b) >= max_steps:
            truncated = user_capped
            break
        b.append(bnew)
        q_prev, q_cur = q_cur, w / bnew
        if keep_rows:
            if nrows == buf.shape[0]:
                grown = np.empty((min(2 * nrows, max_steps + 1), buf.shape[1]),
                                 dtype=buf.dtype)
                grown[:nrows] = buf[:nrows]
                buf = grown
            buf[nrows] = q_cur
            nrows += 1
        if policy.mode == "partial" and n == 0:
            est_prev = np.array([1.0])
            est_cur = np.array([_EPS, 1.0])

    D = len(b) + 1
    basis_out = None
    ortho_error = None
    if store_basis:
        rows = buf[:nrows]
        gram = rows @ rows.conj().T
        ortho_error = float(np.max(np.abs(gram - np.eye(D))))
        basis_out = np.asarray(
            [frame.from_frame(np.asarray(rows[i], dtype=np.complex128)) for i in range(D)]
        )
    return LanczosResult(
        b=np.asarray(b, dtype=np.float64),
        D=D,
        dim=H.dim,
        spec=spec,
        basis=basis_out,
        ortho_error=ortho_error,
        truncated=truncated,
        halt_tol=halt_tol,
    )


@dataclass(eq=False)
class OrthogonalityReport:
    """Pairwise overlap diagnostics for a stored Lanczos basis."""

    gram: np.ndarray
    max_offdiagonal: float
    max_diagonal_deviation: float
    drift: np.ndarray  # drift[k] = max overlap of O_k with any earlier O_j

    def __str__(self):
        return (
            f"OrthogonalityReport(D={self.gram.shape[0]}, "
            f"max_offdiagonal={self.max_offdiagonal:.3e}, "
            f"max_diagonal_deviation={self.max_diagonal_deviation:.3e})"
        )


def orthogonality_report(result: LanczosResult) -> OrthogonalityReport:
    """Gram-matrix diagnostics of a stored basis under the result's product."""
    if result.basis is None:
        raise ValidationError("orthogonality report needs a stored basis")
    D = result.D
    ops = [result.basis_operator(i) for i in range(D)]
    gram = np.empty((D, D), dtype=np.complex128)
    for i in range(D):
        for j in range(i, D):
            val = inner_product(ops[i], ops[j], result.spec)
            gram[i, j] = val
            gram[j, i] = np.conj(val)
    off = np.abs(gram - np.diag(np.diag(gram)))
    drift = np.zeros(D)
    for k in range(1, D):
        drift[k] = float(np.max(off[k, :k]))
    return OrthogonalityReport(
        gram=gram,
        max_offdiagonal=float(np.max(off)) if D > 1 else 0.0,
        max_diagonal_deviation=float(np.max(np.abs(np.diag(gram).real - 1.0))),
        drift=drift,
    )


def result_to_dict(result: LanczosResult, include_basis: bool = False) -> dict:
    out = {
        "b": [float(x) for x in result.b],
        "D": int(result.D),
        "dim": int(result.dim),
        "beta": float(result.spec.beta),
        "normalization": result.spec.normalization,
        "truncated": bool(result.truncated),
        "halt_tol": float(result.halt_tol),
        "ortho_error": None if result.ortho_error is None else float(result.ortho_error),
    }
    if include_basis and result.basis is not None:
        out["basis"] = {
            "re": result.basis.real.tolist(),
            "im": result.basis.imag.tolist(),
        }
    return out


def save_result_json(result: LanczosResult, path, include_basis: bool = False) -> None:
    """Write a LanczosResult as JSON; the basis is opt-in (it is large)."""
    with open_write(path) as fh:
        json.dump(result_to_dict(result, include_basis), fh)
        fh.write("\n")


def load_result_json(path) -> LanczosResult:
    """Reload a result written by :func:`save_result_json`.

    A beta > 0 result comes back with its beta but without the weighting
    Hamiltonian (matrices are not serialized here); such a spec can be used
    for bookkeeping but not to take new inner products.
    """
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("b", "D", "dim"):
        if key not in payload:
            raise ValidationError(f"{path}: missing field {key!r}")
    beta = float(payload.get("beta", 0.0))
    if beta > 0.0:
        spec = InnerProductSpec.__new__(InnerProductSpec)
        spec.beta = beta
        spec.normalization = payload.get("normalization")
        spec.hamiltonian = None
        spec._energies = spec._vectors = spec._weights = spec._partition = None
    else:
        spec = InnerProductSpec(0.0, payload.get("normalization"))
    basis = None
    if "basis" in payload:
        basis = np.array(payload["basis"]["re"], dtype=np.float64) + 1j * np.array(
            payload["basis"]["im"], dtype=np.float64
        )
    return LanczosResult(
        b=np.asarray(payload["b"], dtype=np.float64),
        D=int(payload["D"]),
        dim=int(payload["dim"]),
        spec=spec,
        basis=basis,
        ortho_error=payload.get("ortho_error"),
        truncated=bool(payload.get("truncated", False)),
        halt_tol=float(payload.get("halt_tol", DEFAULT_HALT_TOL)),
    )


def save_coefficients_csv(b, path) -> None:
    """Two-column CSV of the chain: n, b_n (n starting at 1)."""
    arr = np.asarray(b, dtype=np.float64).ravel()
    with open_write(path) as fh:
        fh.write("n,b\n")
        for i, val in enumerate(arr, start=1):
            fh.write(f"{i},{val:.17g}\n")
