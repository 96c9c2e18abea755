"""Vectorized operators, inner-product families, and the commutator superoperator.

Operators on a d-dimensional Hilbert space are treated as vectors in the
d^2-dimensional Liouville space.  This module fixes the conventions the rest
of the package relies on:

* matrices are vectorized column-major (Fortran order), so that
  ``vec(H A - A H) = (I (x) H - H^T (x) I) vec(A)``;
* the inner product is ``<A|B> = nu0 * Tr(A^dag B)`` at beta = 0, with the
  normalization nu0 defaulting to 1/d (identity has unit norm), and the
  symmetrically weighted thermal form
  ``<A|B> = Tr(e^{-beta H/2} A^dag e^{-beta H/2} B) / Z`` at beta > 0.

Both members of the family make the Liouvillian L = [H, .] self-adjoint,
which is what keeps the Lanczos recursion two-term with real coefficients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from ._util import open_write

HERMITICITY_TOL = 1e-12
SUPEROP_MAX_DIM = 64

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)

__all__ = [
    "HERMITICITY_TOL",
    "SUPEROP_MAX_DIM",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "HermitianMatrix",
    "InnerProductSpec",
    "OperatorVector",
    "as_hermitian",
    "apply_liouvillian",
    "inner_product",
    "build_superoperator",
    "load_matrix",
    "save_matrix",
    "load_hamiltonian",
]


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """A square complex matrix validated to be Hermitian.

    The deviation ``max |M - M^dag|`` must stay below ``HERMITICITY_TOL``
    relative to max(1, max|M|); the matrix is stored as given (complex128
    copy), not resymmetrized.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(
                f"entries must be a square matrix, got shape {m.shape}"
            )
        if m.shape[0] == 0:
            raise ValidationError("entries must be at least 1 x 1")
        if not np.all(np.isfinite(m.view(np.float64))):
            raise ValidationError("entries contain non-finite values")
        scale = max(1.0, float(np.max(np.abs(m))))
        dev = float(np.max(np.abs(m - m.conj().T)))
        if dev > HERMITICITY_TOL * scale:
            raise ValidationError(
                f"entries are not Hermitian: max deviation {dev:.3e} "
                f"exceeds {HERMITICITY_TOL:g} * {scale:g}"
            )
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def as_hermitian(matrix) -> HermitianMatrix:
    """Coerce an array or HermitianMatrix to HermitianMatrix."""
    if isinstance(matrix, HermitianMatrix):
        return matrix
    return HermitianMatrix(np.asarray(matrix))


class InnerProductSpec:
    """One member of the inner-product family: (beta, normalization).

    beta = 0 is the flat Hilbert-Schmidt product scaled by ``normalization``
    (default 1/d, fixed at evaluation time from the operand dimension).
    beta > 0 needs the Hamiltonian it is weighted by; its eigendecomposition
    is taken once here and reused by every product.

    The thermal normalization 1/Z is built in; ``normalization`` only scales
    the beta = 0 member.
    """

    def __init__(
        self,
        beta: float = 0.0,
        normalization: float | None = None,
        hamiltonian: HermitianMatrix | np.ndarray | None = None,
    ):
        beta = float(beta)
        if not np.isfinite(beta) or beta < 0.0:
            raise ValidationError(f"beta must be finite and >= 0, got {beta}")
        if normalization is not None:
            normalization = float(normalization)
            if not np.isfinite(normalization) or normalization <= 0.0:
                raise ValidationError(
                    f"normalization must be finite and > 0, got {normalization}"
                )
        self.beta = beta
        self.normalization = normalization
        self.hamiltonian = None
        self._energies = None
        self._vectors = None
        self._weights = None
        self._partition = None
        if beta > 0.0:
            if hamiltonian is None:
                raise ValidationError(
                    "beta > 0 requires the hamiltonian the product is weighted by"
                )
            H = as_hermitian(hamiltonian)
            self.hamiltonian = H
            energies, vectors = np.linalg.eigh(H.entries)
            # Shift before exponentiating; Z and the weights rescale together.
            shifted = energies - energies.min()
            self._energies = energies
            self._vectors = vectors
            self._weights = np.exp(-beta * shifted / 2.0)
            self._partition = float(np.sum(np.exp(-beta * shifted)))
        elif hamiltonian is not None:
            self.hamiltonian = as_hermitian(hamiltonian)

    def norm_factor(self, dim: int) -> float:
        """Scale applied to Tr(A^dag B) when beta = 0."""
        if self.normalization is not None:
            return self.normalization
        return 1.0 / dim

    def __repr__(self):
        return (
            f"InnerProductSpec(beta={self.beta!r}, "
            f"normalization={self.normalization!r})"
        )


@dataclass(eq=False)
class OperatorVector:
    """An operator as a d^2 column-major component vector plus its product.

    components[j + d*i] is the (j, i) matrix entry.
    """

    components: np.ndarray
    dim: int
    spec: InnerProductSpec = field(default_factory=InnerProductSpec)

    def __post_init__(self):
        v = np.array(self.components, dtype=np.complex128).ravel()
        d = int(self.dim)
        if d < 1:
            raise ValidationError(f"dim must be >= 1, got {self.dim}")
        if v.size != d * d:
            raise ValidationError(
                f"components must have length dim^2 = {d * d}, got {v.size}"
            )
        if not np.all(np.isfinite(v.view(np.float64))):
            raise ValidationError("components contain non-finite values")
        self.components = v
        self.dim = d

    @classmethod
    def from_matrix(cls, matrix, spec: InnerProductSpec | None = None) -> "OperatorVector":
        m = np.asarray(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"matrix must be square, got shape {m.shape}")
        return cls(m.ravel(order="F"), m.shape[0], spec or InnerProductSpec())

    def to_matrix(self) -> np.ndarray:
        return self.components.reshape((self.dim, self.dim), order="F")

    def norm(self) -> float:
        val = inner_product(self, self)
        return float(np.sqrt(max(val.real, 0.0)))


def apply_liouvillian(hamiltonian, operator: OperatorVector) -> OperatorVector:
    """[H, A], returned in the same vectorized representation as ``operator``."""
    H = as_hermitian(hamiltonian)
    if H.dim != operator.dim:
        raise ValidationError(
            f"hamiltonian dim {H.dim} does not match operator dim {operator.dim}"
        )
    A = operator.to_matrix()
    C = H.entries @ A - A @ H.entries
    return OperatorVector(C.ravel(order="F"), operator.dim, operator.spec)


def _thermal_product(spec: InnerProductSpec, A: np.ndarray, B: np.ndarray) -> complex:
    V = spec._vectors
    w = spec._weights
    At = V.conj().T @ A @ V
    Bt = V.conj().T @ B @ V
    S = np.sqrt(np.outer(w, w))
    return complex(np.vdot(S * At, S * Bt) / spec._partition)


def inner_product(a: OperatorVector, b: OperatorVector,
                  spec: InnerProductSpec | None = None) -> complex:
    """<A|B> under ``spec`` (defaults to the spec carried by ``a``).

    Conjugate-linear in the first argument.
    """
    if a.dim != b.dim:
        raise ValidationError(f"operand dims differ: {a.dim} vs {b.dim}")
    if spec is None:
        spec = a.spec
    if spec.beta == 0.0:
        return complex(spec.norm_factor(a.dim) * np.vdot(a.components, b.components))
    if spec.hamiltonian is not None and spec.hamiltonian.dim != a.dim:
        raise ValidationError(
            f"inner-product hamiltonian dim {spec.hamiltonian.dim} "
            f"does not match operand dim {a.dim}"
        )
    return _thermal_product(spec, a.to_matrix(), b.to_matrix())


def build_superoperator(hamiltonian, max_dim: int = SUPEROP_MAX_DIM) -> np.ndarray:
    """Dense d^2 x d^2 matrix of L = [H, .] in the column-major convention.

    Meant for cross-checks at small d; refuses d > max_dim so a careless
    call cannot allocate gigabytes.
    """
    H = as_hermitian(hamiltonian)
    if H.dim > max_dim:
        raise ValidationError(
            f"dense superoperator needs d <= {max_dim}, got d = {H.dim}"
        )
    d = H.dim
    eye = np.eye(d, dtype=np.complex128)
    return np.kron(eye, H.entries) - np.kron(H.entries.T, eye)


def save_matrix(path, matrix) -> None:
    """Write a matrix as JSON: {"dim": d, "re": [[..]], "im": [[..]]}."""
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"matrix must be square, got shape {m.shape}")
    payload = {"dim": int(m.shape[0]), "re": m.real.tolist()}
    if np.any(m.imag != 0.0):
        payload["im"] = m.imag.tolist()
    with open_write(path) as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_matrix(path) -> np.ndarray:
    """Read a matrix written by :func:`save_matrix`; "im" may be omitted."""
    with open(path) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise ValidationError(f"{path}: expected a JSON object")
    if "dim" not in payload:
        raise ValidationError(f"{path}: missing field 'dim'")
    if "re" not in payload:
        raise ValidationError(f"{path}: missing field 're'")
    d = payload["dim"]
    if not isinstance(d, int) or d < 1:
        raise ValidationError(f"{path}: field 'dim' must be a positive integer")
    try:
        re = np.array(payload["re"], dtype=np.float64)
        im = np.array(payload.get("im", np.zeros((d, d))), dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{path}: fields 're'/'im' must be numeric arrays") from exc
    if re.shape != (d, d):
        raise ValidationError(
            f"{path}: field 're' has shape {re.shape}, expected ({d}, {d})"
        )
    if im.shape != (d, d):
        raise ValidationError(
            f"{path}: field 'im' has shape {im.shape}, expected ({d}, {d})"
        )
    return re + 1j * im


def load_hamiltonian(path) -> HermitianMatrix:
    """Load a matrix file and validate Hermiticity."""
    return as_hermitian(load_matrix(path))
