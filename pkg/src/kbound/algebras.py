"""Closed coefficient families and the saturation test.

A coefficient chain b_n saturates the dispersion bound exactly when its
squares obey

    b_n^2 = (1/4) alpha n (n - 1) + (1/2) gamma n,

i.e. when b_n^2 is a quadratic in n through the origin.  The second
difference of b_n^2 is then the constant alpha / 2, which is what
:func:`closure_test` measures.  Three one-parameter families realize the
law, distinguished by the sign of alpha:

    alpha < 0   finite chain of D = 2j + 1 sites, b_n = nu sqrt(n (2j+1-n)),
                K = 2 j sin^2(nu t)                  (su2)
    alpha = 0   b_n = nu sqrt(n),
                K = nu^2 t^2                          (hw)
    alpha > 0   b_n = nu sqrt(n (n - 1 + eta)),
                K = eta sinh^2(nu t)                  (sl2r)

For all three the amplitude distribution over sites is known in closed form
(binomial, Poisson, negative binomial), which this module evaluates in log
space so chains with thousands of sites neither overflow nor underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import NumericalError, ValidationError
from .dynamics import (
    AmplitudeTrajectory,
    ComplexityProfile,
    TAIL_TOL,
    UNDEFINED_CUTOFF,
)

CLOSURE_TOL = 1e-8
MODEL_TAIL_TOL = 1e-9
DEFAULT_MODEL_START = 64
MAX_MODEL_SITES = 1 << 22
_HALF_INTEGER_TOL = 1e-6

__all__ = [
    "CLOSURE_TOL",
    "MODEL_TAIL_TOL",
    "AlgebraModel",
    "parse_model_spec",
    "saturating_b",
    "ClosureReport",
    "closure_test",
    "classify_algebra",
    "saturated_complexity",
    "model_amplitudes",
    "model_observables",
]


@dataclass(frozen=True)
class AlgebraModel:
    """One member of the three closed families.

    kind is "su2", "hw", or "sl2r"; nu the overall frequency; j the spin
    (su2 only) and eta the weight (sl2r only).
    """

    kind: str
    nu: float
    j: float | None = None
    eta: float | None = None

    def __post_init__(self):
        if self.kind not in ("su2", "hw", "sl2r"):
            raise ValidationError(
                f"kind must be 'su2', 'hw' or 'sl2r', got {self.kind!r}"
            )
        nu = float(self.nu)
        if not np.isfinite(nu) or nu <= 0.0:
            raise ValidationError(f"nu must be positive and finite, got {self.nu}")
        object.__setattr__(self, "nu", nu)
        if self.kind == "su2":
            if self.j is None:
                raise ValidationError("su2 requires j")
            j = float(self.j)
            twoj = 2.0 * j
            if not np.isfinite(j) or j <= 0.0 or abs(twoj - round(twoj)) > _HALF_INTEGER_TOL:
                raise ValidationError(f"j must be a positive half-integer, got {self.j}")
            object.__setattr__(self, "j", round(twoj) / 2.0)
            object.__setattr__(self, "eta", None)
        elif self.kind == "sl2r":
            if self.eta is None:
                raise ValidationError("sl2r requires eta")
            eta = float(self.eta)
            if not np.isfinite(eta) or eta <= 0.0:
                raise ValidationError(f"eta must be positive and finite, got {self.eta}")
            object.__setattr__(self, "eta", eta)
            object.__setattr__(self, "j", None)
        else:
            object.__setattr__(self, "j", None)
            object.__setattr__(self, "eta", None)

    @classmethod
    def su2(cls, j: float, nu: float = 1.0) -> "AlgebraModel":
        return cls("su2", nu, j=j)

    @classmethod
    def hw(cls, nu: float = 1.0) -> "AlgebraModel":
        return cls("hw", nu)

    @classmethod
    def sl2r(cls, eta: float, nu: float = 1.0) -> "AlgebraModel":
        return cls("sl2r", nu, eta=eta)

    @classmethod
    def from_rates(cls, alpha: float, gamma: float, D: int | None = None) -> "AlgebraModel":
        """The family member with growth rates (alpha, gamma).

        alpha < 0 implies the finite chain D = 2j + 1 with j = gamma/|alpha|;
        D may be omitted but must agree when given.  alpha >= 0 families are
        infinite, so finite D is rejected there.
        """
        alpha = float(alpha)
        gamma = float(gamma)
        if not np.isfinite(alpha):
            raise ValidationError(f"alpha must be finite, got {alpha}")
        if not np.isfinite(gamma) or gamma <= 0.0:
            raise ValidationError(f"gamma must be positive and finite, got {gamma}")
        if alpha < 0.0:
            j = gamma / (-alpha)
            twoj = 2.0 * j
            if abs(twoj - round(twoj)) > _HALF_INTEGER_TOL * max(1.0, twoj):
                raise ValidationError(
                    f"alpha < 0 requires gamma/|alpha| to be a half-integer spin, "
                    f"got j = {j}"
                )
            model = cls.su2(round(twoj) / 2.0, math.sqrt(-alpha) / 2.0)
            if D is not None and int(D) != model.D:
                raise ValidationError(
                    f"D = {D} inconsistent with alpha, gamma (expected {model.D})"
                )
            return model
        if D is not None:
            raise ValidationError("finite D requires alpha < 0")
        if alpha == 0.0:
            return cls.hw(math.sqrt(gamma / 2.0))
        return cls.sl2r(2.0 * gamma / alpha, math.sqrt(alpha) / 2.0)

    @property
    def alpha(self) -> float:
        if self.kind == "su2":
            return -4.0 * self.nu**2
        if self.kind == "hw":
            return 0.0
        return 4.0 * self.nu**2

    @property
    def gamma(self) -> float:
        if self.kind == "su2":
            return 4.0 * self.nu**2 * self.j
        if self.kind == "hw":
            return 2.0 * self.nu**2
        return 2.0 * self.nu**2 * self.eta

    @property
    def D(self) -> int | None:
        """Chain length: 2j + 1 for su2, None (infinite) otherwise."""
        if self.kind == "su2":
            return int(round(2.0 * self.j)) + 1
        return None

    def b(self, n):
        """Coefficients b_n; n is a 1-based integer scalar or array."""
        ns = np.asarray(n, dtype=np.float64)
        if np.any(ns < 1):
            raise ValidationError("n must be >= 1")
        if self.kind == "su2":
            if np.any(ns > self.D - 1):
                raise ValidationError(
                    f"n must be <= D - 1 = {self.D - 1} for this su2 chain"
                )
            vals = self.nu * np.sqrt(ns * (2.0 * self.j + 1.0 - ns))
        elif self.kind == "hw":
            vals = self.nu * np.sqrt(ns)
        else:
            vals = self.nu * np.sqrt(ns * (ns - 1.0 + self.eta))
        if isinstance(n, np.ndarray):
            return vals
        return float(vals) if np.isscalar(n) else vals

    def label(self) -> str:
        if self.kind == "su2":
            return f"su2:j={self.j:g},nu={self.nu:g}"
        if self.kind == "hw":
            return f"hw:nu={self.nu:g}"
        return f"syk:eta={self.eta:g},nu={self.nu:g}"


def parse_model_spec(text: str) -> AlgebraModel:
    """Parse a model string like "su2:j=3.5,nu=1" or "sat:alpha=4,gamma=202".

    Kinds: su2 (keys j, nu), hw (nu), syk or sl2r (eta, nu), sat (alpha,
    gamma, D).  nu defaults to 1; the other keys are required where listed.
    """
    if not isinstance(text, str) or ":" not in text:
        raise ValidationError(
            f"model spec must look like 'kind:key=value,...', got {text!r}"
        )
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    keys: dict[str, float] = {}
    for item in body.split(","):
        item = item.strip()
        if not item:
            continue
        key, eq, val = item.partition("=")
        if not eq:
            raise ValidationError(f"model spec entry {item!r} is not key=value")
        key = key.strip().lower()
        if key in keys:
            raise ValidationError(f"model spec repeats key {key!r}")
        try:
            keys[key] = float(val)
        except ValueError:
            raise ValidationError(
                f"model spec value for {key!r} is not a number: {val.strip()!r}"
            )

    def take(name, default=None):
        if name in keys:
            return keys.pop(name)
        if default is not None:
            return default
        raise ValidationError(f"model spec {kind!r} is missing key {name!r}")

    if kind == "su2":
        model = AlgebraModel.su2(take("j"), take("nu", 1.0))
    elif kind == "hw":
        model = AlgebraModel.hw(take("nu", 1.0))
    elif kind in ("syk", "sl2r"):
        model = AlgebraModel.sl2r(take("eta"), take("nu", 1.0))
    elif kind == "sat":
        alpha = take("alpha")
        gamma = take("gamma")
        D = keys.pop("d", None)
        model = AlgebraModel.from_rates(alpha, gamma, None if D is None else int(D))
    else:
        raise ValidationError(f"unknown model kind {kind!r}")
    if keys:
        raise ValidationError(f"model spec has unknown keys {sorted(keys)!r}")
    return model


def saturating_b(alpha: float, gamma: float, n):
    """b_n of the saturating law, b_n^2 = alpha n (n-1) / 4 + gamma n / 2.

    n may be a scalar or array of 1-based integer indices; a non-positive
    radicand (n beyond the finite chain when alpha < 0) is rejected.
    """
    alpha = float(alpha)
    gamma = float(gamma)
    if not np.isfinite(alpha) or not np.isfinite(gamma):
        raise ValidationError("alpha and gamma must be finite")
    if gamma <= 0.0:
        raise ValidationError(f"gamma must be positive, got {gamma}")
    ns = np.asarray(n, dtype=np.float64)
    if np.any(ns < 1) or np.any(ns != np.round(ns)):
        raise ValidationError("n must be integer >= 1")
    radicand = 0.25 * alpha * ns * (ns - 1.0) + 0.5 * gamma * ns
    if np.any(radicand <= 0.0):
        flat = radicand.ravel()
        bad = int(ns.ravel()[int(np.argmax(flat <= 0.0))])
        raise ValidationError(
            f"saturating law undefined at n = {bad}: b_n^2 <= 0 "
            "(index beyond the finite chain?)"
        )
    vals = np.sqrt(radicand)
    if isinstance(n, np.ndarray):
        return vals
    return float(vals) if np.isscalar(n) else vals


@dataclass(eq=False)
class ClosureReport:
    """Outcome of :func:`closure_test`.

    f_values are the negated second differences of b_n^2 with the chain
    ends padded by zero; the chain is closed when they are constant within
    tolerance.  alpha = -2 <f> and gamma = 2 b_1^2 are the rates the chain
    has if closed.  trivial flags chains too short for constancy to mean
    anything (fewer than two f values).
    """

    closed: bool
    alpha: float
    gamma: float
    max_residual: float
    f_values: np.ndarray
    trivial: bool
    tol: float


def closure_test(b, D: int | None = None, tol: float = CLOSURE_TOL) -> ClosureReport:
    """Decide whether a coefficient chain satisfies the saturating law.

    Parameters
    ----------
    b : array-like
        The chain b_1 .. b_M, all positive.  For a finite-D problem this
        must be the complete chain (M = D - 1).
    D : int, optional
        Krylov dimension for finite chains; None means the chain continues
        (b is the head of an infinite family).  A finite D appends the exact
        boundary zero b_D = 0 to the squared sequence, so one constancy test
        covers both cases.
    tol : float
        Constancy tolerance, applied relative to max(1, b_1^2): the f values
        carry the squared scale of b.
    """
    arr = np.asarray(b, dtype=np.float64).ravel()
    if arr.size < 1:
        raise ValidationError("b must contain at least one coefficient")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValidationError("b entries must all be positive and finite")
    tol = float(tol)
    if tol <= 0.0:
        raise ValidationError(f"tol must be positive, got {tol}")
    if D is not None:
        D = int(D)
        if D != arr.size + 1:
            raise ValidationError(
                f"finite D must equal len(b) + 1 = {arr.size + 1}, got {D}"
            )
        squares = np.concatenate(([0.0], arr * arr, [0.0]))
    else:
        squares = np.concatenate(([0.0], arr * arr))
    f_values = -(squares[2:] - 2.0 * squares[1:-1] + squares[:-2])
    if f_values.size == 0:
        raise ValidationError(
            "chain too short: an open-ended chain needs at least 2 coefficients"
        )
    mean_f = float(np.mean(f_values))
    max_residual = float(np.max(np.abs(f_values - mean_f)))
    scale = max(1.0, float(arr[0] ** 2))
    return ClosureReport(
        closed=bool(max_residual <= tol * scale),
        alpha=-2.0 * mean_f,
        gamma=2.0 * float(arr[0] ** 2),
        max_residual=max_residual,
        f_values=f_values,
        trivial=bool(f_values.size < 2),
        tol=tol,
    )


def classify_algebra(alpha: float, tol: float = CLOSURE_TOL) -> str:
    """Map a growth rate alpha to its family: "su2", "hw" or "sl2r".

    |alpha| <= tol counts as zero.
    """
    alpha = float(alpha)
    if not np.isfinite(alpha):
        raise ValidationError(f"alpha must be finite, got {alpha}")
    if abs(alpha) <= float(tol):
        return "hw"
    return "su2" if alpha < 0.0 else "sl2r"


def saturated_complexity(alpha: float, gamma: float, times, D: int | None = None):
    """K(t) of the saturating law with rates (alpha, gamma).

        alpha > 0:  (2 gamma / alpha) sinh^2(sqrt(alpha) t / 2)
        alpha = 0:  (gamma / 2) t^2
        alpha < 0:  (D - 1) sin^2(omega t),  omega = sqrt(gamma / (2 (D-1)))

    The finite branch needs D and checks alpha = -2 gamma / (D - 1).
    """
    alpha = float(alpha)
    gamma = float(gamma)
    if not np.isfinite(alpha):
        raise ValidationError(f"alpha must be finite, got {alpha}")
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise ValidationError(f"gamma must be positive and finite, got {gamma}")
    t = np.asarray(times, dtype=np.float64)
    if alpha > 0.0:
        out = (2.0 * gamma / alpha) * np.sinh(0.5 * math.sqrt(alpha) * t) ** 2
    elif alpha == 0.0:
        out = 0.5 * gamma * t * t
    else:
        if D is None:
            raise ValidationError("alpha < 0 requires the chain length D")
        D = int(D)
        if D < 2:
            raise ValidationError(f"D must be >= 2, got {D}")
        implied = -2.0 * gamma / (D - 1)
        if abs(alpha - implied) > 1e-8 * max(1.0, abs(alpha)):
            raise ValidationError(
                f"alpha = {alpha:g} inconsistent with gamma, D "
                f"(a finite chain needs alpha = -2 gamma / (D-1) = {implied:g})"
            )
        omega = math.sqrt(gamma / (2.0 * (D - 1)))
        out = (D - 1) * np.sin(omega * t) ** 2
    if isinstance(times, np.ndarray):
        return out
    return float(out) if out.ndim == 0 else out


def _signed_log_power(base: np.ndarray, exponents: np.ndarray):
    """(log |base^e|, sign(base^e)) on the outer (t, n) grid, exact at 0^0 = 1.

    base entries equal to zero contribute log-magnitude 0 for exponent 0 and
    -inf (i.e. a hard zero) for positive exponents.
    """
    absb = np.abs(base)
    safe = np.where(absb > 0.0, absb, 1.0)
    logmag = np.outer(np.log(safe), exponents)
    zero_rows = absb == 0.0
    if np.any(zero_rows):
        logmag[np.ix_(zero_rows, exponents > 0)] = -np.inf
    neg = base < 0.0
    odd = (np.round(exponents).astype(np.int64) % 2) == 1
    sign = np.ones((base.size, exponents.size))
    sign[np.ix_(neg, odd)] = -1.0
    return logmag, sign


def model_amplitudes(model: AlgebraModel, times, truncation: int | None = None) -> AmplitudeTrajectory:
    """Closed-form amplitudes phi_n(t) for one of the three families.

    su2 uses its full finite chain and is exact.  For hw and sl2r,
    ``truncation`` sets the materialized chain length; if that leaves more
    than MODEL_TAIL_TOL of weight in the last two sites anywhere on the
    grid, a NumericalError is raised instead of silently clipping.  Without
    ``truncation`` the length grows automatically until the tail clears
    TAIL_TOL.
    """
    if not isinstance(model, AlgebraModel):
        raise ValidationError("model must be an AlgebraModel")
    t = np.asarray(times, dtype=np.float64).ravel()
    if t.size == 0 or not np.all(np.isfinite(t)):
        raise ValidationError("times must be a non-empty finite array")
    if t.size > 1 and not np.all(np.diff(t) > 0.0):
        raise ValidationError("times must be strictly increasing")
    if truncation is not None:
        truncation = int(truncation)
        if truncation < 1:
            raise ValidationError(f"truncation must be >= 1, got {truncation}")

    x = model.nu * t
    if model.kind == "su2":
        n_sites = model.D
        ns = np.arange(n_sites, dtype=np.float64)
        twoj = 2.0 * model.j
        logbin = 0.5 * (gammaln(twoj + 1.0) - gammaln(ns + 1.0) - gammaln(twoj - ns + 1.0))
        lc, sc = _signed_log_power(np.cos(x), twoj - ns)
        ls, ss = _signed_log_power(np.sin(x), ns)
        phi = sc * ss * np.exp(logbin[None, :] + lc + ls)
        bchain = model.b(np.arange(1, n_sites))
        return AmplitudeTrajectory(t, phi, bchain, False, 0.0, "closed-form")

    auto = truncation is None
    count = DEFAULT_MODEL_START if auto else truncation
    while True:
        ns = np.arange(count, dtype=np.float64)
        if model.kind == "hw":
            lx, sx = _signed_log_power(x, ns)
            logw = -0.5 * gammaln(ns + 1.0)
            envelope = -0.5 * x * x
            phi = sx * np.exp(logw[None, :] + lx + envelope[:, None])
        else:
            eta = model.eta
            lth, sth = _signed_log_power(np.tanh(x), ns)
            logw = 0.5 * (gammaln(ns + eta) - gammaln(ns + 1.0) - gammaln(eta))
            envelope = -eta * np.log(np.cosh(x))
            phi = sth * np.exp(logw[None, :] + lth + envelope[:, None])
        tail = float(np.max(np.sum(phi[:, -2:] ** 2, axis=1)))
        if auto:
            if tail < TAIL_TOL:
                break
            count *= 2
            if count > MAX_MODEL_SITES:
                raise NumericalError(
                    f"model chain exceeded {MAX_MODEL_SITES} sites with tail mass "
                    f"{tail:.3e}; the grid reaches times too large to materialize"
                )
        else:
            if tail > MODEL_TAIL_TOL:
                raise NumericalError(
                    f"truncation = {count} leaves tail mass {tail:.3e} > "
                    f"{MODEL_TAIL_TOL:g}; increase truncation"
                )
            break
    bchain = model.b(np.arange(1, count))
    return AmplitudeTrajectory(t, phi, bchain, True, tail, "closed-form")


def model_observables(model: AlgebraModel, times) -> ComplexityProfile:
    """Closed-form complexity profile of a family (no chain evolution).

    All columns come from the analytic K(t) and Delta K(t); the ratio is
    identically 1 wherever the bound is nonzero, which is the saturation
    statement in closed form.
    """
    if not isinstance(model, AlgebraModel):
        raise ValidationError("model must be an AlgebraModel")
    t = np.asarray(times, dtype=np.float64).ravel()
    if t.size == 0 or not np.all(np.isfinite(t)):
        raise ValidationError("times must be a non-empty finite array")
    x = model.nu * t
    if model.kind == "su2":
        j = model.j
        complexity = 2.0 * j * np.sin(x) ** 2
        dispersion = math.sqrt(j / 2.0) * np.abs(np.sin(2.0 * x))
        rate = 2.0 * j * model.nu * np.sin(2.0 * x)
        b1 = model.nu * math.sqrt(2.0 * j)
    elif model.kind == "hw":
        complexity = x * x
        dispersion = np.abs(x)
        rate = 2.0 * model.nu * x
        b1 = model.nu
    else:
        eta = model.eta
        complexity = eta * np.sinh(x) ** 2
        dispersion = 0.5 * math.sqrt(eta) * np.abs(np.sinh(2.0 * x))
        rate = eta * model.nu * np.sinh(2.0 * x)
        b1 = model.nu * math.sqrt(eta)
    bound = 2.0 * b1 * dispersion
    cutoff = UNDEFINED_CUTOFF * b1
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > cutoff, np.abs(rate) / bound, np.nan)
        tau_k = np.where(np.abs(rate) > cutoff, dispersion / np.abs(rate), np.nan)
    return ComplexityProfile(
        times=t,
        complexity=complexity,
        rate=rate,
        dispersion=dispersion,
        bound=bound,
        ratio=ratio,
        tau_k=tau_k,
        b1=b1,
    )
