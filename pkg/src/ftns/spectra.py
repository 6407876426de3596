"""Parametric noise power spectra and their closed-form attenuation functions.

A spectrum model is a sum of components (Lorentzian, Gaussian, power-law,
constant), each evaluable at any angular frequency. Models are meant to be
even in omega; off-center components can be mirrored automatically so that
S(-omega) = S(omega) holds by construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, gamma

__all__ = [
    "Lorentzian",
    "Gaussian",
    "OneOverF",
    "Constant",
    "SpectrumModel",
    "closed_form_chi",
    "closed_form_tail_slope",
    "lorentzian_pair_chi_fid",
    "gaussian_chi_fid",
    "y_n_coefficient",
    "model_to_dict",
    "model_from_dict",
    "model_to_json",
    "model_from_json",
]

# Denominator conventions for the Lorentzian component. All three reduce to
# s0 / (1 + ((omega - d)/hwhm)^2) with a form-specific half width.
WIDTH_FORMS = ("fig1", "fig2b", "fig5", "plain_hwhm")


@dataclass(frozen=True)
class Lorentzian:
    """Lorentzian line s0 / (1 + ((omega - d)/hwhm)^2).

    width_form selects how omega_c maps to the half width at half maximum:
    "fig1" uses (8*omega/omega_c)^2 in the denominator (hwhm = omega_c/8),
    "fig2b" and "fig5" use 8*(8*(omega - d)/omega_c)^2 (hwhm = omega_c/(16*sqrt(2))),
    "plain_hwhm" uses ((omega - d)/omega_c)^2 (hwhm = omega_c).
    """

    s0: float
    omega_c: float
    d: float = 0.0
    width_form: str = "plain_hwhm"

    def __post_init__(self) -> None:
        if self.s0 < 0:
            raise ValueError(f"Lorentzian amplitude must be >= 0, got {self.s0}")
        if self.omega_c <= 0:
            raise ValueError(f"Lorentzian width must be > 0, got {self.omega_c}")
        if self.width_form not in WIDTH_FORMS:
            raise ValueError(
                f"width_form must be one of {WIDTH_FORMS}, got {self.width_form!r}"
            )

    @property
    def hwhm(self) -> float:
        if self.width_form == "fig1":
            return self.omega_c / 8.0
        if self.width_form in ("fig2b", "fig5"):
            return self.omega_c / (16.0 * math.sqrt(2.0))
        return self.omega_c

    @property
    def is_even(self) -> bool:
        return self.d == 0.0

    def evaluate(self, omega):
        u = (np.asarray(omega, dtype=float) - self.d) / self.hwhm
        return self.s0 / (1.0 + u * u)


@dataclass(frozen=True)
class Gaussian:
    """Gaussian line A * exp(-(omega - mu)^2 / sigma^2)."""

    A: float
    sigma: float
    mu: float = 0.0

    def __post_init__(self) -> None:
        if self.A < 0:
            raise ValueError(f"Gaussian amplitude must be >= 0, got {self.A}")
        if self.sigma <= 0:
            raise ValueError(f"Gaussian width must be > 0, got {self.sigma}")

    @property
    def is_even(self) -> bool:
        return self.mu == 0.0

    def evaluate(self, omega):
        u = (np.asarray(omega, dtype=float) - self.mu) / self.sigma
        return self.A * np.exp(-u * u)


@dataclass(frozen=True)
class OneOverF:
    """Power-law component A_coef / |omega|^n, divergent at omega = 0.

    The exponent is restricted to 0 < n < 3: below zero the component is not
    a decaying law, and from n = 3 on even the spin-echo overlap integral
    diverges.
    """

    A_coef: float
    n: float

    def __post_init__(self) -> None:
        if self.A_coef < 0:
            raise ValueError(f"power-law amplitude must be >= 0, got {self.A_coef}")
        if not 0.0 < self.n < 3.0:
            raise ValueError(f"power-law exponent must satisfy 0 < n < 3, got {self.n}")

    @property
    def is_even(self) -> bool:
        return True

    def evaluate(self, omega):
        w = np.asarray(omega, dtype=float)
        if np.any(w == 0.0):
            raise ValueError("power-law spectrum diverges at omega = 0")
        return self.A_coef / np.abs(w) ** self.n


@dataclass(frozen=True)
class Constant:
    """White (flat) component of height c."""

    c: float

    def __post_init__(self) -> None:
        if self.c < 0:
            raise ValueError(f"constant amplitude must be >= 0, got {self.c}")

    @property
    def is_even(self) -> bool:
        return True

    def evaluate(self, omega):
        return np.full_like(np.asarray(omega, dtype=float), self.c)


SpectrumComponent = Lorentzian | Gaussian | OneOverF | Constant


@dataclass(frozen=True)
class SpectrumModel:
    """Sum of spectrum components, optionally mirrored to enforce evenness.

    With symmetrize=True every off-center component f(omega) also contributes
    its reflection f(-omega), at full amplitude, so a single side peak listed
    at +d produces the pair at +/-d. Centered components are never doubled.

    Parameters
    ----------
    components : tuple of SpectrumComponent
    symmetrize : bool
        Mirror off-center components about omega = 0.
    """

    components: tuple[SpectrumComponent, ...]
    symmetrize: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise ValueError("spectrum model needs at least one component")

    @property
    def is_even(self) -> bool:
        return self.symmetrize or all(c.is_even for c in self.components)

    def evaluate(self, omega):
        """Evaluate S(omega) for scalar or array omega."""
        w = np.asarray(omega, dtype=float)
        total = np.zeros_like(w)
        for comp in self.components:
            total = total + comp.evaluate(w)
            if self.symmetrize and not comp.is_even:
                total = total + comp.evaluate(-w)
        return total if total.shape else float(total)


# ---------------------------------------------------------------------------
# Closed-form attenuation functions.
# ---------------------------------------------------------------------------


def gaussian_chi_fid(A: float, sigma: float, t):
    """Free-decay attenuation for a centered Gaussian spectrum.

    chi(t) = (A/sigma) * [ (t*sigma/2) Erf(t*sigma/2) + (exp(-t^2 sigma^2/4) - 1)/sqrt(pi) ].
    """
    t = np.asarray(t, dtype=float)
    u = t * sigma / 2.0
    val = (A / sigma) * (u * erf(u) + (np.exp(-(u * u)) - 1.0) / math.sqrt(math.pi))
    return val if val.shape else float(val)


def lorentzian_pair_chi_fid(A: float, w: float, d: float, t):
    """Free-decay attenuation for a symmetric Lorentzian pair.

    The spectrum is A*w^2/((omega-d)^2+w^2) + A*w^2/((omega+d)^2+w^2), each
    side at full amplitude A with half width w. The residue evaluation of the
    overlap integral gives an exponentially decaying transient plus the
    asymptote slope*t + intercept with slope A*w^2/(d^2+w^2).
    """
    t = np.asarray(t, dtype=float)
    den = d * d + w * w
    transient = (
        A * w * np.exp(-t * w)
        * ((w * w - d * d) * np.cos(d * t) - 2.0 * d * w * np.sin(d * t))
        / den**2
    )
    val = transient + A * w * w * t / den - A * w * (w * w - d * d) / den**2
    return val if val.shape else float(val)


def y_n_coefficient(A: float, n: float):
    """Prefactor of the t^(n+1) spin-echo attenuation of A/|omega|^n noise.

    The generic expression -A*(1 - 2^(1-n))*sin(pi n/2)*Gamma(-n-1)/pi has
    removable singularities at the integer exponents, where the limits are
    A*log(2)/(2 pi) for n = 1 and A/24 for n = 2; those are dispatched
    exactly.
    """
    if not 0.0 < n < 3.0:
        raise ValueError(f"exponent must satisfy 0 < n < 3, got {n}")
    if n == 1.0:
        return A * math.log(2.0) / (2.0 * math.pi)
    if n == 2.0:
        return A / 24.0
    return -A * (1.0 - 2.0 ** (1.0 - n)) * math.sin(math.pi * n / 2.0) * gamma(-n - 1.0) / math.pi


def _as_lorentzian_pair(model: SpectrumModel) -> tuple[float, float, float] | None:
    """Return (A, w, d) when the model is a full-amplitude Lorentzian pair."""
    comps = model.components
    if not all(isinstance(c, Lorentzian) for c in comps):
        return None
    if len(comps) == 1:
        c = comps[0]
        if c.d == 0.0:
            # A single centered line is half of the coincident pair.
            return (c.s0 / 2.0, c.hwhm, 0.0)
        if model.symmetrize:
            return (c.s0, c.hwhm, abs(c.d))
        return None
    if len(comps) == 2 and not model.symmetrize:
        a, b = comps
        same = a.s0 == b.s0 and a.hwhm == b.hwhm and a.d == -b.d and a.d != 0.0
        if same:
            return (a.s0, a.hwhm, abs(a.d))
    return None


def closed_form_chi(model: SpectrumModel, sequence, t):
    """Exact attenuation chi(t) where a closed form exists, else None.

    Supported cases: a single centered Gaussian under free decay, a
    full-amplitude Lorentzian pair (or single centered Lorentzian) under free
    decay, and a pure power-law component under spin echo. Unsupported
    (model, sequence) pairs return None rather than raising.
    """
    from .forward import FID, SpinEcho  # local import to avoid a cycle

    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("closed forms are defined for t >= 0")

    if isinstance(sequence, FID):
        if len(model.components) == 1 and isinstance(model.components[0], Gaussian):
            g = model.components[0]
            if g.mu == 0.0:
                return gaussian_chi_fid(g.A, g.sigma, t)
        pair = _as_lorentzian_pair(model)
        if pair is not None:
            return lorentzian_pair_chi_fid(*pair, t)
        return None

    if isinstance(sequence, SpinEcho):
        if len(model.components) == 1 and isinstance(model.components[0], OneOverF):
            p = model.components[0]
            val = y_n_coefficient(p.A_coef, p.n) * t ** (p.n + 1.0)
            return val if val.shape else float(val)
        return None

    return None


def closed_form_tail_slope(model: SpectrumModel) -> float:
    """Asymptotic d(chi)/dt for an integrable spectrum, S(0)/2.

    For any spectrum with finite integral the attenuation approaches a
    straight line whose slope is half the zero-frequency density, matching
    the explicit Lorentzian-pair form A*w^2/(d^2+w^2).
    """
    if any(isinstance(c, OneOverF) for c in model.components):
        raise ValueError("power-law spectra have no linear tail")
    return float(model.evaluate(0.0)) / 2.0


# ---------------------------------------------------------------------------
# Serialization. Field names are part of the on-disk contract.
# ---------------------------------------------------------------------------

_KINDS = {"lorentzian": Lorentzian, "gaussian": Gaussian, "one_over_f": OneOverF, "constant": Constant}


def _component_to_dict(comp: SpectrumComponent) -> dict:
    if isinstance(comp, Lorentzian):
        return {
            "kind": "lorentzian",
            "s0": comp.s0,
            "omega_c": comp.omega_c,
            "d": comp.d,
            "width_form": comp.width_form,
        }
    if isinstance(comp, Gaussian):
        return {"kind": "gaussian", "A": comp.A, "sigma": comp.sigma, "mu": comp.mu}
    if isinstance(comp, OneOverF):
        return {"kind": "one_over_f", "A_coef": comp.A_coef, "n": comp.n}
    if isinstance(comp, Constant):
        return {"kind": "constant", "c": comp.c}
    raise TypeError(f"unknown component type {type(comp).__name__}")


def _component_from_dict(doc: dict) -> SpectrumComponent:
    kind = doc.get("kind")
    if kind not in _KINDS:
        raise ValueError(f"unknown spectrum component kind {kind!r}")
    fields = {k: v for k, v in doc.items() if k != "kind"}
    try:
        return _KINDS[kind](**fields)
    except TypeError as exc:
        raise ValueError(f"bad fields for {kind!r} component: {exc}") from exc


def model_to_dict(model: SpectrumModel) -> dict:
    return {
        "components": [_component_to_dict(c) for c in model.components],
        "symmetrize": model.symmetrize,
    }


def model_from_dict(doc: dict) -> SpectrumModel:
    if "components" not in doc:
        raise ValueError("spectrum document needs a 'components' list")
    comps = tuple(_component_from_dict(c) for c in doc["components"])
    return SpectrumModel(comps, symmetrize=bool(doc.get("symmetrize", False)))


def model_to_json(model: SpectrumModel) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True)


def model_from_json(text: str) -> SpectrumModel:
    return model_from_dict(json.loads(text))
