"""Floating-point cross-validation by exact diagonalization.

Exact operators are evaluated at rational parameter values and handled as
dense double-precision matrices; the clusters used here have at most a few
hundred states.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .conjugation import conjugate, effective_band_operator
from .models import Model, make_model
from .operators import SparseOperator

logger = logging.getLogger(__name__)

__all__ = [
    "NumericOperator",
    "ScalingReport",
    "UnitarityWitness",
    "numeric_operator",
    "numeric_spectrum",
    "conjugate_numeric",
    "unitarity_witness",
    "band_scaling_study",
    "two_site_ground_energy",
    "bond_ground_energy_study",
    "fit_slope",
]

HERMITIAN_TOL = 1e-12


@dataclass
class NumericOperator:
    """Dense matrix together with the parameter values used to build it."""

    matrix: np.ndarray
    values: Dict[str, Fraction]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_error(self) -> float:
        m = self.matrix
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        return float(np.max(np.abs(m - m.conj().T))) / scale if m.size else 0.0


def numeric_operator(op: SparseOperator, values: Mapping[str, object]) -> NumericOperator:
    """Evaluate an exact operator at the given parameter values."""
    vals = {k: Fraction(v) if not isinstance(v, float) else v for k, v in values.items()}
    return NumericOperator(op.to_dense(vals), dict(vals))


def numeric_spectrum(op: NumericOperator, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Sorted eigenvalues of a Hermitian matrix.

    Raises
    ------
    ValueError
        If the matrix is not Hermitian within ``tol`` (relative).
    """
    err = op.hermiticity_error()
    if err > tol:
        raise ValueError(f"operator is not Hermitian (relative deviation {err:.3e})")
    return np.linalg.eigvalsh(op.matrix)


def conjugate_numeric(h: NumericOperator, s: NumericOperator, tol: float = HERMITIAN_TOL) -> NumericOperator:
    """``exp(S) H exp(-S)`` with a scaling-and-squaring matrix exponential.

    ``S`` must be anti-Hermitian, so that ``exp(S)`` is unitary.
    """
    sm = s.matrix
    scale = max(1.0, float(np.max(np.abs(sm)))) if sm.size else 1.0
    err = float(np.max(np.abs(sm + sm.conj().T))) / scale if sm.size else 0.0
    if err > tol:
        raise ValueError(f"generator is not anti-Hermitian (relative deviation {err:.3e})")
    u = scipy.linalg.expm(sm)
    uinv = scipy.linalg.expm(-sm)
    return NumericOperator(u @ h.matrix @ uinv, h.values)


def _spectral_distance(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(a))))
    return float(np.max(np.abs(np.sort(a) - np.sort(b)))) / scale


@dataclass
class UnitarityWitness:
    """Spectrum preservation under conjugation by ``exp(S1)`` (and ``exp(S2)``)."""

    cluster: str
    model: str
    dim: int
    relative_error: float
    ok: bool


def default_values(model_name: str) -> Dict[str, Fraction]:
    """Generic rational parameter values for numeric checks."""
    if model_name == "three-band":
        return {"tpd": Fraction(13, 10), "Ud": Fraction(21, 2), "Up": Fraction(4),
                "Upd": Fraction(6, 5), "Delta": Fraction(18, 5)}
    base = {"U": Fraction(8), "h": Fraction(1, 7), "k": Fraction(1, 3)}
    if model_name == "one-band-general":
        base.update(tp=Fraction(3, 10), tm=Fraction(1, 2))
    else:
        base["t"] = Fraction(2, 5)
    return base


def unitarity_witness(model: Model, values: Optional[Mapping[str, object]] = None,
                      order: int = 2, tol: float = 1e-10) -> UnitarityWitness:
    """Check that conjugating with the exact generators preserves the spectrum."""
    values = default_values(model.name) if values is None else values
    res = conjugate(model, order)
    h = numeric_operator(res.h, values)
    spec = numeric_spectrum(h)
    h1 = conjugate_numeric(h, numeric_operator(res.s1, values))
    err = _spectral_distance(spec, numeric_spectrum(h1, tol=1e-9))
    if order >= 2 and res.s2 is not None:
        h2 = conjugate_numeric(h1, numeric_operator(res.s2, values))
        err = max(err, _spectral_distance(spec, numeric_spectrum(h2, tol=1e-9)))
    return UnitarityWitness(model.cluster.name, model.name, h.dim, err, err <= tol)


def fit_slope(ts: Sequence[float], ys: Sequence[float]) -> Tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log t`` and its standard error."""
    x = np.log(np.asarray(ts, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    if len(x) < 3:
        return float((y[-1] - y[0]) / (x[-1] - x[0])), float("nan")
    (slope, icpt), cov = np.polyfit(x, y, 1, cov=True)
    return float(slope), float(math.sqrt(max(cov[0, 0], 0.0)))


@dataclass
class ScalingReport:
    """Samples ``(t, residual, band_error)`` and fitted log-log slopes."""

    model: str
    cluster: str
    order: int
    U: Fraction
    samples: List[Tuple[float, float, float]]
    residual_slope: float
    residual_slope_err: float
    band_slope: float
    band_slope_err: float
    residual_ok: bool = False
    band_ok: bool = False

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "residual", "band_error"])
        for t, r, b in self.samples:
            w.writerow([repr(t), repr(r), repr(b)])
        return buf.getvalue()

    def summary(self) -> Dict[str, object]:
        d = asdict(self)
        d["U"] = str(self.U)
        d.pop("samples")
        d["n_samples"] = len(self.samples)
        return d

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _check_t_list(t_list: Sequence) -> List[Fraction]:
    ts = [Fraction(t) for t in t_list]
    if len(ts) < 4:
        raise ValueError(f"need at least 4 values of t, got {len(ts)}")
    if any(t <= 0 for t in ts):
        raise ValueError("t values must be positive")
    if max(ts) / min(ts) < 10:
        raise ValueError("t values must span at least one decade")
    return ts


def _hopping_values(model_name: str, t: Fraction) -> Dict[str, Fraction]:
    if model_name == "three-band":
        return {"tpd": t}
    if model_name == "one-band-general":
        return {"tp": t / 2, "tm": t}
    return {"t": t}


def band_scaling_study(model_name: str, shape: str, order: int, t_list: Sequence,
                       U=Fraction(8), extra: Optional[Mapping[str, object]] = None) -> ScalingReport:
    """Residual and band-energy scaling of the order-``order`` conjugation.

    For each ``t``: (a) the 2-norm of ``P0 H(n) P1`` after numerically
    conjugating ``H`` with the exact generators (expected slope ``n + 1``);
    (b) the largest distance between the lowest ``dim P0`` eigenvalues of
    ``H`` and the eigenvalues of the effective band operator (expected
    slope ``2n + 2`` for these models, whose odd orders vanish).

    ``U`` sets the interaction scale (``Ud`` for the three-band model,
    whose other parameters default to the values of :func:`default_values`).
    """
    ts = _check_t_list(t_list)
    model = make_model(model_name, shape)
    if model_name == "three-band":
        vals = {k: v for k, v in default_values(model_name).items() if k != "tpd"}
    else:
        vals = {"U": Fraction(U), "h": Fraction(0), "k": Fraction(0)}
    if extra:
        vals.update({k: Fraction(v) for k, v in extra.items()})
    res = conjugate(model, order)
    eff = effective_band_operator(model, order)
    band = sorted(model.band())
    rest = sorted(set(range(len(model.basis))) - set(band))
    samples = []
    for t in ts:
        v = dict(vals)
        v.update(_hopping_values(model_name, t))
        h = numeric_operator(res.h, v)
        hn = conjugate_numeric(h, numeric_operator(res.s1, v))
        if order >= 2:
            hn = conjugate_numeric(hn, numeric_operator(res.s2, v))
        block = hn.matrix[np.ix_(band, rest)]
        resid = float(np.linalg.norm(block, 2)) if block.size else 0.0
        exact = numeric_spectrum(h)[: len(band)]
        effv = numeric_spectrum(numeric_operator(eff, v))
        berr = float(np.max(np.abs(np.sort(exact) - np.sort(effv))))
        samples.append((float(t), resid, berr))
        logger.debug("t=%s residual=%.3e band_error=%.3e", t, resid, berr)
    rs, rse = fit_slope([s[0] for s in samples], [s[1] for s in samples])
    bs, bse = fit_slope([s[0] for s in samples], [s[2] for s in samples])
    rep = ScalingReport(model_name, shape, order, Fraction(U), samples, rs, rse, bs, bse)
    rep.residual_ok = rs >= order + 1 - 0.2
    rep.band_ok = bs >= 2 * order + 1 - 0.3
    return rep


def two_site_ground_energy(t: float, U: float) -> float:
    """Closed-form ground energy of the half-filled two-site Hubbard model."""
    return (U - math.sqrt(U * U + 16 * t * t)) / 2


def bond_ground_energy_study(order: int, t_list: Sequence, U=Fraction(8)) -> ScalingReport:
    """Band ground energy of the symmetric bond versus the closed form.

    The effective band operator is evaluated at ``h = k = 0`` and its
    lowest eigenvalue compared with :func:`two_site_ground_energy`.
    The ``residual`` column holds ``|P0 H(n) P1|`` as in
    :func:`band_scaling_study`.
    """
    ts = _check_t_list(t_list)
    model = make_model("one-band-symmetric", "bond")
    res = conjugate(model, order)
    eff = effective_band_operator(model, order)
    band = sorted(model.band())
    rest = sorted(set(range(len(model.basis))) - set(band))
    samples = []
    for t in ts:
        v = {"t": t, "U": Fraction(U), "h": Fraction(0), "k": Fraction(0)}
        e_eff = float(numeric_spectrum(numeric_operator(eff, v))[0])
        e_ex = two_site_ground_energy(float(t), float(U))
        h = numeric_operator(res.h, v)
        hn = conjugate_numeric(h, numeric_operator(res.s1, v))
        if order >= 2:
            hn = conjugate_numeric(hn, numeric_operator(res.s2, v))
        resid = float(np.linalg.norm(hn.matrix[np.ix_(band, rest)], 2))
        samples.append((float(t), resid, abs(e_eff - e_ex)))
    rs, rse = fit_slope([s[0] for s in samples], [s[1] for s in samples])
    bs, bse = fit_slope([s[0] for s in samples], [s[2] for s in samples])
    rep = ScalingReport("one-band-symmetric", "bond", order, Fraction(U), samples, rs, rse, bs, bse)
    rep.residual_ok = rs >= order + 1 - 0.2
    rep.band_ok = bs >= 2 * order + 1 - 0.3
    return rep
