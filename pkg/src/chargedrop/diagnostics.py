"""Singularity observables: tip tracking, power-law fits, cone angle, collapse."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, least_squares
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import FitFailureError, InsufficientNodesError, TipDetectionError
from .mesh import GeneratingCurve, enclosed_volume, geometry, surface_area

TAYLOR_SEMIANGLE_DEG = 49.3


@dataclass
class DiagnosticsRecord:
    t: float
    z_f: float
    k_f: float
    v_f: float
    sigma_max: float
    V: float
    Re: float
    volume: float
    area: float

    FIELDS = ("t", "z_f", "k_f", "v_f", "sigma_max", "V", "Re", "volume", "area")

    def as_dict(self):
        return asdict(self)


def tip_element(curve: GeneratingCurve, geom=None) -> int:
    """Index of the max-curvature element on the upper (z >= mid-height) half."""
    geom = geom if geom is not None else geometry(curve)
    zmid = 0.5 * (curve.z.max() + curve.z.min())
    upper = np.nonzero(geom.midpoints[:, 1] >= zmid)[0]
    if len(upper) == 0:
        raise TipDetectionError("no elements in the upper half of the drop")
    k = geom.mean_curvature[upper]
    if not np.all(np.isfinite(k)):
        raise TipDetectionError("non-finite curvature")
    return int(upper[np.argmax(k)])


def tip_position(curve: GeneratingCurve) -> float:
    """Axial position of the upper pole, ``z(r = 0)``."""
    return float(curve.z[0] if curve.z[0] >= curve.z[-1] else curve.z[-1])


def make_record(t, curve, geom, charge, velocity) -> DiagnosticsRecord:
    i = tip_element(curve, geom)
    k_f = float(geom.mean_curvature[i])
    v_f = float(np.hypot(*velocity.u[i]))
    return DiagnosticsRecord(
        t=float(t),
        z_f=tip_position(curve),
        k_f=k_f,
        v_f=v_f,
        sigma_max=float(np.max(np.abs(charge.sigma))),
        V=float(charge.potential),
        Re=v_f / k_f,
        volume=enclosed_volume(curve),
        area=surface_area(curve),
    )


@dataclass
class PowerLawFit:
    alpha: float
    t0: float
    C: float
    residual: float
    t0_constrained: bool = True


class PowerLawBlowUp(BaseEstimator, RegressorMixin):
    """Least-squares fit of ``v(t) = C (t0 - t)^alpha`` in log space.

    ``alpha`` is reported with its sign, so a blow-up like ``(t0 - t)^(-1/2)``
    gives ``alpha_ = -0.5``. ``t0`` is fitted jointly with ``C`` and
    ``alpha``.

    Parameters
    ----------
    t0_guess_fraction : float
        Initial ``t0`` is ``t_last + fraction * (t_last - t_first)``.
    min_samples : int
        Fewer samples raise :class:`FitFailureError`.
    """

    def __init__(self, t0_guess_fraction=0.1, min_samples=8):
        self.t0_guess_fraction = t0_guess_fraction
        self.min_samples = min_samples

    def fit(self, t, v):
        t = np.asarray(t, dtype=float).ravel()
        v = np.asarray(v, dtype=float).ravel()
        if t.shape != v.shape or len(t) < self.min_samples:
            raise FitFailureError(f"need at least {self.min_samples} matching samples")
        if np.any(v <= 0.0) or not np.all(np.isfinite(v)):
            raise FitFailureError("values must be positive and finite")
        order = np.argsort(t)
        t, v = t[order], v[order]
        logv = np.log(v)
        span = t[-1] - t[0]
        if span <= 0.0:
            raise FitFailureError("samples span zero time")

        # t0 enters through log(gap) with gap = t0 - t_last > 0
        def resid(p):
            logC, alpha, log_gap = p
            t0 = t[-1] + np.exp(log_gap)
            return logv - logC - alpha * np.log(t0 - t)

        gap0 = self.t0_guess_fraction * span
        lt = np.log(t[-1] + gap0 - t)
        A = np.column_stack([np.ones_like(lt), lt])
        (c0, a0), *_ = np.linalg.lstsq(A, logv, rcond=None)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            sol = least_squares(resid, x0=[c0, a0, np.log(gap0)], method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
        if not sol.success or not np.all(np.isfinite(sol.x)):
            raise FitFailureError(f"optimizer did not converge: {sol.message}")
        logC, alpha, log_gap = sol.x
        t0 = t[-1] + np.exp(log_gap)
        if not t0 > t[-1]:
            raise FitFailureError("fitted t0 does not exceed the last sample time")
        self.alpha_ = float(alpha)
        self.t0_ = float(t0)
        self.C_ = float(np.exp(logC))
        self.residual_ = float(np.sqrt(np.mean(sol.fun ** 2)))
        # t0 is not pinned when the gap dwarfs the data span or the fit is
        # insensitive to it (alpha near zero makes the normal matrix singular)
        jtj = sol.jac.T @ sol.jac
        self.t0_constrained_ = bool(np.exp(log_gap) < 100.0 * span and np.linalg.cond(jtj) < 1e12)
        return self

    def predict(self, t):
        check_is_fitted(self, "alpha_")
        t = np.asarray(t, dtype=float)
        return self.C_ * (self.t0_ - t) ** self.alpha_

    def score(self, t, v, sample_weight=None):
        """R^2 of the log-space fit."""
        check_is_fitted(self, "alpha_")
        logv = np.log(np.asarray(v, dtype=float))
        pred = np.log(self.predict(t))
        ss_res = np.sum((logv - pred) ** 2)
        ss_tot = np.sum((logv - logv.mean()) ** 2)
        return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    def result(self) -> PowerLawFit:
        check_is_fitted(self, "alpha_")
        return PowerLawFit(self.alpha_, self.t0_, self.C_, self.residual_, self.t0_constrained_)


def fit_power_law(series: Sequence) -> PowerLawFit:
    """Fit ``value ~ C (t0 - t)^alpha`` to ``[(t, value), ...]``."""
    arr = np.asarray(series, dtype=float)
    return PowerLawBlowUp().fit(arr[:, 0], arr[:, 1]).result()


def arclength_from_pole(curve: GeneratingCurve, upper=True):
    nodes = curve.nodes if (curve.z[0] >= curve.z[-1]) == upper else curve.nodes[::-1]
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(nodes, axis=0).T))])
    return nodes, s


def cone_angle(curve: GeneratingCurve, window: tuple[float, float]) -> float:
    """Semiangle in degrees of the cone fitted to the tip flank.

    Nodes whose arclength from the upper pole lies in ``window`` are fitted
    with a least-squares line ``r = a + slope * |z - z_f|``.
    """
    nodes, s = arclength_from_pole(curve)
    lo, hi = window
    sel = (s >= lo) & (s <= hi)
    if np.count_nonzero(sel) < 5:
        raise InsufficientNodesError("fewer than 5 nodes in the cone window")
    depth = np.abs(nodes[sel, 1] - nodes[0, 1])
    slope, _ = np.polyfit(depth, nodes[sel, 0], 1)
    return float(np.degrees(np.arctan(slope)))


def default_cone_window(k_f: float, inner=3.0, outer=12.0):
    """Arclength window ``(inner/k_f, outer/k_f)`` past the rounded tip core."""
    return inner / k_f, outer / k_f


def rescale_profiles(snapshots: Sequence[GeneratingCurve]) -> list[np.ndarray]:
    """Map each curve to ``(k_f r, k_f (z - z_f))`` about its upper tip."""
    out = []
    for curve in snapshots:
        geom = geometry(curve)
        k_f = geom.mean_curvature[tip_element(curve, geom)]
        if not k_f > 0.0:
            raise TipDetectionError("tip curvature must be positive")
        z_f = tip_position(curve)
        out.append(np.column_stack([k_f * curve.r, k_f * (curve.z - z_f)]))
    return out


def _densify(poly, spacing):
    seg = np.diff(poly, axis=0)
    lens = np.hypot(*seg.T)
    pts = [poly[:1]]
    for p, d, L in zip(poly[:-1], seg, lens):
        k = max(1, int(np.ceil(L / spacing)))
        pts.append(p + d * (np.arange(1, k + 1) / k)[:, None])
    return np.vstack(pts)


def _restrict(poly, region):
    return poly[np.abs(poly[:, 1]) <= region]


def collapse_score(rescaled: Sequence[np.ndarray], region: float = 5.0, spacing: Optional[float] = None) -> float:
    """Largest pairwise Hausdorff distance over the tip region, relative to its width.

    Only points with rescaled depth ``|Z| <= region`` take part, and the
    distance is divided by the largest rescaled radius found there. Curves are
    densified first so the discrete distance resolves the polylines.
    """
    if len(rescaled) < 2:
        raise ValueError("need at least two curves")
    spacing = spacing or region / 2000.0
    clipped = [_restrict(_densify(np.asarray(c, dtype=float), spacing), region) for c in rescaled]
    if any(len(c) == 0 for c in clipped):
        return float("inf")
    width = max(np.abs(c[:, 0]).max() for c in clipped)
    worst = 0.0
    for a, b in combinations(clipped, 2):
        d = cdist(a, b)
        worst = max(worst, d.min(axis=1).max(), d.min(axis=0).max())
    return float(worst / width)


def window_ratio(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.max() / values.min())
