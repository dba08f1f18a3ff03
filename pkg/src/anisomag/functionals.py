"""Singular double-integral functionals via the spherical change of variables.

Every functional is reduced to an outer x-integral, a unit-sphere integral in
the direction sigma, and a radial integral in h along the ray y = x + h*sigma
(the anisotropic kernel factorizes as gauge(x - y) = h * gauge(sigma)):

* fractional seminorm: graded Gauss-Legendre panels in t = h^(p(1-s)), which
  flattens the endpoint singularity; the far tail where u(y) vanishes is
  added in closed form.
* threshold functional: the superlevel set of the kernel difference is
  located by bracketing + bisection on a graded scan grid, then h^(-1-p) is
  integrated exactly over the resulting intervals.
* mollified (BBM) functional: smooth radial integrand on the mollifier
  support; for polytope indicators the ray/region intersection makes the
  radial pieces explicit.

Tensor-grid evaluations report |value(res) - value(res/2)|; Monte Carlo
evaluations report the sample standard error.  Neither estimate is optional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable

import numpy as np

from .bodies import ConvexBody, unit_ball_volume
from .fields import ComplexField, MagneticPotential
from .grids import midpoint_grid, trapezoid_grid
from .norms import scalar_mixed_modulus_pow
from .seeding import derive_seed
from .spheres import SphereRule, sphere_rule

# ---------------------------------------------------------------------------
# mollifier families


@dataclass(frozen=True)
class LudwigFamily:
    """rho_n(r) = p (1 - s_n) r^(p - N - p s_n), the fractional-kernel family."""

    dim: int
    p: float
    s_of_n: Callable[[int], float] | None = None

    def s_value(self, n: int) -> float:
        s = (1.0 - 1.0 / n) if self.s_of_n is None else float(self.s_of_n(n))
        if not 0.0 < s < 1.0:
            raise ValueError(f"s_n must lie in (0, 1), got {s} at n={n}")
        return s

    def rho(self, r, n: int):
        s = self.s_value(n)
        return self.p * (1.0 - s) * np.asarray(r, dtype=float) ** (self.p - self.dim - self.p * s)

    def normalization(self, n: int) -> float:
        # integral_0^1 rho_n r^(N-1) dr = p(1-s) * integral_0^1 r^(p(1-s)-1) dr = 1
        return 1.0

    def tail_weight(self, delta: float, n: int) -> float:
        """integral_delta^inf rho_n(r) r^(N-1-p) dr, closed form."""
        s = self.s_value(n)
        return (1.0 - s) / s * delta ** (-self.p * s)


@dataclass(frozen=True)
class ShrinkingUniformFamily:
    """rho_n(r) = N n^N on [0, 1/n], the shrinking-support family."""

    dim: int
    p: float

    def rho(self, r, n: int):
        r = np.asarray(r, dtype=float)
        return np.where(r <= 1.0 / n, float(self.dim) * n**self.dim, 0.0)

    def normalization(self, n: int) -> float:
        return 1.0

    def tail_weight(self, delta: float, n: int) -> float:
        if delta >= 1.0 / n:
            return 0.0
        nn = float(self.dim) * n**self.dim
        e = self.dim - self.p
        if e == 0:
            return nn * math.log(1.0 / (n * delta))
        return nn * ((1.0 / n) ** e - delta**e) / e


MollifierFamily = LudwigFamily | ShrinkingUniformFamily


# ---------------------------------------------------------------------------
# functional specifications


@dataclass(frozen=True)
class Gagliardo:
    s: float


@dataclass(frozen=True)
class Nguyen:
    delta: float


@dataclass(frozen=True)
class Bbm:
    family: MollifierFamily
    n: int


@dataclass(frozen=True)
class FunctionalSpec:
    kind: Gagliardo | Nguyen | Bbm
    p: float
    body: ConvexBody
    potential: MagneticPotential

    def __post_init__(self):
        if self.p < 1.0:
            raise ValueError("p must satisfy p >= 1")
        if self.body.dim != self.potential.dim:
            raise ValueError("body and potential dimensions differ")
        if isinstance(self.kind, Gagliardo):
            if not 0.0 < self.kind.s < 1.0:
                raise ValueError("s must lie in (0, 1)")
            if not self.potential.is_zero:
                raise ValueError("the fractional seminorm requires a zero potential")
        elif isinstance(self.kind, Nguyen):
            if self.kind.delta <= 0.0:
                raise ValueError("delta must be positive")
        elif isinstance(self.kind, Bbm):
            fam = self.kind.family
            if fam.dim != self.body.dim:
                raise ValueError("mollifier family dimension mismatch")
            if fam.p != self.p:
                raise ValueError("mollifier family exponent mismatch")
            if self.kind.n < 1:
                raise ValueError("mollifier index must be a positive integer")
        else:
            raise TypeError("unknown functional kind")


def _validate_field(u: ComplexField, spec: FunctionalSpec) -> None:
    if u.dim != spec.body.dim:
        raise ValueError("field dimension does not match the body")
    if u.smooth:
        return
    if isinstance(spec.kind, Nguyen):
        raise ValueError("indicator fields are rejected by the threshold functional "
                         "(the delta-characterization fails for BV)")
    if spec.p != 1.0:
        raise ValueError("indicator fields are restricted to p = 1")
    if u.region is None:
        raise ValueError("non-smooth fields must carry a polytope region")


# ---------------------------------------------------------------------------
# integration budget


@dataclass(frozen=True)
class IntegrationBudget:
    """Quadrature configuration for one functional evaluation.

    ``outer`` selects the x-scheme: "tensor" (trapezoid / cell-centered grid,
    error = two-resolution difference) or "montecarlo" (uniform ball samples,
    error = standard error).  Radial and scan knobs follow the graded-grid
    design; ``margin`` widens the x-domain beyond the field support where the
    integrand is not symmetric in x and y.
    """

    outer: str = "tensor"
    resolution: int = 64
    samples: int = 4096
    seed: int = 0
    sphere_nodes: int = 96
    radial_order: int = 12
    radial_panel_ratio: float = 1.8
    radial_first_break: float = 1e-3
    scan_ratio: float = 1.05
    scan_min_factor: float = 1e-6
    scan_max_step: float | None = None
    margin: float = 3.0
    bisection_iters: int = 48
    chunk: int = 32

    def __post_init__(self):
        if self.outer not in ("tensor", "montecarlo"):
            raise ValueError("outer scheme must be 'tensor' or 'montecarlo'")


# ---------------------------------------------------------------------------
# shared machinery


def _ball_samples(dim: int, radius: float, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, dim))
    g /= np.sqrt(np.einsum("nk,nk->n", g, g))[:, None]
    radii = radius * rng.random(count) ** (1.0 / dim)
    return g * radii[:, None]


def _mixture_samples(dim: int, radius: float, tau: float, count: int, seed: int):
    """Defensive importance sampling on the ball: gaussian proposal matched to
    the integrand's spread, mixed with a uniform floor so far-field weights
    stay bounded.  Returns (points, mixture density at points)."""
    from scipy.stats import chi2

    rng = np.random.default_rng(seed)
    n_gauss = int(0.7 * count)
    n_unif = count - n_gauss
    pts_g = np.empty((n_gauss, dim))
    filled = 0
    for _ in range(1000):
        need = n_gauss - filled
        if need == 0:
            break
        draw = tau * rng.standard_normal((max(2 * need, 32), dim))
        keep = draw[np.einsum("nk,nk->n", draw, draw) <= radius**2][:need]
        pts_g[filled : filled + len(keep)] = keep
        filled += len(keep)
    if filled < n_gauss:
        raise RuntimeError("gaussian proposal rejection stalled")
    g = rng.standard_normal((n_unif, dim))
    g /= np.sqrt(np.einsum("nk,nk->n", g, g))[:, None]
    pts_u = g * (radius * rng.random(n_unif) ** (1.0 / dim))[:, None]
    pts = np.vstack([pts_g, pts_u])
    trunc = chi2.cdf((radius / tau) ** 2, dim)
    r2 = np.einsum("nk,nk->n", pts, pts)
    rho_g = np.exp(-0.5 * r2 / tau**2) / ((2.0 * math.pi * tau**2) ** (dim / 2.0) * trunc)
    rho_u = 1.0 / (unit_ball_volume(dim) * radius**dim)
    frac_g = n_gauss / count
    return pts, frac_g * rho_g + (1.0 - frac_g) * rho_u


def _psi_diff_pow(u, a, x_chunk, h, sigma, p, use_phase):
    """|Psi_u(x, x+h sigma) - Psi_u(x, x)|_p^p on the (chunk, sigma, h) grid."""
    y = x_chunk[:, None, None, :] + h[None, None, :, None] * sigma[None, :, None, :]
    uy = u.evaluate(y)
    ux = u.evaluate(x_chunk)
    if use_phase:
        mid = x_chunk[:, None, None, :] + (0.5 * h)[None, None, :, None] * sigma[None, :, None, :]
        dot = np.einsum("cmhk,mk->cmh", a.evaluate(mid), sigma)
        uy = np.exp(-1j * h[None, None, :] * dot) * uy
    return scalar_mixed_modulus_pow(uy - ux[:, None, None], p), y


def _outer_integrate(values_fn, dim, radius, budget, seed_label, mask_radius=None,
                     importance_tau=None):
    """Run the outer x-integral with either scheme.

    ``values_fn(points) -> per-point inner values``; ``mask_radius`` zeroes
    tensor nodes outside the ball where the decomposition is valid; a finite
    ``importance_tau`` turns on the defensive gaussian proposal.
    """
    if budget.outer == "montecarlo":
        if importance_tau is not None:
            pts, rho = _mixture_samples(dim, radius, importance_tau, budget.samples, seed_label)
        else:
            pts = _ball_samples(dim, radius, budget.samples, seed_label)
            rho = np.full(len(pts), 1.0 / (unit_ball_volume(dim) * radius**dim))
        vals = np.empty(budget.samples)
        for start in range(0, len(pts), budget.chunk):
            vals[start : start + budget.chunk] = values_fn(pts[start : start + budget.chunk])
        weighted = vals / rho
        mean = float(np.einsum("n->", weighted)) / len(weighted)
        sem = (
            float(np.std(weighted, ddof=1)) / math.sqrt(len(weighted))
            if len(weighted) > 1
            else 0.0
        )
        return mean, sem
    tg = trapezoid_grid(dim, radius, budget.resolution)
    vals = np.zeros(len(tg.points))
    r2 = np.einsum("nk,nk->n", tg.points, tg.points)
    live = r2 <= (mask_radius if mask_radius is not None else radius) ** 2
    idx = np.nonzero(live)[0]
    for start in range(0, len(idx), budget.chunk):
        sel = idx[start : start + budget.chunk]
        vals[sel] = values_fn(tg.points[sel])
    return tg.integrate(vals)


# ---------------------------------------------------------------------------
# fractional (Gagliardo-type) seminorm


def _gagliardo_radial(p: float, s: float, h_max: float, budget: IntegrationBudget):
    """Nodes/weights for integral_0^H q(h)^p h^(p(1-s)-1) dh via t = h^(p(1-s)).

    Nodes in the first panel can map to h far below float resolution of the
    difference quotient q; they are clamped at a floor where q is still
    accurate (q extends continuously to h = 0, so the clamp error is O(floor)).
    """
    alpha = p * (1.0 - s)
    breaks = [0.0, budget.radial_first_break * h_max]
    while breaks[-1] < h_max:
        breaks.append(min(breaks[-1] * budget.radial_panel_ratio, h_max))
    xg, wg = np.polynomial.legendre.leggauss(budget.radial_order)
    h_nodes, h_weights = [], []
    t_breaks = np.asarray(breaks) ** alpha
    for t_lo, t_hi in zip(t_breaks[:-1], t_breaks[1:]):
        mid, half = 0.5 * (t_lo + t_hi), 0.5 * (t_hi - t_lo)
        t = mid + half * xg
        with np.errstate(divide="ignore"):
            h_nodes.append(t ** (1.0 / alpha))
        h_weights.append(half * wg / alpha)
    floor = 1e-7 * min(h_max, 1.0)
    return np.maximum(np.concatenate(h_nodes), floor), np.concatenate(h_weights)


def _gagliardo_like(u, a, body, p, s, budget, use_psi, seed):
    """Raw double integral with kernel gauge^(N + p s), without the (1-s) factor."""
    dim = body.dim
    rule = sphere_rule(dim, budget.sphere_nodes, body=body)
    g = body.gauge(rule.nodes)
    kernel_w = rule.weights / g ** (dim + p * s)
    symmetric = a.is_zero
    radius = u.support_radius if symmetric else u.support_radius + budget.margin
    h_max = radius + u.support_radius

    if not u.smooth:
        return _gagliardo_indicator(u, body, s, budget, rule, kernel_w)

    h_nodes, h_weights = _gagliardo_radial(p, s, h_max, budget)
    use_phase = use_psi and not a.is_zero
    sup2 = u.support_radius**2
    tail_factor = h_max ** (-p * s) / (p * s) * float(np.einsum("m->", kernel_w))

    def values_fn(x_chunk):
        gpow, y = _psi_diff_pow(u, a, x_chunk, h_nodes, rule.nodes, p, use_phase)
        qpow = gpow / h_nodes[None, None, :] ** p
        if symmetric:
            outside = np.einsum("cmhk,cmhk->cmh", y, y) > sup2
            qpow = qpow * (1.0 + outside)
        rad = np.einsum("cmh,h->cm", qpow, h_weights)
        vals = np.einsum("cm,m->c", rad, kernel_w)
        ux_pow = scalar_mixed_modulus_pow(u.evaluate(x_chunk), p)
        tails = ux_pow * tail_factor * (2.0 if symmetric else 1.0)
        return vals + tails

    tau = _importance_tau(u) if budget.outer == "montecarlo" else None
    return _outer_integrate(values_fn, dim, radius, budget,
                            derive_seed(budget.seed, "gagliardo", seed), mask_radius=radius,
                            importance_tau=tau)


def _gagliardo_indicator(u, body, s, budget, rule, kernel_w):
    """p = 1 indicator path: exact radial integrals from ray/region intersections."""
    region = u.region
    radius = u.support_radius
    kw_sum = kernel_w  # per-sigma weights
    res = budget.resolution

    def value_at(resolution):
        tg = midpoint_grid(region.dim, radius, resolution)
        inside = region.contains(tg.points)
        vals = np.zeros(len(tg.points))
        idx = np.nonzero(inside)[0]
        for start in range(0, len(idx), 4096):
            sel = idx[start : start + 4096]
            _, t_hi = region.ray_interval(tg.points[sel][:, None, :], rule.nodes[None, :, :])
            t_hi = np.maximum(t_hi, 1e-300)
            contrib = t_hi ** (-s) / s
            vals[sel] = 2.0 * np.einsum("cm,m->c", contrib, kw_sum)
        return float(np.einsum("n,n->", tg.weights, vals))

    fine = value_at(res)
    coarse = value_at(max(res // 2, 8))
    return fine, abs(fine - coarse)


def gagliardo(u: ComplexField, spec: FunctionalSpec, budget: IntegrationBudget,
              seed: int = 0) -> tuple[float, float]:
    """Raw fractional seminorm (without the (1-s) normalization factor)."""
    if not isinstance(spec.kind, Gagliardo):
        raise TypeError("spec.kind must be Gagliardo")
    _validate_field(u, spec)
    if not u.smooth and spec.p != 1.0:
        raise ValueError("indicator fields require p = 1")
    return _gagliardo_like(u, spec.potential, spec.body, spec.p, spec.kind.s, budget,
                           use_psi=False, seed=seed)


# ---------------------------------------------------------------------------
# threshold (Nguyen-type) functional


def _scan_grid(h_max: float, budget: IntegrationBudget, max_step: float) -> np.ndarray:
    pts = [budget.scan_min_factor * h_max]
    while pts[-1] < h_max:
        step = min(pts[-1] * (budget.scan_ratio - 1.0), max_step)
        pts.append(min(pts[-1] + step, h_max))
    return np.asarray(pts)


def _radial_profile(u: ComplexField):
    """Max of |u| on probe circles, used for domain and proposal sizing."""
    radii = np.linspace(0.0, u.support_radius, 240)[1:]
    if u.dim == 1:
        probes = radii[:, None, None] * np.array([[1.0], [-1.0]])[None, :, :]
    else:
        angles = np.linspace(0.0, 2.0 * math.pi, 48, endpoint=False)
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        if u.dim > 2:
            extra = np.zeros((len(dirs), u.dim - 2))
            dirs = np.hstack([dirs, extra])
            dirs = np.vstack([dirs, np.eye(u.dim), -np.eye(u.dim)])
        probes = radii[:, None, None] * dirs[None, :, :]
    return radii, np.abs(u.evaluate(probes)).max(axis=1)


def _effective_radius(u: ComplexField, threshold: float) -> float:
    """Radius beyond which |u| stays below the threshold."""
    radii, mags = _radial_profile(u)
    live = np.nonzero(mags >= threshold)[0]
    if len(live) == 0:
        return 0.0
    return float(radii[live[-1]])


def _importance_tau(u: ComplexField) -> float:
    """Gaussian-proposal width matched to where |u| carries its mass."""
    radii, mags = _radial_profile(u)
    umax = float(mags.max())
    if umax <= 0.0:
        return 1.0
    live = np.nonzero(mags >= 0.05 * umax)[0]
    spread = float(radii[live[-1]]) if len(live) else u.support_radius
    return max(0.5, spread / 2.5)


def nguyen(u: ComplexField, spec: FunctionalSpec, budget: IntegrationBudget,
           seed: int = 0) -> tuple[float, float]:
    """Threshold functional I_delta with exact integration over superlevel intervals."""
    if not isinstance(spec.kind, Nguyen):
        raise TypeError("spec.kind must be Nguyen")
    _validate_field(u, spec)
    a, body, p = spec.potential, spec.body, spec.p
    delta = spec.kind.delta
    dim = body.dim
    rule = sphere_rule(dim, budget.sphere_nodes, body=body)
    g = body.gauge(rule.nodes)
    kernel_w = rule.weights / g ** (dim + p)
    radius = u.support_radius + budget.margin
    if budget.outer == "montecarlo":
        # uniform sampling needs a tight domain: beyond the radius where |u|
        # drops below delta/8 the x-contribution is O(delta^p / margin^p)
        radius = min(radius, _effective_radius(u, delta / 8.0) + budget.margin)
    h_max = radius + u.support_radius
    max_step = budget.scan_max_step
    if max_step is None:
        amax = a.max_norm(radius + 1.0)
        max_step = min(0.5, math.pi / (4.0 * amax)) if amax > 1e-12 else 0.5
    scan = _scan_grid(h_max, budget, max_step)
    use_phase = not a.is_zero
    delta_pow = delta**p
    m_count = rule.size

    def values_fn(x_chunk):
        c = len(x_chunk)
        gpow, _ = _psi_diff_pow(u, a, x_chunk, scan, rule.nodes, p, use_phase)
        fires = gpow > delta_pow  # (c, m, k)
        ux_pow = scalar_mixed_modulus_pow(u.evaluate(x_chunk), p)
        # prepend h = 0 (never fires); the last scan node sits at h_max where
        # the difference equals |u(x)|_p, so the state there persists to infinity
        state = np.concatenate([np.zeros((c, m_count, 1), dtype=bool), fires], axis=2)
        flips = state[:, :, 1:] != state[:, :, :-1]
        ci, mi, ki = np.nonzero(flips)
        if len(ci) == 0:
            return np.zeros(c)
        edges = np.concatenate([[0.0], scan])
        lo = edges[ki].copy()
        hi = edges[ki + 1].copy()
        rising = ~state[ci, mi, ki]  # crossing from below the threshold
        x_rays = x_chunk[ci]
        s_rays = rule.nodes[mi]
        for _ in range(budget.bisection_iters):
            mid = 0.5 * (lo + hi)
            y = x_rays + mid[:, None] * s_rays
            uy = u.evaluate(y)
            if use_phase:
                amid = a.evaluate(x_rays + (0.5 * mid)[:, None] * s_rays)
                uy = np.exp(-1j * mid * np.einsum("bk,bk->b", amid, s_rays)) * uy
            above = scalar_mixed_modulus_pow(uy - u.evaluate(x_rays), p) > delta_pow
            # mid already past the flip: tighten the upper end, else the lower
            on_far_side = above == rising
            hi = np.where(on_far_side, mid, hi)
            lo = np.where(on_far_side, lo, mid)
        crossing = 0.5 * (lo + hi)
        signed = np.where(rising, 1.0, -1.0) * crossing ** (-p)
        ray_vals = np.zeros((c, m_count))
        np.add.at(ray_vals, (ci, mi), signed)
        vals = (delta_pow / p) * np.einsum("cm,m->c", ray_vals, kernel_w)
        return vals

    tau = _importance_tau(u) if budget.outer == "montecarlo" else None
    return _outer_integrate(values_fn, dim, radius, budget,
                            derive_seed(budget.seed, "nguyen", seed), mask_radius=radius,
                            importance_tau=tau)


# ---------------------------------------------------------------------------
# mollified (BBM-type) functional


def bbm(u: ComplexField, spec: FunctionalSpec, budget: IntegrationBudget,
        seed: int = 0) -> tuple[float, float]:
    """Mollified difference functional for either mollifier family."""
    if not isinstance(spec.kind, Bbm):
        raise TypeError("spec.kind must be Bbm")
    _validate_field(u, spec)
    family, n = spec.kind.family, spec.kind.n
    if isinstance(family, LudwigFamily):
        if u.smooth or spec.potential.is_zero:
            s = family.s_value(n)
            factor = spec.p * (1.0 - s)
            raw, err = _gagliardo_like(u, spec.potential, spec.body, spec.p, s, budget,
                                       use_psi=True, seed=seed)
            return factor * raw, factor * err
        return _bbm_indicator(u, spec, budget)
    if u.smooth:
        return _bbm_shrinking_smooth(u, spec, budget, seed)
    return _bbm_indicator(u, spec, budget)


def _bbm_shrinking_smooth(u, spec, budget, seed):
    a, body, p = spec.potential, spec.body, spec.p
    n = spec.kind.n
    dim = body.dim
    rule = sphere_rule(dim, budget.sphere_nodes, body=body)
    g = body.gauge(rule.nodes)
    h_sup = 1.0 / (n * g)  # radial support endpoint per direction
    rho_const = float(dim) * float(n) ** dim
    xg, wg = np.polynomial.legendre.leggauss(max(budget.radial_order, 8))
    xi = 0.5 * (xg + 1.0)
    wxi = 0.5 * wg
    h_nodes = h_sup[:, None] * xi[None, :]  # (m, r)
    use_phase = not a.is_zero
    radius = u.support_radius + float(np.max(h_sup))
    # per-(sigma, h) quadrature weight: rho/g^p * h^(N-1) * dh
    w_mr = (rho_const / g**p)[:, None] * h_nodes ** (dim - 1) * (h_sup[:, None] * wxi[None, :])

    def values_fn(x_chunk):
        y = x_chunk[:, None, None, :] + h_nodes[None, :, :, None] * rule.nodes[None, :, None, :]
        uy = u.evaluate(y)
        ux = u.evaluate(x_chunk)
        if use_phase:
            mid = x_chunk[:, None, None, :] + 0.5 * h_nodes[None, :, :, None] * rule.nodes[None, :, None, :]
            dot = np.einsum("cmrk,mk->cmr", a.evaluate(mid), rule.nodes)
            uy = np.exp(-1j * h_nodes[None, :, :] * dot) * uy
        gpow = scalar_mixed_modulus_pow(uy - ux[:, None, None], p)
        qpow = gpow / h_nodes[None, :, :] ** p
        return np.einsum("cmr,mr,m->c", qpow, w_mr, rule.weights)

    tau = _importance_tau(u) if budget.outer == "montecarlo" else None
    return _outer_integrate(values_fn, dim, radius, budget,
                            derive_seed(budget.seed, "bbm", seed), mask_radius=radius,
                            importance_tau=tau)


def _bbm_indicator(u, spec, budget):
    """p = 1 indicator path: radial pieces cut at the ray/region intersection.

    Between the entry/exit radii the kernel difference has an explicit form
    in the magnetic phase alone, so no field evaluations are needed.
    """
    a, body = spec.potential, spec.body
    family, n = spec.kind.family, spec.kind.n
    region = u.region
    dim = body.dim
    rule = sphere_rule(dim, budget.sphere_nodes, body=body)
    g = body.gauge(rule.nodes)
    shrinking = isinstance(family, ShrinkingUniformFamily)
    if shrinking:
        h_cut = 1.0 / (n * g)  # rho vanishes beyond this
        radius = u.support_radius + float(np.max(h_cut))
    else:
        s = family.s_value(n)
        radius = u.support_radius + budget.margin
        h_cut = np.full(rule.size, radius + u.support_radius)
    use_phase = not a.is_zero
    xg, wg = np.polynomial.legendre.leggauss(max(budget.radial_order, 8))
    xi = 0.5 * (xg + 1.0)
    wxi = 0.5 * wg

    def rho_over_g(h, gg):
        # rho_n(h g) / g * h^(N-2) for p = 1
        if shrinking:
            rho = np.where(h * gg <= 1.0 / n, float(dim) * float(n) ** dim, 0.0)
        else:
            rho = 1.0 * (1.0 - s) * (h * gg) ** (1.0 - dim - s)
        return rho / gg * h ** (dim - 2)

    def values_fn_plain(x_chunk):
        # A = 0, shrinking family: the kernel difference is the 0/1 region flip
        # and the radial integral has an elementary primitive
        c = len(x_chunk)
        t_lo, t_hi = region.ray_interval(x_chunk[:, None, :], rule.nodes[None, :, :])
        inside = region.contains(x_chunk)
        cut = np.broadcast_to(h_cut[None, :], (c, rule.size))
        a_in = np.clip(t_lo, 0.0, cut)
        b_out = np.maximum(np.clip(t_hi, 0.0, cut), a_in)
        lo = np.where(inside[:, None], b_out, a_in)
        hi = np.where(inside[:, None], cut, np.minimum(b_out, cut))
        hi = np.maximum(hi, lo)
        e = dim - 1
        rho_const = float(dim) * float(n) ** dim
        seg = (hi**e - lo**e) / e if e > 0 else np.log(np.maximum(hi, 1e-300) / np.maximum(lo, 1e-300))
        return np.einsum("cm,m->c", seg, rule.weights * rho_const / g)

    def values_fn(x_chunk):
        c = len(x_chunk)
        t_lo, t_hi = region.ray_interval(x_chunk[:, None, :], rule.nodes[None, :, :])
        inside = region.contains(x_chunk)
        cut = np.broadcast_to(h_cut[None, :], (c, rule.size))
        a_in = np.clip(t_lo, 0.0, cut)
        b_out = np.maximum(np.clip(t_hi, 0.0, cut), a_in)
        # flatten all (x, sigma) rays; pieces are [0, a], [a, b], [b, cut]
        x_rep = np.repeat(x_chunk, rule.size, axis=0)
        s_rep = np.tile(rule.nodes, (c, 1))
        in_rep = np.repeat(inside, rule.size)
        g_rep = np.tile(g, c)
        a_f, b_f = a_in.ravel(), b_out.ravel()
        cut_f = cut.ravel()

        def seg_value(lo, hi, uy_val):
            """Integral over [lo, hi] of the radial piece where u(y) = uy_val."""
            mask = hi > lo + 1e-300
            out = np.zeros(len(lo))
            if not mask.any():
                return out
            width = hi[mask] - lo[mask]
            h = lo[mask][:, None] + width[:, None] * xi[None, :]
            base = rho_over_g(h, g_rep[mask][:, None])
            ux_val = in_rep[mask].astype(float)
            if use_phase and uy_val == 1.0:
                mid_pts = x_rep[mask][:, None, :] + 0.5 * h[:, :, None] * s_rep[mask][:, None, :]
                dot = np.einsum("brk,bk->br", a.evaluate(mid_pts), s_rep[mask])
                phase = -h * dot
                diff_pow = np.abs(np.cos(phase) - ux_val[:, None]) + np.abs(np.sin(phase))
            else:
                diff_pow = np.broadcast_to(np.abs(uy_val - ux_val)[:, None], h.shape)
            out[mask] = width * np.einsum("br,r->b", base * diff_pow, wxi)
            return out

        total = (
            seg_value(np.zeros_like(a_f), np.minimum(a_f, cut_f), 0.0)
            + seg_value(a_f, np.minimum(b_f, cut_f), 1.0)
            + seg_value(np.minimum(b_f, cut_f), cut_f, 0.0)
        )
        out = np.einsum("cm,m->c", total.reshape(c, rule.size), rule.weights)
        if not shrinking:
            # closed-form tail beyond the truncation where u(y) = 0
            tail = (1.0 - s) / s * (h_cut * g) ** (-s) / g ** dim
            out = out + inside.astype(float) * float(np.einsum("m,m->", tail, rule.weights))
        return out

    res = budget.resolution
    fn = values_fn_plain if (shrinking and not use_phase) else values_fn
    cut_max = float(np.max(h_cut))

    def run(resolution):
        tg = midpoint_grid(dim, radius, resolution)
        slack = region.offsets[None, :] - np.einsum("nk,fk->nf", tg.points, region.normals)
        if shrinking:
            # contributions only from the band around the region boundary
            live = np.abs(slack).min(axis=1) <= cut_max * 1.0000001
        else:
            live = np.ones(len(tg.points), dtype=bool)
        idx = np.nonzero(live)[0]
        chunk = 16384 if fn is values_fn_plain else 2048
        vals = np.zeros(len(tg.points))
        for start in range(0, len(idx), chunk):
            sel = idx[start : start + chunk]
            vals[sel] = fn(tg.points[sel])
        return float(np.einsum("n,n->", tg.weights, vals))

    fine = run(res)
    coarse = run(max(res // 2, 8))
    return fine, abs(fine - coarse)
