"""Mixed complex modulus, moment-body norms and their dual.

The central object is the norm

    ||v||_{p,K} = ( (N+p)/p * integral_K |v . x|_p^p dx )^(1/p),   v in C^N,

which is evaluated either by Monte Carlo over the body or through the
equivalent surface representation

    ||v||_{p,K}^p = (1/p) * integral_{S^{N-1}} |v . s|_p^p / gauge(s)^{N+p} ds.

Agreement of the two routes is itself a correctness check and is exercised by
the acceptance suite.  All hot-path contractions use einsum/broadcasting (no
BLAS) so results are bitwise reproducible regardless of threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .bodies import ConvexBody
from .seeding import derive_seed
from .spheres import SphereRule, circle_panels, slice_rule, sphere_rule

# relative accuracy of the multistart ascent in dual_norm_z1 at N <= 3
DUAL_NORM_RELATIVE_TOL = 1e-4


def mixed_modulus(z, p: float) -> float | np.ndarray:
    """(|Re z|^p + |Im z|^p)^(1/p) with Euclidean norms of the part vectors.

    ``z`` is a complex vector or an (..., N) batch; for real z this equals the
    Euclidean norm for every p.
    """
    if p < 1.0:
        raise ValueError("p must satisfy p >= 1")
    z = np.asarray(z, dtype=complex)
    single = z.ndim == 1
    re = np.sqrt(np.einsum("...k,...k->...", z.real, z.real))
    im = np.sqrt(np.einsum("...k,...k->...", z.imag, z.imag))
    val = (re**p + im**p) ** (1.0 / p)
    return float(val) if single else val


def scalar_mixed_modulus_pow(z: np.ndarray, p: float) -> np.ndarray:
    """|z|_p^p for an array of complex scalars: |Re z|^p + |Im z|^p."""
    if p == 2.0:
        return z.real**2 + z.imag**2
    if p == 1.0:
        return np.abs(z.real) + np.abs(z.imag)
    return np.abs(z.real) ** p + np.abs(z.imag) ** p


def _kpn_adapted(p: float, dim: int, omega: np.ndarray) -> float:
    """Sphere quadrature of |omega . sigma|^p with nodes adapted to omega.

    The integrand has a kink on the great circle {omega . sigma = 0}; aligning
    panel boundaries with that circle restores spectral accuracy for any
    direction.
    """
    omega = omega / np.linalg.norm(omega)
    if dim == 1:
        return 2.0  # counting measure on {-1, +1}
    if dim == 2:
        phi = math.atan2(omega[1], omega[0])
        rule = circle_panels([phi + math.pi / 2.0, phi + 3.0 * math.pi / 2.0], 64,
                             with_coarse=False)
    else:
        rule = slice_rule(dim, omega, 64, with_coarse=False)
    proj = np.abs(np.einsum("mk,k->m", rule.nodes, omega)) ** p
    return float(np.einsum("m,m->", proj, rule.weights))


def kpn_constant(p: float, dim: int, rule: SphereRule | None = None,
                 omega=None) -> float:
    """(1/p) * integral_{S^{N-1}} |w . x|^p dsigma for a fixed unit w.

    The value is direction independent; by default the implementation
    integrates against e_1 with a kink-adapted rule and cross-checks a second
    direction to 1e-10 relative.  Passing ``rule`` evaluates on that rule
    instead (accuracy then limited by the rule).
    """
    if p < 1.0:
        raise ValueError("p must satisfy p >= 1")
    if rule is not None:
        w = np.zeros(dim)
        w[0] = 1.0
        if omega is not None:
            w = np.asarray(omega, dtype=float)
            w /= np.linalg.norm(w)
        proj = np.abs(np.einsum("mk,k->m", rule.nodes, w)) ** p
        return float(np.einsum("m,m->", proj, rule.weights)) / p
    if omega is not None:
        return _kpn_adapted(p, dim, np.asarray(omega, dtype=float)) / p
    e1 = np.zeros(dim)
    e1[0] = 1.0
    val1 = _kpn_adapted(p, dim, e1) / p
    val2 = _kpn_adapted(p, dim, np.ones(dim)) / p
    if abs(val1 - val2) > 1e-10 * max(abs(val1), 1.0):
        raise RuntimeError(
            f"direction dependence detected: {val1!r} vs {val2!r} for p={p}, N={dim}"
        )
    return val1


def adapted_moment_rule(body: ConvexBody, v: np.ndarray, order: int = 32) -> SphereRule:
    """Sphere rule adapted to the kinks of |v . sigma|_p^p over the given body.

    At N = 2 the panels are aligned with the zeros of both the real and
    imaginary projections and with the body's facet switches, so the norm
    integrand is smooth on every panel.  At N >= 3 the rule is sliced along
    the dominant part of v (the remaining kink circle of the other part, and
    polytope edges, stay unresolved but are weaker).
    """
    dim = body.dim
    v = np.asarray(v, dtype=complex)
    if dim == 1:
        return sphere_rule(1)
    if dim == 2:
        breaks = list(body.facet_angles() if body.facet_angles() is not None else [])
        for part in (v.real, v.imag):
            norm = float(np.sqrt(part @ part))
            if norm > 0.0:
                phi = math.atan2(part[1], part[0])
                breaks.extend([phi + math.pi / 2.0, phi - math.pi / 2.0])
        if not breaks:
            breaks = [0.0, math.pi]
        return circle_panels(breaks, order)
    re_n = float(np.sqrt(v.real @ v.real))
    im_n = float(np.sqrt(v.imag @ v.imag))
    if max(re_n, im_n) == 0.0:
        return sphere_rule(dim)
    axis = v.real if re_n >= im_n else v.imag
    return slice_rule(dim, axis, max(order, 48))


class SphereMomentKernel:
    """Precomputed surface rule for ||.||_{p,K}^p of batches of complex vectors.

    Stores the rule nodes together with weights/gauge^(N+p) so a norm
    evaluation is a single contraction.  Shared by the local-energy and
    nonlocal-functional integrators.
    """

    def __init__(self, body: ConvexBody, p: float, rule: SphereRule | None = None):
        if p < 1.0:
            raise ValueError("p must satisfy p >= 1")
        self.body = body
        self.p = float(p)
        self.rule = rule or sphere_rule(body.dim, body=body)
        if self.rule.dim != body.dim:
            raise ValueError("sphere rule dimension does not match the body")
        g = body.gauge(self.rule.nodes)
        self.kernel_weights = self.rule.weights / g ** (body.dim + p) / p
        coarse = self.rule.coarse
        self._coarse = None
        if coarse is not None:
            gc = body.gauge(coarse.nodes)
            self._coarse = (coarse.nodes, coarse.weights / gc ** (body.dim + p) / p)

    def norms_pow_p(self, v: np.ndarray) -> np.ndarray:
        """||v_i||^p for an (..., N) complex batch."""
        v = np.asarray(v, dtype=complex)
        re = np.einsum("...k,mk->...m", v.real, self.rule.nodes)
        im = np.einsum("...k,mk->...m", v.imag, self.rule.nodes)
        return np.einsum("...m,m->...", scalar_mixed_modulus_pow(re + 1j * im, self.p),
                         self.kernel_weights)

    def norm(self, v) -> float:
        return float(self.norms_pow_p(np.asarray(v, dtype=complex))) ** (1.0 / self.p)

    def norm_error_estimate(self, v) -> float:
        """|value - value(coarse rule)| as a quadrature error proxy."""
        if self._coarse is None:
            return 0.0
        v = np.asarray(v, dtype=complex)
        nodes, weights = self._coarse
        re = np.einsum("...k,mk->...m", v.real, nodes)
        im = np.einsum("...k,mk->...m", v.imag, nodes)
        coarse_pow = np.einsum(
            "...m,m->...", scalar_mixed_modulus_pow(re + 1j * im, self.p), weights
        )
        fine = self.norms_pow_p(v)
        return float(np.max(np.abs(fine ** (1.0 / self.p) - coarse_pow ** (1.0 / self.p))))


@dataclass(frozen=True)
class BodyMonteCarlo:
    samples: int
    seed: int


@dataclass(frozen=True)
class SphereQuadrature:
    nodes: int = 0  # 0 = per-dimension default


class MomentNormEvaluator:
    """Evaluator of ||.||_{p,K} on C^N with a chosen integration method.

    Immutable after construction.  Monte Carlo sample streams are derived from
    (construction seed, caller-provided stream index), so concurrent callers
    that pass distinct streams get independent draws and thread count never
    changes any result.
    """

    def __init__(self, body: ConvexBody, p: float, method: BodyMonteCarlo | SphereQuadrature):
        if p < 1.0:
            raise ValueError("p must satisfy p >= 1")
        self.body = body
        self.p = float(p)
        self.method = method
        self.normalizer = (body.dim + p) / p

    def _samples(self, stream: int) -> np.ndarray:
        assert isinstance(self.method, BodyMonteCarlo)
        seed = derive_seed(self.method.seed, "moment-norm", stream)
        return self.body.sample_uniform(self.method.samples, seed)


def moment_norm_batch(
    ev: MomentNormEvaluator, v: np.ndarray, stream: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Moment-body norms of the rows of ``v`` with error estimates.

    Monte Carlo: value from vol(K) * sample mean of |v . x|_p^p, error as the
    propagated standard error of that mean.  Sphere quadrature: deterministic
    value, error from comparing against the coarsened rule.
    """
    v = np.atleast_2d(np.asarray(v, dtype=complex))
    if v.shape[-1] != ev.body.dim:
        raise ValueError("vector dimension does not match the body")
    if isinstance(ev.method, BodyMonteCarlo):
        if ev.method.samples < 1:
            raise ValueError("evaluator has zero samples")
        pts = ev._samples(stream)
        re = np.einsum("vk,nk->vn", v.real, pts)
        im = np.einsum("vk,nk->vn", v.imag, pts)
        pw = scalar_mixed_modulus_pow(re + 1j * im, ev.p)
        mean = np.einsum("vn->v", pw) / pts.shape[0]
        var = np.einsum("vn->v", (pw - mean[:, None]) ** 2) / max(pts.shape[0] - 1, 1)
        sem = np.sqrt(var / pts.shape[0])
        vol = ev.body.volume()
        integral = ev.normalizer * vol * mean
        values = integral ** (1.0 / ev.p)
        with np.errstate(divide="ignore", invalid="ignore"):
            errors = np.where(
                integral > 0.0,
                values * (ev.normalizer * vol * sem) / (ev.p * np.maximum(integral, 1e-300)),
                0.0,
            )
        return values, errors
    order = ev.method.nodes or 32
    results = [moment_norm_sphere(ev, row, order=order) for row in v]
    return np.array([r[0] for r in results]), np.array([r[1] for r in results])


def moment_norm(ev: MomentNormEvaluator, v, stream: int = 0) -> tuple[float, float]:
    values, errors = moment_norm_batch(ev, np.asarray(v, dtype=complex)[None, :], stream)
    return float(values[0]), float(errors[0])


def moment_norm_sphere(
    ev: MomentNormEvaluator, v, rule: SphereRule | None = None, order: int = 32
) -> tuple[float, float]:
    """Surface-representation route for the same norm (the identity check).

    By default the rule is adapted to the kinks of this particular vector;
    passing ``rule`` integrates on that rule instead.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape[-1] != ev.body.dim:
        raise ValueError("vector dimension does not match the body")
    if rule is None:
        rule = adapted_moment_rule(ev.body, v, order)
    kernel = SphereMomentKernel(ev.body, ev.p, rule)
    return kernel.norm(v), kernel.norm_error_estimate(v)


def dual_norm_z1(body: ConvexBody, w, rule: SphereRule | None = None) -> float:
    """Dual norm sup{<v, w> : ||v||_{1,K} <= 1} over real vectors.

    Maximizes <s, w>/||s||_{1,K} over unit directions: a dense direction scan
    seeds a local ascent on the sphere.  The result is a lower bound
    converging to the supremum as the scan refines (quoted: 1e-4 relative at
    N <= 3).
    """
    if np.iscomplexobj(np.asarray(w)):
        raise ValueError("dual norm is defined for real vectors")
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.shape[0] != body.dim:
        raise ValueError("w must be a real vector matching the body dimension")
    if not np.any(w):
        return 0.0
    kernel = SphereMomentKernel(body, 1.0, rule or sphere_rule(body.dim, body=body))
    scan = sphere_rule(body.dim, 1024 if body.dim == 2 else 8192, body=body)
    ratios = np.einsum("mk,k->m", scan.nodes, w) / kernel.norms_pow_p(scan.nodes.astype(complex))
    best = float(np.max(ratios))
    if body.dim == 1:
        return best

    def neg_ratio_angles(angles: np.ndarray) -> float:
        sigma = _sigma_from_angles(angles, body.dim)
        val = float(np.einsum("k,k->", sigma, w)) / float(
            kernel.norms_pow_p(sigma.astype(complex))
        )
        return -val

    start = scan.nodes[int(np.argmax(ratios))]
    x0 = _angles_from_sigma(start)
    res = optimize.minimize(neg_ratio_angles, x0, method="Nelder-Mead",
                            options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 400})
    return max(best, float(-res.fun))


def dual_norm_z1_batch(body: ConvexBody, ws, rule: SphereRule | None = None) -> np.ndarray:
    """Vectorized dual norms at N = 2: dense angular scan plus a parabolic
    refinement around each maximizer (kink maximizers keep the scan value)."""
    ws = np.atleast_2d(np.asarray(ws, dtype=float))
    if body.dim == 1:
        kernel = SphereMomentKernel(body, 1.0, rule or sphere_rule(1))
        norm_plus = float(kernel.norms_pow_p(np.array([1.0 + 0j])))
        return np.abs(ws[:, 0]) / norm_plus
    if body.dim != 2:
        return np.array([dual_norm_z1(body, w, rule) for w in ws])
    kernel = SphereMomentKernel(body, 1.0, rule or sphere_rule(2, body=body))
    m = 2048
    theta = 2.0 * np.pi * np.arange(m) / m
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    inv_norms = 1.0 / kernel.norms_pow_p(dirs.astype(complex))
    ratios = np.einsum("nk,mk->nm", ws, dirs) * inv_norms[None, :]
    j = np.argmax(ratios, axis=1)
    rows = np.arange(len(ws))
    f0 = ratios[rows, j]
    f_minus = ratios[rows, (j - 1) % m]
    f_plus = ratios[rows, (j + 1) % m]
    denom = f_minus - 2.0 * f0 + f_plus
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(np.abs(denom) > 1e-300,
                         0.5 * (f_minus - f_plus) / denom, 0.0)
    shift = np.clip(shift, -1.0, 1.0) * (2.0 * np.pi / m)
    t_ref = theta[j] + shift
    refined = np.stack([np.cos(t_ref), np.sin(t_ref)], axis=1)
    f_ref = np.einsum("nk,nk->n", ws, refined) / kernel.norms_pow_p(refined.astype(complex))
    return np.maximum(f0, f_ref)


def _sigma_from_angles(angles: np.ndarray, dim: int) -> np.ndarray:
    if dim == 2:
        return np.array([np.cos(angles[0]), np.sin(angles[0])])
    theta, phi = angles
    return np.array(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)]
    )


def _angles_from_sigma(sigma: np.ndarray) -> np.ndarray:
    if len(sigma) == 2:
        return np.array([np.arctan2(sigma[1], sigma[0])])
    return np.array([np.arctan2(sigma[1], sigma[0]), np.arccos(np.clip(sigma[2], -1, 1))])
