"""Solvability / hypoellipticity of the Kohn Laplacian by degree.

The criterion is stated in terms of the signature ``(n+, n-)`` of ``A^lam``
over all nonzero ``lam``.  Signatures are locally constant away from the set
where some eigenvalue vanishes, so the sphere is sampled deterministically and
the sample is refined wherever an eigenvalue changes sign or touches zero.
The refined points land inside the zero tolerance and therefore pick up the
degenerate signatures, which is what the hypoellipticity test depends on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .levi import ZERO_TOL, QuadricForm, SpectralData, multi_index, spectral_batch


@dataclass(frozen=True)
class SphereSampler:
    """Deterministic sample of S^{m-1}.

    m = 1 uses both points; m = 2 uniform angles; m = 3 a Fibonacci lattice;
    m >= 4 a product grid in hyperspherical angles.  ``seed`` applies a fixed
    random rotation to the base lattice.  The coordinate directions ``+-e_j``
    are always included.
    """

    n_points: int = 2048
    refine: bool = True
    seed: Optional[int] = None
    zero_tol: float = ZERO_TOL

    def base_points(self, m: int) -> np.ndarray:
        if m == 1:
            return np.array([[1.0], [-1.0]])
        N = self.n_points
        if m == 2:
            offset = 0.0
            if self.seed is not None:
                offset = np.random.default_rng(self.seed).uniform(0, 2 * math.pi / N)
            th = offset + 2 * math.pi * np.arange(N) / N
            return np.column_stack([np.cos(th), np.sin(th)])
        if m == 3:
            i = np.arange(N) + 0.5
            phi = math.pi * (3.0 - math.sqrt(5.0)) * i
            zc = 1.0 - 2.0 * i / N
            rho = np.sqrt(1.0 - zc * zc)
            pts = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), zc])
        else:
            k = max(4, int(math.ceil(N ** (1.0 / (m - 1)))))
            polar = [(np.arange(k) + 0.5) * math.pi / k] * (m - 2)
            az = 2 * math.pi * np.arange(2 * k) / (2 * k)
            grids = np.meshgrid(*polar, az, indexing="ij")
            pts = hyperspherical(np.stack([g.ravel() for g in grids], axis=-1))
        if self.seed is not None:
            rot = _random_rotation(m, self.seed)
            pts = pts @ rot.T
        return pts

    def points(self, m: int) -> np.ndarray:
        pts = self.base_points(m)
        if m == 1:
            return pts
        eye = np.eye(m)
        return np.vstack([pts, eye, -eye])


def hyperspherical(angles: np.ndarray) -> np.ndarray:
    """Unit vectors from angles ``(psi_1..psi_{m-2}, phi)``."""
    angles = np.atleast_2d(angles)
    k = angles.shape[1]
    m = k + 1
    out = np.ones((angles.shape[0], m))
    for j in range(k):
        out[:, j] *= np.cos(angles[:, j])
        out[:, j + 1:] *= np.sin(angles[:, j])[:, None]
    return out


def _random_rotation(m: int, seed: int) -> np.ndarray:
    X = np.random.default_rng(seed).normal(size=(m, m))
    Qm, R = np.linalg.qr(X)
    return Qm * np.sign(np.diag(R))


@dataclass
class DegreeClassification:
    q: int
    solvable: bool
    hypoelliptic: bool
    solvable_witness: Optional[np.ndarray] = None
    hypoelliptic_witness: Optional[np.ndarray] = None
    n_samples: int = 0

    @property
    def witness(self):
        return self.solvable_witness if self.solvable_witness is not None else self.hypoelliptic_witness


@dataclass
class GammaReport:
    L: tuple
    nonempty_positive_measure: bool
    sample_points: list = field(default_factory=list)
    sphere_fraction_estimate: float = 0.0
    n_samples: int = 0


@dataclass
class SignatureSample:
    """Sphere sample together with the signature at each point."""

    alphas: np.ndarray
    mu: np.ndarray
    scale: np.ndarray
    n_base: int
    zero_tol: float

    @property
    def threshold(self):
        return self.zero_tol * self.scale

    @property
    def n_plus(self):
        return np.sum(self.mu > self.threshold[:, None], axis=1)

    @property
    def n_minus(self):
        return np.sum(self.mu < -self.threshold[:, None], axis=1)


def _unit(v):
    return v / np.linalg.norm(v)


def _eig_along(Q, a, b, j):
    """The j-th sorted eigenvalue (relative to scale) on the normalised chord a -> b."""

    def g(s):
        p = _unit((1 - s) * a + s * b)
        mu, _, scale = spectral_batch(Q, p[None, :])
        return mu[0, j] / max(scale[0], 1e-300), p

    return g


def _refine_pairs(Q, pts, mu, scale, pairs, tol):
    """Extra points at eigenvalue zeros along the chords listed in ``pairs``."""
    extra = []
    rel = mu / np.maximum(scale, 1e-300)[:, None]
    n = mu.shape[1]
    for i, k in pairs:
        a, b = pts[i], pts[k]
        for j in range(n):
            fa, fb = rel[i, j], rel[k, j]
            g = _eig_along(Q, a, b, j)
            if abs(fa) <= tol or abs(fb) <= tol:
                continue
            if fa * fb < 0:
                s = brentq(lambda s: g(s)[0], 0.0, 1.0, xtol=1e-15, rtol=1e-15, maxiter=200)
                extra.append(g(s)[1])
    return extra


def _refine_touching(Q, pts, mu, scale, triples, tol):
    """Extra points at local minima of |mu_j| that may touch zero without a sign change."""
    extra = []
    rel = np.abs(mu / np.maximum(scale, 1e-300)[:, None])
    n = mu.shape[1]
    for i, c, k in triples:
        for j in range(n):
            if not (rel[c, j] <= rel[i, j] and rel[c, j] <= rel[k, j]) or rel[c, j] <= tol:
                continue
            if rel[c, j] > 1e-2:
                continue
            a, b = pts[i], pts[k]
            g = _eig_along(Q, a, b, j)
            res = minimize_scalar(lambda s: abs(g(s)[0]), bounds=(0.0, 1.0), method="bounded",
                                  options={"xatol": 1e-14, "maxiter": 500})
            if abs(g(res.x)[0]) <= tol:
                extra.append(g(res.x)[1])
    return extra


def sample_signatures(Q: QuadricForm, sampler: SphereSampler | None = None) -> SignatureSample:
    """Evaluate the spectrum over the sampler's points plus refinement points."""
    sampler = sampler or SphereSampler()
    m = Q.m
    base = sampler.base_points(m)
    pts = sampler.points(m)
    mu, _, scale = spectral_batch(Q, pts)
    if sampler.refine and m >= 2:
        tol = sampler.zero_tol
        if m == 2:
            N = base.shape[0]
            pairs = [(i, (i + 1) % N) for i in range(N)]
            triples = [((i - 1) % N, i, (i + 1) % N) for i in range(N)]
        else:
            N = base.shape[0]
            G = base @ base.T
            np.fill_diagonal(G, -np.inf)
            nbrs = np.argsort(-G, axis=1)[:, :6]
            pairs = sorted({(min(i, k), max(i, k)) for i in range(N) for k in nbrs[i]})
            triples = [(nbrs[c, 0], c, nbrs[c, 1]) for c in range(N)]
        extra = _refine_pairs(Q, base, mu[:N], scale[:N], pairs, tol)
        extra += _refine_touching(Q, base, mu[:N], scale[:N], triples, tol)
        if extra:
            ex = np.array(extra)
            emu, _, escale = spectral_batch(Q, ex)
            pts = np.vstack([pts, ex])
            mu = np.vstack([mu, emu])
            scale = np.concatenate([scale, escale])
    return SignatureSample(pts, mu, scale, base.shape[0], sampler.zero_tol)


def signature_set(Q: QuadricForm, sampler: SphereSampler | None = None) -> set:
    """Set of ``(n+, n-)`` pairs attained over the (refined) sphere sample."""
    s = sample_signatures(Q, sampler)
    return set(zip(s.n_plus.tolist(), s.n_minus.tolist()))


def classify_degree(Q: QuadricForm, q: int, sampler: SphereSampler | None = None,
                    sample: SignatureSample | None = None) -> DegreeClassification:
    """Solvability and hypoellipticity of the Kohn Laplacian on (0, q)-forms."""
    n = Q.n
    if not 0 <= q <= n:
        raise ValueError(f"degree q={q} outside 0..{n}")
    s = sample or sample_signatures(Q, sampler)
    npl, nmi = s.n_plus, s.n_minus
    bad_solv = np.flatnonzero((npl == q) & (nmi == n - q))
    bad_hypo = np.flatnonzero((npl <= q) & (nmi <= n - q))
    return DegreeClassification(
        q=q,
        solvable=bad_solv.size == 0,
        hypoelliptic=bad_hypo.size == 0,
        solvable_witness=s.alphas[bad_solv[0]] if bad_solv.size else None,
        hypoelliptic_witness=s.alphas[bad_hypo[0]] if bad_hypo.size else None,
        n_samples=s.alphas.shape[0],
    )


def in_gamma(mu: np.ndarray, threshold, L: tuple) -> np.ndarray:
    """Strict sign pattern test: positive on ``L``, negative off ``L`` (1-based)."""
    mu = np.atleast_2d(mu)
    n = mu.shape[-1]
    want = -np.ones(n)
    if L:
        want[np.asarray(L) - 1] = 1.0
    thr = np.asarray(threshold)[..., None] if np.ndim(threshold) else threshold
    return np.all(mu * want > thr, axis=-1)


def gamma_report(Q: QuadricForm, L: Sequence[int], sampler: SphereSampler | None = None,
                 sample: SignatureSample | None = None, max_points: int = 16) -> GammaReport:
    """Whether the cone where the eigenvalue signs follow ``L`` is nonempty.

    The fraction is counted over the uniform base sample (counting measure
    when m = 1).
    """
    L = multi_index(L, Q.n)
    s = sample or sample_signatures(Q, sampler)
    hit = in_gamma(s.mu, s.threshold, L)
    idx = np.flatnonzero(hit)
    frac = float(np.mean(hit[: s.n_base]))
    return GammaReport(
        L=L,
        nonempty_positive_measure=bool(idx.size),
        sample_points=[s.alphas[i] for i in idx[:max_points]],
        sphere_fraction_estimate=frac,
        n_samples=s.alphas.shape[0],
    )


def epsilon_signs(S: SpectralData, L: Sequence[int]) -> np.ndarray:
    """``eps_j = sgn(mu_j)`` for ``j`` in ``L``, ``-sgn(mu_j)`` otherwise.

    Only the ``nu`` eigenvalues outside the zero tolerance are returned, in
    label order.
    """
    L = multi_index(L, S.n)
    signs = S.signs
    flip = -np.ones(S.n, dtype=int)
    if L:
        flip[np.asarray(L) - 1] = 1
    keep = signs != 0
    return (signs * flip)[keep]


def sign_pattern(S: SpectralData, L: Sequence[int]):
    """Per-eigenvalue data used by the kernel integrands.

    Returns ``(abs_mu, eps, gamma)``: ``|mu_j|`` with sub-tolerance values set
    to exactly 0, the full-length sign vector with 0 in the zero slots, and
    whether ``alpha`` lies in the cone for ``L``.
    """
    L = multi_index(L, S.n)
    signs = S.signs
    flip = -np.ones(S.n, dtype=int)
    if L:
        flip[np.asarray(L) - 1] = 1
    eps = signs * flip
    abs_mu = np.where(signs != 0, np.abs(S.mu), 0.0)
    gamma = bool(np.all(eps == 1))
    return abs_mu, eps, gamma
