"""Small dense symmetric eigenproblems and discretized Grassmannians.

Eigenvalues come from cyclic Jacobi rotations applied to a whole stack of
matrices at once, which is what the finite-difference route needs (one
Hessian per lattice node).  :func:`courant_fischer` evaluates the min-max
characterization over a finite :class:`FrameSet` and is the discrete
counterpart of the inf-sup inside the DPP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MAX_DIM, fibonacci_directions


def symmetrize(a) -> np.ndarray:
    """Symmetric copy of a square matrix (or stack); exact mirror of the upper part."""
    m = np.array(a, dtype=float)
    if m.shape[-1] != m.shape[-2]:
        raise ValueError("matrix must be square")
    if not 1 <= m.shape[-1] <= MAX_DIM:
        raise ValueError(f"matrix dimension must be in 1..{MAX_DIM}")
    upper = np.triu(m)
    return upper + np.swapaxes(np.triu(m, 1), -1, -2)


def jacobi_eigh(a, tol: float = 1e-15, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors (columns) by cyclic Jacobi.

    Works on a single (N, N) matrix or a stack (..., N, N).  The input is
    assumed symmetric; only rotations in (p, q) planes are used, so the
    iteration converges for every symmetric input.
    """
    m = np.array(a, dtype=float)
    batch_shape = m.shape[:-2]
    n = m.shape[-1]
    A = m.reshape(-1, n, n).copy()
    V = np.broadcast_to(np.eye(n), A.shape).copy()
    scale = np.maximum(np.sqrt(np.sum(A * A, axis=(1, 2))), 1e-300)
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A[:, off_mask] ** 2, axis=1))
        if np.all(off <= tol * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[:, p, q]
                active = np.abs(apq) > 1e-300
                if not active.any():
                    continue
                safe = np.where(active, apq, 1.0)
                theta = (A[:, q, q] - A[:, p, p]) / (2.0 * safe)
                t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                c = np.where(active, c, 1.0)[:, None]
                s = np.where(active, s, 0.0)[:, None]
                cp, cq = A[:, :, p].copy(), A[:, :, q].copy()
                A[:, :, p] = c * cp - s * cq
                A[:, :, q] = s * cp + c * cq
                rp, rq = A[:, p, :].copy(), A[:, q, :].copy()
                A[:, p, :] = c * rp - s * rq
                A[:, q, :] = s * rp + c * rq
                A[:, p, q] = np.where(active, 0.0, A[:, p, q])
                A[:, q, p] = A[:, p, q]
                vp, vq = V[:, :, p].copy(), V[:, :, q].copy()
                V[:, :, p] = c * vp - s * vq
                V[:, :, q] = s * vp + c * vq
    w = np.diagonal(A, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w.reshape(batch_shape + (n,)), V.reshape(batch_shape + (n, n))


def eigenvalues_sym(a) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix or stack of matrices."""
    return jacobi_eigh(symmetrize(a))[0]


def lambda_j(a, j: int) -> np.ndarray | float:
    """j-th smallest eigenvalue (1-based), vectorized over stacks."""
    m = np.asarray(a, dtype=float)
    n = m.shape[-1]
    if not 1 <= j <= n:
        raise ValueError(f"eigenvalue index j={j} outside 1..{n}")
    w = eigenvalues_sym(m)[..., j - 1]
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True, eq=False)
class FrameSet:
    """Finite sample of Gr(j, R^N) plus sphere samples inside each subspace.

    ``frames[f]`` is a (j, N) array with orthonormal rows.  ``samples`` is an
    (S, j) array of unit vectors, the same for every frame; its first half
    are line representatives and the second half their negatives.
    """

    N: int
    j: int
    frames: np.ndarray
    samples: np.ndarray
    resolution: int
    seed: int

    @property
    def half(self) -> np.ndarray:
        return self.samples[: len(self.samples) // 2]

    def directions(self, half: bool = True) -> np.ndarray:
        """Unit vectors in R^N, shape (F, S or S/2, N)."""
        s = self.half if half else self.samples
        return np.einsum("sj,fjn->fsn", s, self.frames)


def _line_set(n: int, resolution: int, seed: int) -> np.ndarray:
    """Representatives of distinct lines through 0 in R^n; always contains the axes."""
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        ang = math.pi * np.arange(resolution) / resolution
        lines = np.column_stack([np.cos(ang), np.sin(ang)])
    elif n == 3:
        pts = fibonacci_directions(3, 2 * resolution)
        lines = pts[pts[:, 2] > 0]
    else:
        from scipy.stats import norm, qmc

        u = qmc.Halton(d=n, scramble=True, seed=seed).random(resolution)
        g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
        lines = g / np.linalg.norm(g, axis=1, keepdims=True)
    # canonical sign: first non-negligible coordinate positive
    lead = np.argmax(np.abs(lines) > 1e-12, axis=1)
    sign = np.sign(lines[np.arange(len(lines)), lead])
    lines = lines * sign[:, None]
    lines[np.abs(lines) < 1e-15] = 0.0
    for k in range(n):
        axis = np.eye(n)[k]
        if not np.any(np.all(np.abs(lines - axis) < 1e-12, axis=1)):
            lines = np.vstack([lines, axis])
    return lines


def complement_basis(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the hyperplane orthogonal to unit vectors ``u``.

    Vectorized over a stack (M, N) -> (M, N-1, N).  Coordinate axes map to the
    remaining coordinate axes exactly.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    m, n = u.shape
    out = np.empty((m, n - 1, n))
    eye = np.eye(n)
    k = np.argmax(np.abs(u), axis=1)
    for r in range(m):
        kk = k[r]
        if np.count_nonzero(u[r]) == 1:
            out[r] = np.delete(eye, kk, axis=0)
            continue
        # Householder reflector sending e_kk to -sign(u_kk) u (no cancellation);
        # the images of the other axes span u-perp.
        w = eye[kk] + u[r] * np.sign(u[r, kk])
        w = w / np.linalg.norm(w)
        H = eye - 2.0 * np.outer(w, w)
        out[r] = np.delete(H, kk, axis=0)
    return out


def _random_frames(n: int, j: int, count: int, seed: int) -> np.ndarray:
    from scipy.stats import norm, qmc

    frames = []
    engine = qmc.Halton(d=n * j, scramble=True, seed=seed)
    while len(frames) < count:
        u = engine.random(1)[0]
        g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12)).reshape(j, n)
        q, r = np.linalg.qr(g.T)
        if np.min(np.abs(np.diag(r))) < 1e-8:
            continue  # degenerate draw
        frames.append(q.T)
    return np.array(frames)


def generate_frames(N: int, j: int, resolution: int, seed: int = 0,
                    sphere_resolution: int | None = None) -> FrameSet:
    """Deterministic discretization of Gr(j, R^N) and of the unit sphere of R^j.

    ``resolution`` counts lines: for j = 1 it is the number of frames (plus
    any missing coordinate axes), for j = N it is the number of sampled lines
    in the single frame.  For 1 < j < N, ``sphere_resolution`` (default
    ``resolution``) sets the number of sampled lines inside each frame.
    """
    if not 1 <= N <= MAX_DIM:
        raise ValueError(f"N must be in 1..{MAX_DIM}")
    if not 1 <= j <= N:
        raise ValueError(f"j={j} outside 1..{N}")
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    sres = resolution if sphere_resolution is None else sphere_resolution
    if j == N:
        frames = np.eye(N)[None, :, :]
        lines = _line_set(N, resolution, seed)
    elif j == 1:
        frames = _line_set(N, resolution, seed)[:, None, :]
        lines = _line_set(1, 1, seed)
    elif j == N - 1:
        frames = complement_basis(_line_set(N, resolution, seed))
        lines = _line_set(j, sres, seed)
    else:
        from itertools import combinations

        eye = np.eye(N)
        coord = np.array([eye[list(c)] for c in combinations(range(N), j)])
        frames = np.concatenate([coord, _random_frames(N, j, resolution, seed)])
        lines = _line_set(j, sres, seed)
    samples = np.concatenate([lines, -lines])
    frames = np.ascontiguousarray(frames)
    frames.flags.writeable = False
    samples.flags.writeable = False
    return FrameSet(N, j, frames, samples, int(resolution), int(seed))


def courant_fischer(a, j: int, frames: FrameSet) -> float:
    """min over frames of max over sphere samples of <A v, v>."""
    A = symmetrize(a)
    if A.shape != (frames.N, frames.N) or frames.j != j:
        raise ValueError("frame set does not match matrix dimension / index")
    v = frames.directions(half=True)
    q = np.einsum("fsn,nm,fsm->fs", v, A, v)
    return float(np.min(np.max(q, axis=1)))
