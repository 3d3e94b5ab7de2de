"""Monte-Carlo simulation of the subspace/vector tug-of-war game.

At each turn the minimizer picks a j-dimensional subspace S (as an
orthonormal frame), the maximizer picks a unit vector v in S, and a fair
coin moves the token to x + eps*v or x - eps*v while the clock drops by
eps^2/2.  The game stops the first time the token leaves the domain or the
clock reaches t <= 0; the maximizer is then paid h(x_tau, t_tau).

Strategies are vectorized callables working on a batch of games that advance
in lockstep.  A minimizer rule has the signature ``rule(x, t, k, x0)`` and
returns frames of shape (R, j, N); a maximizer rule ``rule(x, t, k, x0,
frames)`` returns unit vectors (R, N).  They see the current state, the
turn index and the starting point, which is all the shipped strategies use.

Randomness: game ``r`` of a batch with base seed ``s`` draws its coins from
``Philox(SeedSequence([s, r]))`` in blocks of :data:`COIN_BLOCK`, so a game
replays bit-for-bit whether it runs alone or inside a batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Domain, PayoffData, ValueSlice, interpolate, payoff_values
from .dpp import EllipticResult, FieldEvaluator, ParabolicResult
from .eig import FrameSet, complement_basis

COIN_BLOCK = 4096
ELLIPTIC_STEP_CAP = 10_000_000
RNG_NAME = "numpy.random.Philox(SeedSequence([base_seed, run]))"
UNIT_TOL = 1e-12


def coin_generator(base_seed: int, run: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(base_seed), int(run)])))


def _coin_block(gen: np.random.Generator) -> np.ndarray:
    return gen.integers(0, 2, size=COIN_BLOCK, dtype=np.uint8).astype(bool)


@dataclass(frozen=True)
class Strategy:
    role: str
    rule: Callable
    name: str = "custom"

    def __post_init__(self):
        if self.role not in ("minimizer", "maximizer"):
            raise ValueError(f"unknown strategy role {self.role!r}")


@dataclass(frozen=True, eq=False)
class GameTrajectory:
    """One played game.  ``states`` has shape (tau+1, N), ``times`` (tau+1,)."""

    states: np.ndarray
    times: np.ndarray
    tau: int
    exit: tuple[np.ndarray, float]
    payoff: float
    coins: np.ndarray
    seed: tuple[int, int]
    censored: bool = False


@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    stderr: float
    runs: int

    def __post_init__(self):
        if self.runs < 2:
            raise ValueError("a value estimate needs at least two runs")

    @property
    def radius(self) -> float:
        """Half-width of the 95% normal confidence interval."""
        return 1.96 * self.stderr


@dataclass(eq=False)
class GameBatch:
    """Per-game summaries of a lockstep batch."""

    x0: np.ndarray
    t0: np.ndarray | None
    epsilon: float
    tau: np.ndarray
    exit_x: np.ndarray
    exit_t: np.ndarray
    payoff: np.ndarray
    censored: np.ndarray
    base_seed: int
    drift: list = field(default_factory=list)  # per-turn (count, mean, var) of M_{k+1}-M_k

    @property
    def runs(self) -> int:
        return len(self.tau)


def _check_moves(frames: np.ndarray, v: np.ndarray) -> None:
    if np.any(np.abs(np.linalg.norm(v, axis=1) - 1.0) > UNIT_TOL):
        raise AssertionError("maximizer returned a non-unit vector")
    proj = np.einsum("rjn,rj->rn", frames, np.einsum("rjn,rn->rj", frames, v))
    if np.any(np.linalg.norm(proj - v, axis=1) > 1e-10):
        raise AssertionError("maximizer vector is not in the chosen subspace")


def simulate(domain: Domain, payoff: PayoffData, s_min: Strategy, s_max: Strategy,
             starts, epsilon: float, base_seed: int, t0=None, run_offset: int = 0,
             step_cap: int = ELLIPTIC_STEP_CAP, record: bool = False, check: bool = True):
    """Play one game per row of ``starts`` in lockstep.

    With ``t0`` (scalar or per game) the clock runs; with ``t0=None`` the game
    is the stationary one: only exiting the domain stops it, games reaching
    ``step_cap`` turns are censored, and the payoff reads ``g(x, +inf)``.
    Returns a :class:`GameBatch`, plus the full paths when ``record``.
    """
    if s_min.role != "minimizer" or s_max.role != "maximizer":
        raise ValueError("strategy roles are (minimizer, maximizer)")
    x = np.array(np.atleast_2d(starts), dtype=float)
    R, N = x.shape
    if not np.all(domain.contains(x)):
        raise ValueError("every start must lie inside the domain")
    clock = t0 is not None
    dt = epsilon ** 2 / 2
    t = np.broadcast_to(np.asarray(t0 if clock else np.inf, dtype=float), (R,)).copy()
    if clock and np.any(t <= 0):
        raise ValueError("start times must be positive")
    x0 = x.copy()
    t_start = t.copy()
    gens = [coin_generator(base_seed, run_offset + r) for r in range(R)]
    coins = np.empty((R, COIN_BLOCK), dtype=bool)
    tau = np.zeros(R, dtype=np.int64)
    alive = np.ones(R, dtype=bool)
    censored = np.zeros(R, dtype=bool)
    paths = [[x0[r].copy()] for r in range(R)] if record else None
    flips = [[] for _ in range(R)] if record else None
    drift = []
    cap = step_cap if not clock else int(math.ceil(np.max(t) / dt - 1e-9)) + 1
    k = 0
    while alive.any():
        if k >= cap:
            censored[alive] = True
            break
        if k % COIN_BLOCK == 0:
            for r in np.flatnonzero(alive):
                coins[r] = _coin_block(gens[r])
        a = np.flatnonzero(alive)
        xa, ta = x[a], t[a]
        frames = s_min.rule(xa, ta, k, x0[a])
        v = s_max.rule(xa, ta, k, x0[a], frames)
        if check:
            _check_moves(frames, v)
        sign = np.where(coins[a, k % COIN_BLOCK], 1.0, -1.0)
        step = sign[:, None] * epsilon * v
        dm = 2.0 * np.sum((xa - x0[a]) * step, axis=1)  # M_{k+1} - M_k
        drift.append((len(a), float(dm.mean()), float(dm.var(ddof=1)) if len(a) > 1 else 0.0))
        x[a] = xa + step
        if clock:
            t[a] = t_start[a] - (k + 1) * dt
        k += 1
        tau[a] = k
        done = ~domain.contains(x[a])
        if clock:
            done |= t[a] <= 1e-12 * max(1.0, epsilon ** 2)
        if record:
            for i, r in enumerate(a):
                paths[r].append(x[r].copy())
                flips[r].append(bool(sign[i] > 0))
        alive[a[done]] = False
    if clock:
        t = np.where(np.abs(t) <= 1e-12, 0.0, t)
    pay = np.full(R, np.nan)
    fin = ~censored
    if fin.any():
        for tv in np.unique(t[fin]):
            sel = fin & (t == tv)
            pay[sel] = payoff_values(payoff, domain, x[sel], float(tv))
    start_t = np.broadcast_to(np.asarray(t0, dtype=float), (R,)).copy() if clock else None
    batch = GameBatch(x0, start_t, float(epsilon), tau, x, t, pay, censored, int(base_seed), drift)
    if record:
        return batch, paths, flips
    return batch


def play(domain: Domain, payoff: PayoffData, s_min: Strategy, s_max: Strategy, start,
         epsilon: float, seed: int, run: int = 0) -> GameTrajectory:
    """A single game started at ``start = (x0, t0)``; ``t0=None`` disables the clock."""
    x0, t0 = start
    batch, paths, flips = simulate(domain, payoff, s_min, s_max, np.atleast_2d(x0), epsilon,
                                   seed, t0=t0, run_offset=run, record=True)
    dt = epsilon ** 2 / 2
    tau = int(batch.tau[0])
    times = (np.full(tau + 1, np.inf) if t0 is None
             else float(t0) - dt * np.arange(tau + 1))
    if t0 is not None:
        times[np.abs(times) <= 1e-12] = 0.0
    return GameTrajectory(np.array(paths[0]), times, tau,
                          (batch.exit_x[0].copy(), float(batch.exit_t[0])),
                          float(batch.payoff[0]), np.array(flips[0], dtype=bool),
                          (int(seed), int(run)), bool(batch.censored[0]))


def estimate_value(domain: Domain, payoff: PayoffData, s_min: Strategy, s_max: Strategy,
                   start, epsilon: float, runs: int, base_seed: int,
                   batch_size: int = 2000) -> ValueEstimate:
    """Mean payoff over ``runs`` independent games from one start."""
    if runs < 2:
        raise ValueError("runs must be at least 2")
    x0, t0 = start
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    pays = []
    for lo in range(0, runs, batch_size):
        n = min(batch_size, runs - lo)
        b = simulate(domain, payoff, s_min, s_max, np.tile(x0, (n, 1)), epsilon, base_seed,
                     t0=t0, run_offset=lo)
        if b.censored.any():
            raise RuntimeError("censored games cannot enter a value estimate")
        pays.append(b.payoff)
    p = np.concatenate(pays)
    return ValueEstimate(float(p.mean()), float(p.std(ddof=1) / math.sqrt(len(p))), len(p))


# ---------------------------------------------------------------- strategies

class _StaticField:
    """Stationary DPP solution read at arbitrary points (g outside the domain)."""

    def __init__(self, result: EllipticResult, g):
        self.slice = result.slice
        self.grid = result.grid
        self.domain = result.grid.domain
        self.g = g
        self.epsilon = result.slice.epsilon

    def __call__(self, x, t=None):
        out = np.empty(len(x))
        inside = self.domain.contains(x)
        if inside.any():
            out[inside] = interpolate(self.slice, self.grid, x[inside])
        if (~inside).any():
            out[~inside] = self.g(x[~inside], math.inf)
        return out

    def averages(self, x, t, dirs):
        R, D, N = dirs.shape
        eps = self.epsilon
        plus = (x[:, None, :] + eps * dirs).reshape(-1, N)
        minus = (x[:, None, :] - eps * dirs).reshape(-1, N)
        return (0.5 * (self(plus) + self(minus))).reshape(R, D)


def value_strategy_pair(result, frames: FrameSet, payoff: PayoffData | None = None,
                        g=None) -> tuple[Strategy, Strategy]:
    """Strategies that replay the DPP's inf-sup bookkeeping on a solved field.

    ``result`` is a :class:`ParabolicResult` solved with ``keep=1`` (pass the
    payoff) or an :class:`EllipticResult` (pass ``g``).  The minimizer takes the
    first frame attaining the inf; the maximizer the first sample attaining
    the sup within whatever frame it is handed.
    """
    if isinstance(result, ParabolicResult):
        if payoff is None:
            raise ValueError("a parabolic value field needs its payoff")
        field_ = FieldEvaluator(result, payoff)
    elif isinstance(result, EllipticResult):
        if g is None:
            raise ValueError("a stationary value field needs its boundary datum")
        field_ = _StaticField(result, g)
    else:
        raise TypeError("result must be a parabolic or elliptic DPP result")
    half = frames.half
    table = frames.directions(half=True)  # (F, S/2, N)
    F, S2, N = table.shape

    def minimizer(x, t, k, x0):
        R = len(x)
        if R == 0:
            return np.zeros((0, frames.j, N))
        tt = _common_time(t)
        avg = field_.averages(x, tt, np.broadcast_to(table.reshape(1, F * S2, N), (R, F * S2, N)))
        best = avg.reshape(R, F, S2).max(axis=2).argmin(axis=1)
        return frames.frames[best]

    def maximizer(x, t, k, x0, fr):
        R = len(x)
        if R == 0:
            return np.zeros((0, N))
        tt = _common_time(t)
        dirs = np.einsum("sj,rjn->rsn", half, fr)
        avg = field_.averages(x, tt, dirs)
        best = avg.argmax(axis=1)
        return dirs[np.arange(R), best]

    return Strategy("minimizer", minimizer, "value"), Strategy("maximizer", maximizer, "value")


def _common_time(t: np.ndarray) -> float:
    if len(t) == 0:
        return 0.0
    t0 = float(t[0])
    if not (np.all(t == t0) or np.all(np.isinf(t))):
        raise ValueError("value strategies need a batch sharing one clock")
    return t0


def orthogonal_minimizer(center, j: int = 1) -> Strategy:
    """Choose S inside the orthogonal complement of x_k - center (j <= N-1)."""
    c = np.asarray(center, dtype=float)

    def rule(x, t, k, x0):
        d = x - c
        nrm = np.linalg.norm(d, axis=1)
        u = np.where(nrm[:, None] > 1e-300, d / np.where(nrm > 1e-300, nrm, 1.0)[:, None], 0.0)
        u[nrm <= 1e-300, 0] = 1.0
        if x.shape[1] - 1 < j:
            raise ValueError("need j <= N - 1 for an orthogonal subspace")
        return complement_basis(u)[:, :j, :]

    return Strategy("minimizer", rule, "orthogonal")


_M1, _M2, _GOLD = np.uint64(0xBF58476D1CE4E5B9), np.uint64(0x94D049BB133111EB), np.uint64(0x9E3779B97F4A7C15)


def _mix(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def state_hash(x: np.ndarray, k: int, salt: int) -> np.ndarray:
    """Deterministic 64-bit hash of (position bits, turn, salt) per row."""
    with np.errstate(over="ignore"):
        h = np.full(len(x), np.uint64(salt) * _GOLD + np.uint64(k), dtype=np.uint64)
        bits = np.ascontiguousarray(x, dtype=np.float64).view(np.uint64)
        for col in range(bits.shape[1]):
            h = _mix(h ^ bits[:, col])
    return h


def random_minimizer(frames: FrameSet, salt: int = 1) -> Strategy:
    """Pseudo-random frame from a hash of the state (deterministic given the state)."""

    def rule(x, t, k, x0):
        idx = (state_hash(x, k, salt) % np.uint64(len(frames.frames))).astype(np.int64)
        return frames.frames[idx]

    return Strategy("minimizer", rule, "random")


def random_maximizer(frames: FrameSet, salt: int = 2) -> Strategy:
    """Pseudo-random sphere sample inside the handed frame."""
    samples = frames.samples

    def rule(x, t, k, x0, fr):
        idx = (state_hash(x, k, salt) % np.uint64(len(samples))).astype(np.int64)
        return np.einsum("rj,rjn->rn", samples[idx], fr)

    return Strategy("maximizer", rule, "random")


def first_axis_maximizer() -> Strategy:
    """Always the first frame vector."""
    return Strategy("maximizer", lambda x, t, k, x0, fr: fr[:, 0, :].copy(), "first-axis")


def lift(strategy: Strategy) -> Strategy:
    """Stationary-game strategy reused in the clocked game (the clock is hidden)."""
    if strategy.role == "minimizer":
        rule = lambda x, t, k, x0: strategy.rule(x, np.full(len(x), np.inf), k, x0)  # noqa: E731
    else:
        rule = lambda x, t, k, x0, fr: strategy.rule(x, np.full(len(x), np.inf), k, x0, fr)  # noqa: E731
    return Strategy(strategy.role, rule, f"lift({strategy.name})")


# --------------------------------------------------------------- diagnostics

def _summaries(trajectories) -> tuple[np.ndarray, np.ndarray, float, list]:
    if isinstance(trajectories, GameBatch):
        b = trajectories
        ok = ~b.censored
        sq = np.sum((b.exit_x - b.x0) ** 2, axis=1)
        return sq[ok], b.tau[ok].astype(float), b.epsilon, b.drift
    sq, tau, eps = [], [], None
    for tr in trajectories:
        if tr.censored:
            continue
        sq.append(float(np.sum((tr.exit[0] - tr.states[0]) ** 2)))
        tau.append(float(tr.tau))
        step = np.linalg.norm(np.diff(tr.states, axis=0), axis=1)
        eps = float(step[0]) if len(step) else eps
    return np.array(sq), np.array(tau), eps, []


def martingale_diagnostics(trajectories, min_runs: int = 1000, epsilon: float | None = None) -> dict:
    """Empirical optional-stopping check E|x_tau - x_0|^2 = eps^2 E[tau]."""
    sq, tau, eps, drift = _summaries(trajectories)
    eps = epsilon if epsilon is not None else eps
    n = len(sq)
    if n < min_runs:
        raise ValueError(f"need at least {min_runs} finished trajectories, got {n}")
    diff = sq - eps ** 2 * tau  # per-game M_tau, mean zero
    gap = float(diff.mean())
    se = float(diff.std(ddof=1) / math.sqrt(n))
    z = [m / math.sqrt(v / c) for c, m, v in drift if c >= 30 and v > 0]
    frac = float(np.mean(np.abs(z) > 3.0)) if z else 0.0
    return {
        "runs": n,
        "mean_sq_displacement": float(sq.mean()),
        "eps2_mean_tau": float(eps ** 2 * tau.mean()),
        "gap": gap,
        "pooled_stderr": se,
        "identity_ok": bool(abs(gap) <= 4.0 * se + 1e-12),
        "drift_steps_checked": len(z),
        "drift_outlier_fraction": frac,
        "drift_ok": bool(frac <= 0.02),
    }


def exit_tail(trajectories, t_grid, epsilon: float | None = None, min_count: int = 30) -> dict:
    """Survival function P[eps^2 tau / 2 >= t] and its fitted log-slope."""
    if isinstance(trajectories, GameBatch):
        tau = trajectories.tau.astype(float)
        cens = trajectories.censored
        eps = trajectories.epsilon
    else:
        tau = np.array([tr.tau for tr in trajectories], dtype=float)
        cens = np.array([tr.censored for tr in trajectories])
        eps = epsilon
    eps = epsilon if epsilon is not None else eps
    t_grid = np.asarray(t_grid, dtype=float)
    s = eps ** 2 * tau / 2
    counts = np.array([(s >= t).sum() for t in t_grid])
    tail = counts / len(s)
    use = counts >= min_count
    slope = intercept = float("nan")
    if use.sum() >= 2:
        slope, intercept = np.polyfit(t_grid[use], np.log(tail[use]), 1)
    last_t = float(s[~cens].max()) if (~cens).any() else 0.0
    return {
        "t": t_grid.tolist(),
        "tail": tail.tolist(),
        "counts": counts.tolist(),
        "slope": float(slope),
        "intercept": float(intercept),
        "fit_points": int(use.sum()),
        "censored": int(cens.sum()),
        "censored_report": bool(cens.any()),
        "mean_exit_time": float(s.mean()),
        "exit_time_stderr": float(s.std(ddof=1) / math.sqrt(len(s))) if len(s) > 1 else float("nan"),
        "monotone": bool(np.all(np.diff(tail) <= 0)),
        "last_finished_time": last_t,
    }
