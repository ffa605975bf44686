"""Exact simulation of posterior log-survival and hazard marginals.

The log-survival process A = -log(survival) and the hazard process H
are additive (independent-increment) processes once the tuning function
is piecewise constant, so their joint law along any time grid is fixed
by exact draws of the increments plus the fixed beta jumps at event
times.

A-increments decompose into a time-changed gamma part plus a compound
Poisson part thinned with phi(x) = (exp(-x) - 1 + x)/(x (1 - exp(-x))).
H-increments decompose into a tempered truncated-gamma (Dickman-type)
part plus a compound Poisson part thinned against an explicit dominating
jump density.

The truncated-gamma marginal (Levy density exp(-mu x)/x on (0, 1]) is
drawn by envelope rejection built on an exact factorisation of its
density: on (0, 1] the density is proportional to x^(theta-1) exp(-mu x)
exactly, and beyond 1 it equals that leading form times a non-increasing
remainder factor that solves a one-step delay equation and is evaluated
to near machine precision piece by piece.  Draws are exact up to
floating-point evaluation of these analytic quantities; no series or
time-discretisation truncation is involved.  (The published
double-rejection scheme whose hyperparameter rule and acceptance
constant are exposed below is an equally valid internal construction;
this one avoids per-parameter numerical optimisation entirely.)
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincinv, gammaln, roots_jacobi

from .betastacy import BetaStacyPosterior
from .special import EULER_GAMMA, exp_integral_e1
from .stepfun import StepFunction

__all__ = [
    "RngStream",
    "TruncatedGammaParams",
    "rule_of_thumb",
    "acceptance_constant",
    "log_acceptance_constant",
    "sample_truncated_gamma",
    "phi",
    "thin_accept_phi",
    "e_acceptance_ratio",
    "thin_accept_E",
    "PathSample",
    "sample_A_path",
    "sample_H_path",
    "ThinningRatioError",
]

LOG2 = math.log(2.0)
_MAX_REJECTION_ROUNDS = 10_000  # a.s. finite loops; cap gives a diagnostic


class ThinningRatioError(RuntimeError):
    """A thinning acceptance probability left [0, 1]: formula transcription bug."""


# ---------------------------------------------------------------------------
# seeded streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RngStream:
    """One independent, reproducible random stream per sampled path."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


# ---------------------------------------------------------------------------
# hyperparameter rule and acceptance constant of the double-rejection scheme
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncatedGammaParams:
    """Tempering rate with the two free tuning constants of the
    double-rejection truncated-gamma sampler."""

    mu: float
    vartheta: float
    delta: float

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("tempering rate must be >= 0")
        if self.vartheta <= 0:
            raise ValueError("vartheta must be > 0")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


def rule_of_thumb(mu: float) -> TruncatedGammaParams:
    """Closed-form tuning that keeps the acceptance rate healthy across mu:
    vartheta = 1/(1 + mu), delta = 1 - 1/log(e^2 + mu)."""
    if mu < 0:
        raise ValueError("tempering rate must be >= 0")
    return TruncatedGammaParams(
        mu=mu,
        vartheta=1.0 / (1.0 + mu),
        delta=1.0 - 1.0 / math.log(math.e**2 + mu),
    )


def log_acceptance_constant(params: TruncatedGammaParams) -> float:
    """log C(vartheta, delta, mu); 1/C is the acceptance probability of the
    double-rejection step.  At mu = 0 the combination Gamma(0, mu) + log(mu)
    is replaced by its limit -EULER_GAMMA."""
    mu, vt, dl = params.mu, params.vartheta, params.delta
    if mu == 0.0:
        zeta = -EULER_GAMMA + vt
    else:
        zeta = exp_integral_e1(mu) + math.log(mu) + vt
    ez = math.exp(zeta)
    return (
        -mu
        - 1.0
        + gammaln(dl)
        - math.log1p(-dl)
        + zeta * ez
        - math.log(vt)
        - gammaln(ez + dl)
    )


def acceptance_constant(params: TruncatedGammaParams) -> float:
    """C >= 1 such that 1/C is the double-rejection acceptance probability.
    Evaluated in log space; overflows to inf for extreme tempering rates."""
    log_c = log_acceptance_constant(params)
    if log_c > 709.0:
        return math.inf
    return math.exp(log_c)


# ---------------------------------------------------------------------------
# remainder factor of the truncated-gamma density beyond the jump bound
# ---------------------------------------------------------------------------


class _DickmanRemainder:
    """Non-increasing factor g(x) with density(x) = C x^(theta-1) e^(-mu x) g(x).

    g = 1 on [0, 1] and solves x^theta g'(x) = -theta (x-1)^(theta-1) g(x-1).
    On (1, 2] it has an explicit series; on (2, 3] it is evaluated by a
    two-term quadrature whose algebraic endpoint cusp (x-2)^theta is
    absorbed into a Gauss-Jacobi weight; later pieces, whose cusps are a
    derivative order milder each step, are tabulated on Chebyshev nodes.
    """

    _NODES = 33  # Chebyshev-Lobatto nodes per tabulated piece
    _QUAD = 48
    # stop once g reaches the absolute noise floor of the piece-two
    # quadrature; the envelope mass dropped there is O(1e-16) relative
    _TAIL_EPS = 1e-15
    _MAX_PIECES = 96

    def __init__(self, theta: float):
        if not 0.0 < theta <= 1.0:
            raise ValueError("remainder factor is tabulated for 0 < theta <= 1")
        self.theta = theta
        self._gl_x, self._gl_w = np.polynomial.legendre.leggauss(self._QUAD)
        self._gj_x, self._gj_w = roots_jacobi(self._QUAD, 0.0, theta)
        self._g2 = float(self._series(np.asarray([2.0]))[0])
        # tabulated pieces (p, p+1] for p >= 3 are built on demand;
        # _coeffs[p - 3] interpolates piece p
        self._coeffs: list[np.ndarray] = []
        self._sup: list[float] = [1.0, 1.0, self._g2]
        self._exhausted = False
        self._lob = np.cos(np.pi * np.arange(self._NODES)[::-1] / (self._NODES - 1))
        self._gl12_x, self._gl12_w = np.polynomial.legendre.leggauss(12)

    def _ensure_piece(self, p: int) -> None:
        """Build Chebyshev tables up through piece p (p >= 3)."""
        while len(self._sup) <= p and not self._exhausted:
            q = len(self._sup)  # next piece to tabulate: (q, q+1]
            if q - 3 > self._MAX_PIECES:
                self._exhausted = True
                break
            g_left = (
                float(self._piece_two(np.asarray([3.0]))[0])
                if q == 3
                else None
            )
            nodes = q + 0.5 * (self._lob + 1.0)
            if g_left is None:
                z = np.asarray([1.0])
                g_left = float(
                    np.polynomial.chebyshev.chebval(z, self._coeffs[q - 4])[0]
                )
            g_left = max(g_left, 0.0)
            if g_left < self._TAIL_EPS:
                self._sup.append(g_left)
                self._coeffs.append(np.zeros(1))
                self._exhausted = True
                break
            # cumulative integral over the piece on all sub-panels at once
            a = nodes[:-1]
            width = np.diff(nodes)
            y = a[:, None] + 0.5 * width[:, None] * (self._gl12_x[None, :] + 1.0)
            integrand = (
                (y - 1.0) ** (self.theta - 1.0)
                * y ** (-self.theta)
                * self._eval_vector(y - 1.0)
            )
            panel = 0.5 * width * (integrand @ self._gl12_w)
            vals = np.empty(self._NODES)
            vals[0] = g_left
            vals[1:] = g_left - self.theta * np.cumsum(panel)
            vals = np.maximum(vals, 0.0)
            self._sup.append(g_left)
            self._coeffs.append(
                np.polynomial.chebyshev.chebfit(self._lob, vals, deg=self._NODES - 1)
            )
            if vals[-1] < self._TAIL_EPS:
                self._exhausted = True

    @property
    def n_pieces(self) -> int:
        """Pieces known to carry mass so far (grows lazily)."""
        return len(self._sup)

    def _tail_series(self, u: np.ndarray) -> np.ndarray:
        """sum_{k>=0} u^k / (theta + k), convergent for u <= 1/2."""
        total = np.zeros_like(u)
        power = np.ones_like(u)
        for k in range(200):
            term = power / (self.theta + k)
            total += term
            if float(np.max(term)) < 1e-18:
                break
            power = power * u
        return total

    def _series(self, x: np.ndarray) -> np.ndarray:
        """g on (1, 2]: 1 - theta * sum u^(theta+k)/(theta+k), u = 1 - 1/x."""
        u = 1.0 - 1.0 / x
        return 1.0 - self.theta * u**self.theta * self._tail_series(u)

    def _cusp_factor(self, v: np.ndarray) -> np.ndarray:
        """rho(v) with 1 - g(1 + v) = v^theta * rho(v); smooth in v."""
        u = v / (1.0 + v)
        return self.theta * (1.0 + v) ** (-self.theta) * self._tail_series(u)

    def _piece_two(self, x: np.ndarray) -> np.ndarray:
        """g on (2, 3] by quadrature: the smooth part with Gauss-Legendre and
        the v^theta cusp part with a Gauss-Jacobi rule."""
        th = self.theta
        s = x - 2.0

        def w(v):
            return (1.0 + v) ** (th - 1.0) * (2.0 + v) ** (-th)

        # I1 = int_0^s w(v) dv
        v_gl = 0.5 * s[:, None] * (self._gl_x[None, :] + 1.0)
        i1 = 0.5 * s * np.dot(w(v_gl), self._gl_w)
        # I3 = int_0^s v^theta [w(v) rho(v)] dv via Jacobi weight (1+t)^theta
        v_gj = 0.5 * s[:, None] * (self._gj_x[None, :] + 1.0)
        inner = w(v_gj) * self._cusp_factor(v_gj)
        i3 = (0.5 * s) ** (th + 1.0) * np.dot(inner, self._gj_w)
        return self._g2 - th * (i1 - i3)

    def sup_on_piece(self, p: int) -> float:
        """sup of g over (p, p+1] (g is non-increasing, so its value at p)."""
        if p >= 3:
            self._ensure_piece(p)
        if p < len(self._sup):
            return self._sup[p]
        return 0.0

    def _eval_vector(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape)
        out[x <= 1.0] = 1.0
        piece = np.floor(x).astype(int)
        piece[x == np.floor(x)] -= 1  # x = p belongs to piece (p-1, p]
        sel1 = (piece == 1) & (x > 1.0)
        if np.any(sel1):
            out[sel1] = self._series(x[sel1])
        sel2 = piece == 2
        if np.any(sel2):
            out[sel2] = np.maximum(self._piece_two(x[sel2]), 0.0)
        deep = piece[piece >= 3]
        if deep.size:
            self._ensure_piece(int(deep.max()))
        for p in np.unique(deep):
            if p - 3 >= len(self._coeffs):
                continue
            sel = piece == p
            z = 2.0 * (x[sel] - p) - 1.0
            out[sel] = np.maximum(
                np.polynomial.chebyshev.chebval(z, self._coeffs[p - 3]), 0.0
            )
        return out

    def __call__(self, x):
        return self._eval_vector(np.atleast_1d(np.asarray(x, dtype=float)))


_REMAINDER_CACHE: dict[float, _DickmanRemainder] = {}


def _remainder(theta: float) -> _DickmanRemainder:
    tab = _REMAINDER_CACHE.get(theta)
    if tab is None:
        if len(_REMAINDER_CACHE) > 4096:
            _REMAINDER_CACHE.clear()
        tab = _DickmanRemainder(theta)
        _REMAINDER_CACHE[theta] = tab
    return tab


# ---------------------------------------------------------------------------
# truncated-gamma marginal law (jumps <= 1, Levy density exp(-mu x)/x)
# ---------------------------------------------------------------------------

_TINY_MU = 1e-12  # below this the tempered and untempered laws agree to ~1e-12


class _TruncGammaLaw:
    """Marginal of the truncated-gamma subordinator at time theta <= 1.

    Envelope rejection: pick a unit piece with probability proportional
    to the piece mass of C x^(theta-1) e^(-mu x) times the sup of the
    remainder factor there, draw within the piece by exact inverse CDF,
    and accept with g(x)/sup.  Proposals on (0, 1] are always accepted
    because the envelope coincides with the density there.
    """

    _NEGLECT = 1e-25  # relative envelope mass below which the tail is dropped

    def __init__(self, theta: float, mu: float):
        if not 0.0 < theta <= 1.0:
            raise ValueError("need 0 < theta <= 1")
        if mu < 0.0:
            raise ValueError("need mu >= 0")
        if mu < _TINY_MU:
            mu = 0.0
        self.theta = theta
        self.mu = mu
        self.g = _remainder(theta)

        def cdf_at(edge: float) -> float:
            return edge**theta if mu == 0.0 else float(gammainc(theta, mu * edge))

        edges = [0.0, 1.0]
        cdf = [0.0, cdf_at(1.0)]
        weights = [max(cdf[1], 0.0)]
        if weights[0] <= 0.0:
            # extreme tempering: all mass is numerically below the first edge
            weights[0] = 1.0
        total = weights[0]
        last_sup = 1.0
        p = 1
        while p <= 512:
            hi = cdf_at(float(p + 1))
            piece_int = max(hi - cdf[-1], 0.0)
            if mu > 0.0:
                # remaining envelope mass is at most the whole gamma tail
                # times a non-increasing factor; drop it once negligible
                tail_bound = (1.0 - cdf[-1]) * last_sup
                if tail_bound < self._NEGLECT * total:
                    break
            sup_p = self.g.sup_on_piece(p)
            last_sup = sup_p
            if sup_p < self.g._TAIL_EPS:
                break
            edges.append(float(p + 1))
            cdf.append(hi)
            weights.append(piece_int * sup_p)
            total += weights[-1]
            p += 1
        self.cdf_edges = np.asarray(cdf)
        w = np.asarray(weights)
        total = float(np.sum(w))
        if not (total > 0.0 and np.isfinite(total)):
            raise RuntimeError("degenerate envelope weights in truncated-gamma law")
        self.piece_probs = w / total
        self.piece_cum = np.cumsum(self.piece_probs)
        self.p0 = float(self.piece_probs[0])

    def _inverse_piece_draw(self, picks: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Exact inverse-CDF draw of x^(theta-1) e^(-mu x) within each piece."""
        lo = self.cdf_edges[picks]
        hi = self.cdf_edges[picks + 1]
        q = lo + u * (hi - lo)
        if self.mu == 0.0:
            x = q ** (1.0 / self.theta)
        else:
            x = gammaincinv(self.theta, q) / self.mu
        return np.clip(x, picks, picks + 1.0)

    def sample_batch(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty(size)
        active = np.arange(size)
        for _ in range(_MAX_REJECTION_ROUNDS):
            if not active.size:
                return out
            m = active.size
            picks = np.searchsorted(self.piece_cum, rng.random(m), side="right")
            picks = np.minimum(picks, self.piece_cum.size - 1)
            x = self._inverse_piece_draw(picks, rng.random(m))
            accepted = picks == 0
            tail = ~accepted
            if np.any(tail):
                sup = np.asarray([self.g.sup_on_piece(int(p)) for p in picks[tail]])
                accepted[tail] = rng.random(int(tail.sum())) * sup < self.g(x[tail])
            out[active[accepted]] = x[accepted]
            active = active[~accepted]
        raise RuntimeError("batch rejection loop exceeded its iteration cap")

    def sample(self, rng: np.random.Generator) -> float:
        for _ in range(_MAX_REJECTION_ROUNDS):
            p = int(np.searchsorted(self.piece_cum, rng.random(), side="right"))
            p = min(p, self.piece_cum.size - 1)
            x = float(self._inverse_piece_draw(np.asarray([p]), rng.random(1))[0])
            if p == 0:
                return x
            if rng.random() * self.g.sup_on_piece(p) < float(self.g(x)[0]):
                return x
        raise RuntimeError("envelope rejection loop exceeded its iteration cap")


_LAW_CACHE: dict[tuple[float, float], _TruncGammaLaw] = {}


def _law(theta: float, mu: float) -> _TruncGammaLaw:
    key = (theta, mu)
    law = _LAW_CACHE.get(key)
    if law is None:
        if len(_LAW_CACHE) > 8192:
            _LAW_CACHE.clear()
        law = _TruncGammaLaw(theta, mu)
        _LAW_CACHE[key] = law
    return law


def sample_truncated_gamma(t: float, mu: float, rng, size: int | None = None):
    """Exact draw(s) of the truncated-gamma subordinator at time ``t``.

    The marginal law has Laplace exponent
    t * int_0^1 (1 - exp(-s x)) exp(-mu x) / x dx.  Times above 1 are
    split into equal sub-times (independent increments) so each call to
    the envelope sampler runs at theta <= 1.
    """
    if t <= 0.0:
        raise ValueError("time must be positive")
    if mu < 0.0:
        raise ValueError("tempering rate must be >= 0")
    gen = _as_generator(rng)
    chunks = int(math.ceil(t))
    law = _law(t / chunks, mu)
    if size is None:
        return float(sum(law.sample(gen) for _ in range(chunks)))
    out = np.zeros(size)
    for _ in range(chunks):
        out += law.sample_batch(gen, size)
    return out


# ---------------------------------------------------------------------------
# thinning acceptance functions
# ---------------------------------------------------------------------------


def phi(x):
    """Acceptance probability (e^(-x) - 1 + x) / (x (1 - e^(-x))) in (1/2, 1)."""
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr <= 0):
        raise ValueError("phi is defined for positive jump sizes")
    out = np.empty(x_arr.shape)
    small = x_arr < 1e-7
    out[small] = 0.5 + x_arr[small] / 12.0
    xl = x_arr[~small]
    em = -np.expm1(-xl)  # 1 - exp(-x), no cancellation
    out[~small] = (xl - em) / (xl * em)
    return float(out[0]) if np.ndim(x) == 0 else out


def thin_accept_phi(x: float, rng) -> bool:
    """Keep a candidate jump of the log-survival compound-Poisson part."""
    p = phi(x)
    if not 0.0 <= p <= 1.0:
        raise ThinningRatioError(f"phi({x}) = {p} outside [0, 1]")
    return bool(_as_generator(rng).random() < p)


_RATIO_TOL = 1e-9


def e_acceptance_ratio(x, b):
    """Density ratio of the hazard jump measure to its dominating measure.

    For jumps above 1/2 the ratio is 1/(2x); below 1/2 it compares
    (1-x)^(b-1) minus the tempered-exponential component against the
    dominating piece.  Raises :class:`ThinningRatioError` if the computed
    ratio leaves [0, 1] by more than floating-point tolerance, rather
    than clamping a real violation.
    """
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x_arr <= 0) | (x_arr >= 1)):
        raise ValueError("jump sizes must lie in (0, 1)")
    if b < 0:
        raise ValueError("tuning value must be >= 0")
    out = np.empty(x_arr.shape)
    big = x_arr > 0.5
    out[big] = 0.5 / x_arr[big]
    xs = x_arr[~big]
    if xs.size:
        if b <= 1.0:
            if b == 1.0:
                out[~big] = 0.0
            else:
                num = np.expm1((b - 1.0) * np.log1p(-xs))
                den = 2.0 * xs * (2.0 ** (1.0 - b) - 1.0)
                out[~big] = num / den
        else:
            log_one_minus = np.log1p(-xs)
            a_exp = (b - 1.0) * log_one_minus
            b_exp = -2.0 * LOG2 * (b - 1.0) * xs
            num = np.exp(b_exp) * np.expm1(a_exp - b_exp)
            den = 2.0 * xs * (LOG2 - 0.5) * (b - 1.0) * np.exp(b * log_one_minus)
            out[~big] = num / den
    if np.any(out < -_RATIO_TOL) or np.any(out > 1.0 + _RATIO_TOL):
        bad = np.argmax(np.abs(out - 0.5))
        raise ThinningRatioError(
            f"acceptance ratio {out[bad]} at (x={x_arr[bad]}, b={b}) outside [0, 1]"
        )
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(x) == 0 else out


def thin_accept_E(x: float, b: float, rng) -> bool:
    """Keep a candidate jump of the hazard compound-Poisson part."""
    return bool(_as_generator(rng).random() < e_acceptance_ratio(x, b))


# -- dominating jump measure of the hazard compound-Poisson part -------------


def _estar_piece_masses(b: float) -> tuple[float, float]:
    """Masses of the dominating jump density on (0, 1/2] and (1/2, 1),
    as factors of 2 c dLambda0."""
    if b <= 1.0:
        small = (2.0 ** (1.0 - b) - 1.0) / 2.0
    else:
        small = (LOG2 - 0.5) * (b - 1.0) * (1.0 - 0.5 ** (b + 1.0)) / (b + 1.0)
    big = 0.5**b / b
    return small, big


def _estar_small_jumps(b: float, u: np.ndarray) -> np.ndarray:
    if b <= 1.0:
        out = 0.5 * u
    else:
        out = 1.0 - (1.0 - (1.0 - 2.0 ** (-b - 1.0)) * u) ** (1.0 / (b + 1.0))
    # keep draws inside the open interval when the inverse CDF underflows
    return np.clip(out, 5e-324, 0.5)


def _estar_big_jumps(b: float, u: np.ndarray) -> np.ndarray:
    out = 1.0 - u ** (1.0 / b) / 2.0
    return np.minimum(out, 1.0 - 2.0**-53)


# ---------------------------------------------------------------------------
# path plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathSample:
    """Process values at grid times (user grid merged with the fixed jump
    times).  ``absorbed_at`` marks the time at which a unit beta jump sent
    the log-survival path to infinity, if any."""

    grid: np.ndarray
    values: np.ndarray
    absorbed_at: float | None = None


class _PathPlan:
    """Precomputed interval structure shared by all paths of one posterior.

    Intervals partition (0, grid_max] between consecutive points of
    {user grid} U {event times} U {tuning breakpoints}; on each interval
    the tuning values and the baseline increment are constant, so every
    component of the path law is an explicit independent draw.
    """

    def __init__(self, post: BetaStacyPosterior, grid: np.ndarray):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be a non-empty strictly increasing array")
        if grid[0] < 0:
            raise ValueError("grid times must be non-negative")
        gmax = float(grid[-1])
        atoms_in = post.atom_times[post.atom_times <= gmax]
        self.out_grid = np.unique(np.concatenate((grid, atoms_in)))
        cuts = post.b.breakpoints
        pts = np.unique(
            np.concatenate(
                (self.out_grid, cuts[(cuts > 0) & (cuts < gmax)], [0.0])
            )
        )
        pts = pts[pts <= gmax]
        self.points = pts  # partition points, starting at 0
        lo = pts[:-1]
        hi = pts[1:]
        self.c_vals = post.prior_c(lo)
        self.b_vals = post.b(lo)
        self.dL0 = np.asarray(
            [post.baseline.continuous_between(a, b) for a, b in zip(lo, hi)]
        )
        self.det_mask = np.isinf(self.c_vals) & (self.dL0 > 0)
        self.active = (
            ~np.isinf(self.c_vals) & (self.c_vals > 0.0) & (self.dL0 > 0.0)
        )
        self.det_increments = np.where(self.det_mask, self.dL0, 0.0)

        # atoms: partition position and beta parameters
        self.atom_pos = np.searchsorted(pts, atoms_in)
        keep = ~np.isinf(post.atom_b[: atoms_in.size])
        ab = post.atom_b[: atoms_in.size]
        ae = post.atom_events[: atoms_in.size]
        self.atom_keep = keep
        self.atom_a = ae[keep]
        self.atom_bminus = ab[keep] - ae[keep]
        self.atom_kept_pos = self.atom_pos[keep]
        self.atom_degenerate = self.atom_bminus == 0.0
        self.atom_times = atoms_in[keep]

        # positions of the output grid among partition points
        self.out_pos = np.searchsorted(pts, self.out_grid)

        idx = np.flatnonzero(self.active)
        self.idx = idx
        c = self.c_vals[idx]
        b = self.b_vals[idx]
        d = self.dL0[idx]

        # hazard-process parts
        self.h_mu = LOG2 * np.maximum(b - 1.0, 0.0)
        self.h_theta = c * d
        chunks = np.maximum(np.ceil(self.h_theta).astype(int), 1)
        self.d_interval = np.repeat(np.arange(idx.size), chunks)
        self.d_theta = np.repeat(self.h_theta / chunks, chunks)
        self.d_mu = np.repeat(self.h_mu, chunks)
        small, bigm = np.empty(idx.size), np.empty(idx.size)
        for i, bb in enumerate(b):
            small[i], bigm[i] = _estar_piece_masses(bb)
        self.e_rate = 2.0 * c * d * (small + bigm)
        self.e_small_frac = np.where(small + bigm > 0, small / (small + bigm), 0.0)
        self.e_b = b

        # log-survival parts
        self.a_shape = c * d
        self.a_inv_b = 1.0 / b
        self.c_rate = c / b * d

        # per-entry laws for the tempered truncated-gamma draws
        self.d_laws = [
            _law(float(th), float(mu)) for th, mu in zip(self.d_theta, self.d_mu)
        ]
        self.d_p0 = np.asarray([law.p0 for law in self.d_laws])
        self.d_mu_is_zero = np.asarray([law.mu == 0.0 for law in self.d_laws])
        self.d_law_theta = np.asarray([law.theta for law in self.d_laws])
        self.d_law_mu = np.asarray([law.mu for law in self.d_laws])
        self.d_cdf_at_one = np.asarray([law.cdf_edges[1] for law in self.d_laws])


_PLAN_CACHE: "weakref.WeakKeyDictionary[BetaStacyPosterior, dict]" = (
    weakref.WeakKeyDictionary()
)


def _plan(post: BetaStacyPosterior, grid) -> _PathPlan:
    per_post = _PLAN_CACHE.setdefault(post, {})
    key = np.asarray(grid, dtype=float).tobytes()
    plan = per_post.get(key)
    if plan is None:
        plan = _PathPlan(post, np.asarray(grid, dtype=float))
        per_post[key] = plan
    return plan


# ---------------------------------------------------------------------------
# exact path draws
# ---------------------------------------------------------------------------


def _draw_truncgamma_vector(plan: _PathPlan, rng: np.random.Generator) -> np.ndarray:
    """One draw per tempered truncated-gamma entry of the plan.

    Faithful vectorisation of the envelope sampler: every round picks a
    piece for each still-active entry; picks on (0, 1] (the vast
    majority) are drawn by exact inverse CDF and accepted outright, picks
    beyond 1 run the envelope test one entry at a time, and any rejection
    re-enters the next full round.
    """
    m = plan.d_theta.size
    out = np.empty(m)
    if not m:
        return out
    active = np.arange(m)
    for _ in range(_MAX_REJECTION_ROUNDS):
        if not active.size:
            return out
        u = rng.random(active.size)
        pick0 = u < plan.d_p0[active]
        idx0 = active[pick0]
        if idx0.size:
            th = plan.d_law_theta[idx0]
            mu = plan.d_law_mu[idx0]
            q = rng.random(idx0.size) * plan.d_cdf_at_one[idx0]
            x = np.empty(idx0.size)
            mz = plan.d_mu_is_zero[idx0]
            if np.any(mz):
                x[mz] = q[mz] ** (1.0 / th[mz])
            if np.any(~mz):
                x[~mz] = gammaincinv(th[~mz], q[~mz]) / mu[~mz]
            out[idx0] = np.minimum(x, 1.0)
        still = []
        for pos in np.flatnonzero(~pick0):
            i = active[pos]
            law = plan.d_laws[i]
            p = int(np.searchsorted(law.piece_cum, u[pos], side="right"))
            p = min(p, law.piece_cum.size - 1)
            xx = float(law._inverse_piece_draw(np.asarray([p]), rng.random(1))[0])
            if rng.random() * law.g.sup_on_piece(p) < float(law.g(xx)[0]):
                out[i] = xx
            else:
                still.append(i)
        active = np.asarray(still, dtype=int)
    raise RuntimeError("vector envelope rejection exceeded its iteration cap")


def _atom_draws(plan: _PathPlan, rng: np.random.Generator) -> np.ndarray:
    """Beta jump fractions at the kept (finite-tuning) atoms."""
    xi = np.empty(plan.atom_a.size)
    deg = plan.atom_degenerate
    if np.any(~deg):
        xi[~deg] = rng.beta(plan.atom_a[~deg], plan.atom_bminus[~deg])
    xi[deg] = 1.0
    return xi


def _assemble(plan: _PathPlan, increments: np.ndarray, atom_jumps: np.ndarray):
    """Cumulative values at the output grid from per-interval increments
    plus the fixed jumps at their partition positions."""
    cum = np.concatenate(([0.0], np.cumsum(increments)))
    if atom_jumps.size:
        bump = np.zeros_like(cum)
        np.add.at(bump, plan.atom_kept_pos, atom_jumps)
        cum += np.cumsum(bump)
    return cum[plan.out_pos]


def sample_H_path(post: BetaStacyPosterior, grid, rng) -> PathSample:
    """Exact joint draw of the hazard process at the grid times.

    Each interval increment is the sum of a halved tempered
    truncated-gamma draw (jumps <= 1/2) and a thinned compound-Poisson
    draw (jumps filling in up to 1); event times add beta jumps.  The
    Monte Carlo mean and variance across paths match the closed-form
    posterior mean and variance.
    """
    gen = _as_generator(rng)
    plan = _plan(post, grid)
    increments = plan.det_increments.copy()

    if plan.d_theta.size:
        dvals = 0.5 * _draw_truncgamma_vector(plan, gen)
        np.add.at(increments, plan.idx[plan.d_interval], dvals)

    if plan.idx.size:
        counts = gen.poisson(plan.e_rate)
        total = int(counts.sum())
        if total:
            owner = np.repeat(np.arange(plan.idx.size), counts)
            b_rep = plan.e_b[owner]
            pick_small = gen.random(total) < plan.e_small_frac[owner]
            u = gen.random(total)
            x = np.empty(total)
            for bb in np.unique(b_rep):
                sel_b = b_rep == bb
                s_sel = sel_b & pick_small
                g_sel = sel_b & ~pick_small
                if np.any(s_sel):
                    x[s_sel] = _estar_small_jumps(bb, u[s_sel])
                if np.any(g_sel):
                    x[g_sel] = _estar_big_jumps(bb, u[g_sel])
                ratios = e_acceptance_ratio(x[sel_b], float(bb))
                keep = gen.random(int(sel_b.sum())) < ratios
                kept = np.flatnonzero(sel_b)[keep]
                np.add.at(increments, plan.idx[owner[kept]], x[kept])

    atom_jumps = _atom_draws(plan, gen)
    values = _assemble(plan, increments, atom_jumps)
    return PathSample(plan.out_grid.copy(), values)


def sample_A_path(post: BetaStacyPosterior, grid, rng) -> PathSample:
    """Exact joint draw of the log-survival process A = -log(survival).

    Interval increments sum a time-changed gamma draw with shape
    c * dLambda0 scaled by 1/b and a compound-Poisson draw whose
    exponential candidate jumps are kept with probability phi(jump);
    event times add -log(1 - beta jump), which is infinite when the jump
    fraction is one (flagged via ``absorbed_at``).
    """
    gen = _as_generator(rng)
    plan = _plan(post, grid)
    increments = plan.det_increments.copy()

    if plan.idx.size:
        shapes = gen.standard_gamma(plan.a_shape)
        np.add.at(increments, plan.idx, shapes * plan.a_inv_b)

        counts = gen.poisson(plan.c_rate)
        total = int(counts.sum())
        if total:
            owner = np.repeat(np.arange(plan.idx.size), counts)
            jumps = gen.exponential(size=total) / plan.e_b[owner]
            jumps = np.maximum(jumps, 5e-324)  # phi needs strictly positive sizes
            keep = gen.random(total) < phi(jumps)
            kept = np.flatnonzero(keep)
            np.add.at(increments, plan.idx[owner[kept]], jumps[kept])

    xi = _atom_draws(plan, gen)
    absorbed_at = None
    if xi.size:
        with np.errstate(divide="ignore"):
            atom_jumps = -np.log1p(-xi)
        inf_sel = np.isinf(atom_jumps)
        if np.any(inf_sel):
            absorbed_at = float(plan.atom_times[np.flatnonzero(inf_sel)[0]])
    else:
        atom_jumps = xi
    values = _assemble(plan, increments, atom_jumps)
    return PathSample(plan.out_grid.copy(), values, absorbed_at=absorbed_at)
