"""Closed-form concentration bounds and thresholds.

Everything uses the natural logarithm. Asymptotic ``O(.)`` statements are
evaluated with their hidden constant set to 1; such values are labelled
with :data:`UP_TO_CONSTANT` wherever they are reported.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import InvalidArgument

UP_TO_CONSTANT = "up-to-constant"
UNBOUNDED_TAIL_NOTE = "O(exp(-Omega(sqrt(m)))) term: unspecified constant, qualitative only"


@dataclass(frozen=True)
class Theorem1Params:
    """Inputs of the general bound for bounded combiners (``max |beta| = M < inf``).

    ``rho`` holds the ``m * k`` per-coordinate sensitivities of
    ``Psi(beta(...), ...)``; ``delta_M`` and ``delta_lambda`` are the
    one-coordinate sensitivities of ``Psi`` at perturbation sizes ``M`` and
    ``lambda``.
    """

    N: int
    k: int
    m: int
    n: int
    chi: float
    mu: float
    mu_tilde: float
    eps: float
    K: float
    m_bar: int
    p_lambda_eps: float
    rho: Sequence[float]
    delta_M: float
    delta_lambda: float

    def __post_init__(self):
        if self.k < 1 or self.N < self.k:
            raise InvalidArgument(f"need 1 <= k <= N, got k={self.k}, N={self.N}")
        if self.m < 1:
            raise InvalidArgument("m must be >= 1")
        if self.n < 2:
            raise InvalidArgument("n must be >= 2 (log n appears in denominators)")
        if not 0 <= self.m_bar <= self.m:
            raise InvalidArgument(f"m_bar must lie in [0, m], got {self.m_bar}")
        if not 0.0 <= self.p_lambda_eps <= 1.0:
            raise InvalidArgument("p_lambda_eps must be a probability")
        if self.chi < 1 or self.mu < 0 or self.mu_tilde < 0:
            raise InvalidArgument("need chi >= 1, mu >= 0, mu_tilde >= 0")
        if self.eps <= 0 or self.K <= 0:
            raise InvalidArgument("eps and K must be positive")
        if self.delta_M < 0 or self.delta_lambda < 0:
            raise InvalidArgument("sensitivities must be nonnegative")
        if len(self.rho) != self.m * self.k:
            raise InvalidArgument(f"rho must have m*k={self.m * self.k} entries")
        if any(r <= 0 for r in self.rho):
            raise InvalidArgument("rho entries must be positive")


class Theorem1Result(NamedTuple):
    probability_bound: float
    err: float


def _log_poisson_tail(p, m, m_bar):
    """``log sum_{j=m_bar+1}^{m} (p m)^j / j!``; ``-inf`` when empty or ``p == 0``."""
    if p == 0 or m_bar >= m:
        return -math.inf
    j = np.arange(m_bar + 1, m + 1, dtype=float)
    return float(logsumexp(j * math.log(p * m) - gammaln(j + 1)))


def theorem1_log_terms(p):
    """Natural logs of the six summands inside the bracket, plus ``log C(N, k)``."""
    if p.mu == 0:
        raise ZeroDivisionError("mu = 0 makes the structural exponents undefined")
    L = math.log(p.n)
    denom = 8.0 * p.chi ** 2 * p.mu ** 2
    rho_sq = float(np.sum(np.square(p.rho)))
    terms = {
        "structure_norm": math.log(2 * p.k * p.m * p.chi) - p.n / (denom * L ** 6),
        "structure_dot": math.log(p.k ** 2 * p.m ** 2 * p.chi)
        - p.eps ** 2 * math.sqrt(p.n) / (denom * L ** 4),
        "balanced": math.log(2 * p.n * p.k) - L ** 2 / 8.0,
        "projection": 0.5 * math.log(2 * p.m * p.k / math.pi) - p.m * p.k / 2.0,
        "perturbation": _log_poisson_tail(p.p_lambda_eps, p.m, p.m_bar),
        "mcdiarmid": math.log(2.0) - 2.0 * p.K ** 2 / rho_sq,
    }
    log_binom = float(gammaln(p.N + 1) - gammaln(p.k + 1) - gammaln(p.N - p.k + 1))
    return log_binom, terms


def theorem1_log_bound(p):
    log_binom, terms = theorem1_log_terms(p)
    return log_binom + float(logsumexp(list(terms.values())))


def theorem1_err(p):
    return p.K + p.m_bar * p.delta_M + (p.m - p.m_bar) * p.delta_lambda


def theorem1_bound(p):
    """Failure-probability bound and error level of the general theorem.

    The bound is not clamped to 1 and overflows to ``inf`` rather than
    raising.
    """
    lb = theorem1_log_bound(p)
    prob = math.exp(lb) if lb < 709.0 else math.inf
    return Theorem1Result(prob, theorem1_err(p))


def theorem1_unbounded_err(beta_tilde_eps, m, alpha):
    """Error level ``beta_tilde_eps + m^(-1/(2 alpha))`` when ``beta`` is unbounded."""
    if m < 1 or alpha <= 0:
        raise InvalidArgument("need m >= 1 and alpha > 0")
    return beta_tilde_eps + m ** (-1.0 / (2.0 * alpha))


def theorem1_unbounded_p_bad(n, k, m):
    """Explicit part of ``p_bad`` for unbounded ``beta``; see :data:`UNBOUNDED_TAIL_NOTE`."""
    L = math.log(n)
    explicit = 2 * n * k * math.exp(-L ** 2 / 8) + math.sqrt(2 * m * k / math.pi) * math.exp(-m * k / 2)
    return explicit, UNBOUNDED_TAIL_NOTE


def p0_eps_angular(m, eps):
    """Flip-probability bound ``2 sqrt(2) m eps / pi + 2 / (pi m^2)`` for sign hashes."""
    if m < 1 or eps <= 0:
        raise InvalidArgument("need m >= 1 and eps > 0")
    return 2.0 * math.sqrt(2.0) * m * eps / math.pi + 2.0 / (math.pi * m ** 2)


def lipschitz_lambda(f_max, rho):
    """``lambda = 2 f_max rho + rho^2`` at which ``p_{lambda, eps}`` vanishes."""
    if f_max < 0 or rho < 0:
        raise InvalidArgument("f_max and rho must be nonnegative")
    return 2.0 * f_max * rho + rho ** 2


def _check_tau(m, tau):
    if m < 2:
        raise InvalidArgument("m must be >= 2")
    if not 0.0 < tau < 0.5:
        raise InvalidArgument(f"tau must lie in (0, 0.5), got {tau}")


def cor1_threshold(m, tau):
    """Error level ``m^-tau + 1/log(m)`` for sign-hash angular estimates."""
    _check_tau(m, tau)
    return m ** -tau + 1.0 / math.log(m)


def cor1_tail(N, m, tau):
    """``N^2 exp(-m^(1 - 2 tau))``, constant taken as 1."""
    _check_tau(m, tau)
    return N ** 2 * math.exp(-m ** (1.0 - 2.0 * tau))


def cor2_threshold(m, tau, f_max, rho):
    _check_tau(m, tau)
    return m ** -tau + lipschitz_lambda(f_max, rho)


def cor2_tail(N, m, tau, f_max):
    """``N^2 exp(-m^(1 - 2 tau) / f_max^2)``, constant taken as 1."""
    _check_tau(m, tau)
    if f_max <= 0:
        raise InvalidArgument("f_max must be positive")
    return N ** 2 * math.exp(-m ** (1.0 - 2.0 * tau) / f_max ** 2)


def azuma_bound(a, alphas, betas):
    """``2 exp(-a^2 / (2 sum (alpha_i + beta_i)^2))``."""
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    if alphas.size == 0 or alphas.shape != betas.shape:
        raise InvalidArgument("alphas and betas must be nonempty and of equal length")
    if np.any(alphas <= 0) or np.any(betas <= 0) or a <= 0:
        raise InvalidArgument("azuma_bound needs positive inputs")
    return 2.0 * math.exp(-a ** 2 / (2.0 * float(np.sum((alphas + betas) ** 2))))


def mcdiarmid_bound(a, rhos):
    """``2 exp(-2 a^2 / sum rho_i^2)``."""
    rhos = np.asarray(rhos, dtype=float)
    if rhos.size == 0:
        raise InvalidArgument("rhos must be nonempty")
    if np.any(rhos <= 0) or a <= 0:
        raise InvalidArgument("mcdiarmid_bound needs positive inputs")
    return 2.0 * math.exp(-2.0 * a ** 2 / float(np.sum(rhos ** 2)))


def delta_psi_mean(a, m):
    """One-coordinate sensitivity ``a / m`` of the mean aggregator."""
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    return a / m
