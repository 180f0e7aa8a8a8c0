"""Random data generation for elliptical and non-elliptical models.

This module provides the mixing distributions for the squared radius
``xi^2`` (normalized so that ``E(xi^2) = p``), the four covariance models
used in the level and power experiments, the elliptical sampler
``x = xi * Sigma^{1/2} u`` with ``u`` uniform on the unit sphere, the
perturbed-Gaussian alternative sampler, and the moment ratios ``r_k``.

Typical usage:
    import numpy as np
    from elliptical_gof import models

    rng = np.random.default_rng(1)
    mix = models.level_setting("iv", p=200)
    sigma, root = models.covariance_root(
        models.CovarianceModel(models.CovarianceKind.TOEPLITZ, p=200),
        rng,
    )
    data = models.elliptical_sample(400, root, mix, rng)
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Final

import numpy as np
from numpy.typing import NDArray
from scipy import linalg, special
from tenacity import (
    before_sleep_log,
    retry,
    retry_if_exception_type,
    stop_after_attempt,
)

from .errors import (
    UnsupportedMomentError,
    ValidationError,
    ZeroDirectionError,
)
from .numkit import (
    DataMatrix,
    SymMatrix,
    check_symmetric,
    haar_orthogonal,
    sym_sqrt,
    trace_powers,
)

#: Create logger for this module.
logger = logging.getLogger(__name__)

#: Largest moment order accepted by :func:`compute_rk`.
MAX_RK_ORDER: Final[int] = 8


class MixingFamily(Enum):
    """Families for the law of the squared radius ``xi^2``."""

    CHI_SQUARED = "chi_squared"
    POISSON = "poisson"
    NEGATIVE_BINOMIAL_SCALED = "negative_binomial_scaled"
    BETA_SCALED = "beta_scaled"
    GAMMA_SHAPE_RATE = "gamma_shape_rate"
    BETA_PRIME = "beta_prime"
    LOG_NORMAL = "log_normal"
    GAMMA_SQUARED_SCALED = "gamma_squared_scaled"


#: Families parameterized by ``tau``.
_TAU_FAMILIES: Final[frozenset[MixingFamily]] = frozenset({
    MixingFamily.NEGATIVE_BINOMIAL_SCALED,
    MixingFamily.GAMMA_SHAPE_RATE,
    MixingFamily.BETA_PRIME,
    MixingFamily.LOG_NORMAL,
})


def _norm_moment(p: int, k: int) -> float:
    """``E(||z||^{2k})`` for a standard normal ``z`` in dimension ``p``."""
    return math.prod(float(p + 2 * step) for step in range(k))


@dataclass(frozen=True)
class MixingDistribution:
    """Law of ``xi^2`` with ``E(xi^2) = p``.

    Attributes:
        family: Distribution family.
        p: Dimension the law is tied to.
        tau: Limit of ``var((xi^2 - p) / sqrt(p))`` for the families
            parameterized by it.
        b: Second Beta parameter of the scaled Beta family.

    """

    family: MixingFamily
    p: int
    tau: float | None = None
    b: float | None = None

    def __post_init__(self) -> None:
        """Validate the parameterization.

        Raises:
            ValidationError: If a parameter is missing or out of range.

        """
        if self.p < 1:
            msg = f"Dimension must be positive, got {self.p}"
            raise ValidationError(msg)
        if self.family in _TAU_FAMILIES:
            if self.tau is None or self.tau <= 0:
                msg = f"{self.family.value} requires tau > 0"
                raise ValidationError(msg)
            if (
                self.family is MixingFamily.NEGATIVE_BINOMIAL_SCALED
                and self.tau >= 1
            ):
                msg = (
                    "negative_binomial_scaled requires tau < 1, "
                    f"got {self.tau}"
                )
                raise ValidationError(msg)
        if self.family is MixingFamily.BETA_SCALED and (
            self.b is None or self.b <= 0
        ):
            msg = f"beta_scaled requires b > 0, got {self.b}"
            raise ValidationError(msg)

    @property
    def _beta_prime_shapes(self) -> tuple[float, float]:
        p, tau = self.p, self.tau
        return (p * (1 + p + tau) / tau, (1 + p + 2 * tau) / tau)

    @property
    def _log_normal_params(self) -> tuple[float, float]:
        var_log = math.log1p(self.tau / self.p)
        return (math.log(self.p) - var_log / 2, var_log)

    def sample(
        self,
        rng: np.random.Generator,
        size: int | None = None,
    ) -> NDArray[np.float64] | float:
        """Draw ``xi^2``.

        Args:
            rng: Random generator.
            size: Number of draws, or ``None`` for a single scalar draw.

        Returns:
            The draws.

        """
        p = self.p
        match self.family:
            case MixingFamily.CHI_SQUARED:
                draws = rng.chisquare(p, size)
            case MixingFamily.POISSON:
                draws = np.asarray(rng.poisson(p, size), dtype=np.float64)
            case MixingFamily.NEGATIVE_BINOMIAL_SCALED:
                # numpy counts failures; adding p gives the trial count.
                success = 1.0 - self.tau
                draws = success * (p + rng.negative_binomial(p, success, size))
            case MixingFamily.BETA_SCALED:
                draws = (p + 2 * self.b) * rng.beta(p / 2, self.b, size)
            case MixingFamily.GAMMA_SHAPE_RATE:
                draws = rng.gamma(p / self.tau, self.tau, size)
            case MixingFamily.BETA_PRIME:
                alpha, beta = self._beta_prime_shapes
                numer = rng.gamma(alpha, 1.0, size)
                draws = numer / rng.gamma(beta, 1.0, size)
            case MixingFamily.LOG_NORMAL:
                mean_log, var_log = self._log_normal_params
                draws = rng.lognormal(mean_log, math.sqrt(var_log), size)
            case MixingFamily.GAMMA_SQUARED_SCALED:
                draws = rng.gamma(p, 1.0, size) ** 2 / (p + 1)
        if size is None:
            return float(draws)
        return np.asarray(draws, dtype=np.float64)

    def mean(self) -> float:
        """Analytic ``E(xi^2)``, equal to ``p`` for every family."""
        return self.moment(1)

    def scaled_variance(self) -> float:
        """Analytic ``var((xi^2 - p) / sqrt(p))``.

        Returns:
            The variance at the current dimension.

        """
        p = self.p
        match self.family:
            case MixingFamily.CHI_SQUARED:
                return 2.0
            case MixingFamily.POISSON:
                return 1.0
            case MixingFamily.NEGATIVE_BINOMIAL_SCALED:
                return float(self.tau)
            case MixingFamily.GAMMA_SHAPE_RATE:
                return float(self.tau)
            case MixingFamily.GAMMA_SQUARED_SCALED:
                return (4.0 * p + 6.0) / (p + 1.0)
        return (self.moment(2) - p**2) / p

    def moment(self, k: int) -> float:
        """Analytic ``E(xi^{2k})``.

        Args:
            k: Moment order, at least 1.

        Returns:
            The raw moment of order ``k`` of ``xi^2``.

        Raises:
            UnsupportedMomentError: If the family has no closed form wired
                in or the moment does not exist.

        """
        p = self.p
        match self.family:
            case MixingFamily.CHI_SQUARED:
                return _norm_moment(p, k)
            case MixingFamily.POISSON:
                return float(
                    sum(
                        special.stirling2(k, j, exact=True) * p**j
                        for j in range(k + 1)
                    ),
                )
            case MixingFamily.GAMMA_SHAPE_RATE:
                shape = p / self.tau
                return math.prod(
                    (shape + step) * self.tau for step in range(k)
                )
            case MixingFamily.BETA_SCALED:
                half = p / 2
                return math.prod(
                    (p + 2 * self.b) * (half + step) / (half + self.b + step)
                    for step in range(k)
                )
            case MixingFamily.BETA_PRIME:
                alpha, beta = self._beta_prime_shapes
                if beta <= k:
                    msg = f"beta_prime moment {k} does not exist"
                    raise UnsupportedMomentError(msg)
                return math.prod(
                    (alpha + step - 1) / (beta - step)
                    for step in range(1, k + 1)
                )
            case MixingFamily.LOG_NORMAL:
                mean_log, var_log = self._log_normal_params
                return math.exp(k * mean_log + k * k * var_log / 2)
            case MixingFamily.NEGATIVE_BINOMIAL_SCALED if k <= 2:
                return float(p) if k == 1 else p * p + p * self.tau
            case MixingFamily.GAMMA_SQUARED_SCALED:
                return math.prod(
                    float(p + step) for step in range(2 * k)
                ) / float(p + 1) ** k
        msg = f"No closed-form moment for {self.family.value}"
        raise UnsupportedMomentError(msg)


def sample_xi2(
    mix: MixingDistribution,
    rng: np.random.Generator,
    size: int | None = None,
) -> NDArray[np.float64] | float:
    """Draw from the law of ``xi^2``.

    Args:
        mix: Mixing distribution.
        rng: Random generator.
        size: Number of draws, or ``None`` for one scalar.

    Returns:
        The draws.

    """
    return mix.sample(rng, size)


class MomentRatio:
    """Evaluate ``r_k = E(xi^{2k}) / E(||z||^{2k})``."""

    #: Monte Carlo draws for families without a closed-form moment.
    MONTE_CARLO_DRAWS: ClassVar[int] = 1_000_000
    #: Seed of the Monte Carlo route.
    MONTE_CARLO_SEED: ClassVar[int] = 20_240_601

    @classmethod
    def compute(cls, mix: MixingDistribution, k: int) -> float:
        """Compute the moment ratio of order ``k``.

        Args:
            mix: Mixing distribution.
            k: Order between 1 and 8.

        Returns:
            The ratio ``r_k``.

        Raises:
            ValidationError: If ``k`` is out of range.
            UnsupportedMomentError: If the moment does not exist.

        """
        if not 1 <= k <= MAX_RK_ORDER:
            msg = f"Moment order must be in 1..{MAX_RK_ORDER}, got {k}"
            raise ValidationError(msg)
        denominator = _norm_moment(mix.p, k)
        try:
            return mix.moment(k) / denominator
        except UnsupportedMomentError:
            if mix.family is not MixingFamily.NEGATIVE_BINOMIAL_SCALED:
                raise
        logger.debug(
            "Estimate r_%d of %s with %d draws",
            k,
            mix.family.value,
            cls.MONTE_CARLO_DRAWS,
        )
        rng = np.random.default_rng(cls.MONTE_CARLO_SEED)
        draws = mix.sample(rng, cls.MONTE_CARLO_DRAWS) / mix.p
        # Rescaled by p^k to stay in range for k = 8.
        return float(np.mean(draws**k)) * mix.p**k / denominator


def compute_rk(mix: MixingDistribution, k: int) -> float:
    """Compute ``r_k = E(xi^{2k}) / prod_{l<k}(p + 2l)``.

    Args:
        mix: Mixing distribution.
        k: Order between 1 and 8.

    Returns:
        The moment ratio, exactly 1 for the chi-squared family.

    """
    return MomentRatio.compute(mix, k)


def elliptical_varsigma_sq(mix: MixingDistribution, sigma: SymMatrix) -> float:
    """Population ``var(||x||^2)`` of an elliptical model.

    Args:
        mix: Mixing distribution.
        sigma: Covariance matrix.

    Returns:
        ``r_2 (2 nu_2 + nu_1^2) - nu_1^2``.

    """
    summary = trace_powers(sigma)
    r2 = compute_rk(mix, 2)
    return r2 * (2 * summary.nu2 + summary.nu1**2) - summary.nu1**2


class CovarianceKind(Enum):
    """Covariance models of the simulation study."""

    SPIKED_GENERIC = 1
    TOEPLITZ = 2
    DECAY_GENERIC = 3
    IDENTITY = 4


@dataclass(frozen=True)
class CovarianceModel:
    """Description of a population covariance matrix.

    Attributes:
        kind: Covariance model.
        p: Dimension.
        rho: Toeplitz correlation decay.
        spike_count: Number of spiked eigenvalues.
        spike_value: Value of the spiked eigenvalues.
        decay_exponent: Exponent of the decaying eigenvalues ``j^-a``.

    """

    kind: CovarianceKind
    p: int
    rho: float = 0.1
    spike_count: int = 5
    spike_value: float = 5.0
    decay_exponent: float = 0.25

    def __post_init__(self) -> None:
        """Validate the model.

        Raises:
            ValidationError: If a parameter is out of range.

        """
        if self.p < 1:
            msg = f"Dimension must be positive, got {self.p}"
            raise ValidationError(msg)
        if abs(self.rho) >= 1:
            msg = f"Toeplitz rho must satisfy |rho| < 1, got {self.rho}"
            raise ValidationError(msg)
        if self.kind is CovarianceKind.SPIKED_GENERIC:
            if not 0 <= self.spike_count <= self.p:
                msg = (
                    f"Spike count must be in 0..{self.p}, "
                    f"got {self.spike_count}"
                )
                raise ValidationError(msg)
            if self.spike_value <= 0:
                msg = f"Spike value must be positive, got {self.spike_value}"
                raise ValidationError(msg)

    def eigenvalues(self) -> NDArray[np.float64] | None:
        """Eigenvalues of the generic-eigenvector models, else ``None``."""
        match self.kind:
            case CovarianceKind.SPIKED_GENERIC:
                values = np.ones(self.p)
                values[: self.spike_count] = self.spike_value
                return values
            case CovarianceKind.DECAY_GENERIC:
                return np.arange(1, self.p + 1, dtype=np.float64) ** (
                    -self.decay_exponent
                )
        return None


def covariance_root(
    model: CovarianceModel,
    rng: np.random.Generator,
) -> tuple[SymMatrix, SymMatrix]:
    """Build a covariance matrix together with its symmetric square root.

    Args:
        model: Covariance model.
        rng: Random generator for the Haar eigenvectors.

    Returns:
        ``(Sigma, Sigma^{1/2})``.

    """
    logger.debug("Build %s covariance, p=%d", model.kind.name, model.p)
    eigvals = model.eigenvalues()
    if eigvals is not None:
        basis = haar_orthogonal(model.p, rng)
        sigma = (basis * eigvals) @ basis.T
        root = (basis * np.sqrt(eigvals)) @ basis.T
        return (sigma + sigma.T) / 2.0, (root + root.T) / 2.0
    if model.kind is CovarianceKind.TOEPLITZ:
        sigma = linalg.toeplitz(model.rho ** np.arange(model.p))
        return sigma, sym_sqrt(sigma)
    eye = np.eye(model.p)
    return eye, eye.copy()


def build_covariance(
    model: CovarianceModel,
    rng: np.random.Generator,
) -> SymMatrix:
    """Build the covariance matrix of a model.

    Args:
        model: Covariance model.
        rng: Random generator for the Haar eigenvectors.

    Returns:
        Symmetric positive semidefinite matrix with positive diagonal.

    """
    return covariance_root(model, rng)[0]


@retry(
    retry=retry_if_exception_type(ZeroDirectionError),
    stop=stop_after_attempt(5),
    before_sleep=before_sleep_log(logger, logging.DEBUG),
    reraise=True,
)
def _unit_directions(
    n: int,
    p: int,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Draw ``n`` directions uniform on the unit sphere of ``R^p``.

    Raises:
        ZeroDirectionError: If a Gaussian draw has zero norm.

    """
    gauss = rng.standard_normal((n, p))
    norms = np.linalg.norm(gauss, axis=1)
    if np.any(norms == 0):
        msg = "Gaussian direction with zero norm"
        raise ZeroDirectionError(msg)
    return gauss / norms[:, None]


def _check_sample_size(n: int) -> None:
    if n < 1:
        msg = f"Sample size must be positive, got {n}"
        raise ValidationError(msg)


def _root_dimension(sigma_root: SymMatrix | None, p: int) -> None:
    if sigma_root is not None and sigma_root.shape != (p, p):
        msg = (
            f"Covariance root has shape {sigma_root.shape}, "
            f"expected ({p}, {p})"
        )
        raise ValidationError(msg)


def elliptical_sample(
    n: int,
    sigma_root: SymMatrix | None,
    mix: MixingDistribution,
    rng: np.random.Generator,
) -> DataMatrix:
    """Sample ``n`` rows ``xi * Sigma^{1/2} u``.

    Args:
        n: Number of observations.
        sigma_root: Symmetric ``Sigma^{1/2}``, or ``None`` for the identity.
        mix: Mixing distribution, with ``mix.p`` the dimension.
        rng: Random generator.

    Returns:
        The ``n x p`` data matrix.

    Raises:
        ValidationError: If ``n`` is not positive or the dimensions differ.

    """
    _check_sample_size(n)
    _root_dimension(sigma_root, mix.p)
    directions = _unit_directions(n, mix.p, rng)
    radii = np.sqrt(mix.sample(rng, n))
    data = directions * radii[:, None]
    if sigma_root is None:
        return data
    return data @ sigma_root


def gaussian_sample(
    n: int,
    sigma_root: SymMatrix | None,
    p: int,
    rng: np.random.Generator,
) -> DataMatrix:
    """Sample ``n`` rows from ``N(0, Sigma)``.

    Args:
        n: Number of observations.
        sigma_root: Symmetric ``Sigma^{1/2}``, or ``None`` for the identity.
        p: Dimension.
        rng: Random generator.

    Returns:
        The ``n x p`` data matrix.

    """
    _check_sample_size(n)
    _root_dimension(sigma_root, p)
    data = rng.standard_normal((n, p))
    if sigma_root is None:
        return data
    return data @ sigma_root


class ShockFamily(Enum):
    """Standardized non-Gaussian shocks of the alternative model."""

    LAPLACE_STD = "a"
    BETA_STD = "b"


#: Mean and standard deviation of Beta(2, 3/2).
_BETA_SHOCK_MEAN: Final[float] = 4.0 / 7.0
_BETA_SHOCK_STD: Final[float] = math.sqrt(8.0 / 147.0)


def sample_shock(
    shock: ShockFamily,
    rng: np.random.Generator,
    size: int | tuple[int, ...],
) -> NDArray[np.float64]:
    """Draw standardized shocks with mean 0 and variance 1.

    Args:
        shock: Shock family.
        rng: Random generator.
        size: Output shape.

    Returns:
        The draws.

    """
    if shock is ShockFamily.LAPLACE_STD:
        return rng.laplace(0.0, 1.0, size) / math.sqrt(2.0)
    return (rng.beta(2.0, 1.5, size) - _BETA_SHOCK_MEAN) / _BETA_SHOCK_STD


@dataclass(frozen=True, eq=False)
class AlternativeModel:
    """Perturbed Gaussian model ``x = Sigma^{1/2} s``.

    Attributes:
        sigma_root: Symmetric ``Sigma^{1/2}``, or ``None`` for the identity.
        h: Mixing weight of the non-Gaussian shock in ``[0, 1]``.
        shock: Shock family.
        p: Dimension.

    """

    sigma_root: SymMatrix | None
    h: float
    shock: ShockFamily
    p: int = field(default=0)

    def __post_init__(self) -> None:
        """Validate the model.

        Raises:
            ValidationError: If ``h`` is outside ``[0, 1]`` or no dimension
                can be determined.

        """
        if not 0.0 <= self.h <= 1.0:
            msg = f"Perturbation weight h must be in [0, 1], got {self.h}"
            raise ValidationError(msg)
        if self.sigma_root is not None:
            root = check_symmetric(self.sigma_root)
            object.__setattr__(self, "sigma_root", root)
            object.__setattr__(self, "p", root.shape[0])
        if self.p < 1:
            msg = "Alternative model needs sigma_root or a positive p"
            raise ValidationError(msg)


def alternative_sample(
    n: int,
    alt: AlternativeModel,
    rng: np.random.Generator,
) -> DataMatrix:
    """Sample ``n`` rows with i.i.d. entries ``sqrt(1-h) z + sqrt(h) y``.

    With ``h = 0`` no shock is drawn and the output equals
    :func:`gaussian_sample` on the same generator state.

    Args:
        n: Number of observations.
        alt: Alternative model.
        rng: Random generator.

    Returns:
        The ``n x p`` data matrix.

    """
    _check_sample_size(n)
    noise = rng.standard_normal((n, alt.p))
    if alt.h > 0:
        shocks = sample_shock(alt.shock, rng, (n, alt.p))
        noise = math.sqrt(1.0 - alt.h) * noise + math.sqrt(alt.h) * shocks
    if alt.sigma_root is None:
        return noise
    return noise @ alt.sigma_root


#: Mixing settings of the level study, keyed by roman numeral.
LEVEL_SETTINGS: Final[tuple[str, ...]] = ("i", "ii", "iii", "iv", "v")


def level_setting(label: str, p: int) -> MixingDistribution:
    """Mixing distribution of a level-study setting.

    Args:
        label: One of ``"i"`` to ``"v"``.
        p: Dimension.

    Returns:
        (i) chi-squared, (ii) Beta-Prime with ``tau = 3``, (iii) scaled Beta
        with ``b = 2``, (iv) Gamma with ``tau = 5``, (v) scaled squared
        Gamma.

    Raises:
        ValidationError: If the label is unknown.

    """
    match label.strip().lower():
        case "i":
            return MixingDistribution(MixingFamily.CHI_SQUARED, p)
        case "ii":
            return MixingDistribution(MixingFamily.BETA_PRIME, p, tau=3.0)
        case "iii":
            return MixingDistribution(MixingFamily.BETA_SCALED, p, b=2.0)
        case "iv":
            return MixingDistribution(
                MixingFamily.GAMMA_SHAPE_RATE,
                p,
                tau=5.0,
            )
        case "v":
            return MixingDistribution(MixingFamily.GAMMA_SQUARED_SCALED, p)
    msg = f"Unknown mixing setting: {label}"
    raise ValidationError(msg)


def shock_family(label: str) -> ShockFamily:
    """Shock family from its label ``"a"`` (Laplace) or ``"b"`` (Beta).

    Raises:
        ValidationError: If the label is unknown.

    """
    try:
        return ShockFamily(label.strip().lower())
    except ValueError:
        msg = f"Unknown shock family: {label}"
        raise ValidationError(msg) from None


def covariance_kind(label: int | str) -> CovarianceKind:
    """Covariance model from its number 1 to 4.

    Raises:
        ValidationError: If the label is unknown.

    """
    try:
        return CovarianceKind(int(str(label).strip("() ")))
    except ValueError:
        msg = f"Unknown covariance model: {label}"
        raise ValidationError(msg) from None
