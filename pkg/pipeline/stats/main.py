"""
Stats Operations

Annealed correlation decay, multiple mixing, Green-Kubo variance and
central-limit experiments. Every quantity is available from mode-space
propagation ("operator") and, where it makes sense, from Monte Carlo over
sampled words and uniform initial points.
"""

from typing import Optional, Sequence

import logfire
import numpy as np
from scipy.stats import kendalltau, kstest

from pipeline.cocycle.models import CocycleBudget
from pipeline.core.exceptions import BudgetExceededError, ConfigurationError, DimensionMismatchError
from pipeline.core.streams import map_blocks, ordered_concat
from pipeline.measure.models import DrivingMeasure
from pipeline.spectral.utils import MODE_MAGNITUDE_LIMIT

from .models import (
    BerryEsseenRow,
    BerryEsseenTable,
    CLTReport,
    CorrelationMethod,
    CorrelationSeries,
    GreenKuboEstimate,
    MixingRateFit,
    Observable,
    TripleCorrelation,
)
from .utils import multiply, propagator_for, require_torus, step_points

OPERATOR_NOISE_FLOOR = 1e-13
MC_NOISE_MULTIPLE = 10.0
MIN_SERIES_LENGTH = 6
MIN_CLT_STEPS = 100
MIN_CLT_TRIALS = 1000
TREND_LEVEL = 0.05


def _check_observables(model, *observables: Observable) -> None:
    require_torus(model)
    for phi in observables:
        if phi.dimension != model.state_dimension:
            raise DimensionMismatchError(
                f"Observable lives on T^{phi.dimension}, model state dimension is {model.state_dimension}"
            )


def _reduce_moments(parts, samples: int):
    """Ordered reduction of per-block (sum, sum of squares) pairs to mean and stderr."""
    total = sum(p[0] for p in parts)
    squares = sum(p[1] for p in parts)
    mean = total / samples
    var = (squares - samples * (mean.real ** 2 + mean.imag ** 2)) / max(samples - 1, 1)
    return mean, np.sqrt(np.maximum(var, 0.0) / samples)


def _moments(products: np.ndarray):
    return products.sum(axis=0), (np.abs(products) ** 2).sum(axis=0)


# ===================================================================
# PAIR CORRELATIONS
# ===================================================================

def correlation_series(
    model,
    mu: DrivingMeasure,
    phi: Observable,
    psi: Observable,
    n_max: int,
    method: CorrelationMethod | str = CorrelationMethod.OPERATOR,
    budget: Optional[CocycleBudget] = None,
    K: Optional[int] = None,
) -> CorrelationSeries:
    """
    <phi, G^n psi> = E int phi(x) psi(f_w x) dx for n = 0..n_max.

    Args:
        method: "operator" propagates psi in mode space (exact word sums for
            affine models, Galerkin box K for pierrehumbert); "monte-carlo"
            averages phi(x) psi(f_w x) over budget.mc_samples draws
        K: Galerkin box radius (default max(8, 2 K_obs))

    With the operator method the series ends early, at ``stopped_at``, when
    the pushed modes outgrow the integer range.

    Raises:
        ConfigurationError: observable band exceeds the operator box
        BudgetExceededError: exact word sums exceed the word cap
    """
    method = CorrelationMethod(method)
    budget = budget or CocycleBudget()
    _check_observables(model, phi, psi)
    if n_max < 0:
        raise ConfigurationError("n_max must be >= 0", key="n_max")

    with logfire.span("stats.correlation_series", model_id=model.model_id, n_max=n_max, method=method.value):
        if method == CorrelationMethod.OPERATOR:
            prop = propagator_for(model, mu, K, max(phi.K_obs, psi.K_obs), budget.word_cap)
            expansion = (psi.modes, psi.coeffs)
            values = [phi.pair(*expansion)]
            stopped_at = None
            for n in range(1, n_max + 1):
                try:
                    expansion = prop.step(expansion)
                except BudgetExceededError as e:
                    if e.limit_name != MODE_MAGNITUDE_LIMIT:
                        raise
                    stopped_at = n - 1
                    logfire.warning("Correlation series stopped early", requested=n_max, horizon=stopped_at)
                    break
                values.append(phi.pair(*expansion))
            values = np.asarray(values)
            return CorrelationSeries(
                method=method,
                values=values.real.tolist(),
                imag=values.imag.tolist(),
                stderr=[0.0] * len(values),
                max_truncation_loss=prop.max_truncation_loss,
                requested_n_max=n_max,
                stopped_at=stopped_at,
            )

        d = model.state_dimension

        def block(indices: range, rng: np.random.Generator):
            x = rng.random((len(indices), d))
            start = phi.evaluate(x)
            products = np.empty((len(indices), n_max + 1), dtype=complex)
            for n in range(n_max + 1):
                products[:, n] = start * psi.evaluate(x)
                if n < n_max:
                    x = step_points(model, mu, x, rng)
            return _moments(products)

        parts = map_blocks(block, budget.mc_samples, budget.seed, budget.block_size, budget.threads)
        mean, stderr = _reduce_moments(parts, budget.mc_samples)
        return CorrelationSeries(
            method=method,
            values=mean.real.tolist(),
            imag=mean.imag.tolist(),
            stderr=stderr.tolist(),
            samples=budget.mc_samples,
            requested_n_max=n_max,
        )


def mixing_rate_fit(series: CorrelationSeries) -> MixingRateFit:
    """
    Geometric decay rate of |<phi, G^n psi>|.

    Fits ln|value| against n over the longest run of entries above the noise
    floor (10 x stderr for Monte Carlo, 1e-13 for the operator method).
    ``decaying`` requires theta_hat < 1 and the last third of the window to
    sit below half the first third.
    """
    if len(series.values) < MIN_SERIES_LENGTH:
        raise ConfigurationError(
            f"Need at least {MIN_SERIES_LENGTH} correlation values, got {len(series.values)}", key="n_max"
        )
    moduli = series.moduli()
    if series.method == CorrelationMethod.MONTE_CARLO:
        floor = MC_NOISE_MULTIPLE * np.asarray(series.stderr)
    else:
        floor = np.full(moduli.shape, OPERATOR_NOISE_FLOOR)
    above = moduli > floor

    best, start = (0, -1), None
    for n, ok in enumerate(np.append(above, False)):
        if ok and start is None:
            start = n
        elif not ok and start is not None:
            if n - start > best[1] - best[0] + 1 or best[1] < 0:
                best = (start, n - 1)
            start = None

    lo, hi = best
    if hi < 0 or hi - lo + 1 < 2:
        logfire.warning("Correlation series below noise", floor=float(floor.max()))
        return MixingRateFit(below_noise=True)

    ns = np.arange(lo, hi + 1)
    logs = np.log(moduli[lo:hi + 1])
    slope, intercept = np.polyfit(ns, logs, 1)
    residual = float(np.sqrt(np.mean((logs - (slope * ns + intercept)) ** 2)))
    theta = float(np.exp(slope))

    third = max(1, ns.size // 3)
    head, tail = moduli[lo:lo + third].max(), moduli[hi + 1 - third:hi + 1].max()
    decaying = theta < 1.0 and tail <= 0.5 * head
    if not decaying:
        logfire.warning("Correlation series does not decay", theta_hat=theta)
    return MixingRateFit(theta_hat=theta, window=(int(lo), int(hi)), residual=residual, decaying=decaying)


# ===================================================================
# MULTIPLE MIXING
# ===================================================================

def _triple_operator(model, mu, phi0, phi1, phi2, n1, n2, budget, K) -> complex:
    prop = propagator_for(model, mu, K, max(phi0.K_obs, phi1.K_obs, phi2.K_obs), budget.word_cap)
    expansion = (phi2.modes, phi2.coeffs)
    for _ in range(n2 - n1):
        expansion = prop.step(expansion)
    expansion = multiply((phi1.modes, phi1.coeffs), expansion)
    for _ in range(n1):
        expansion = prop.step(expansion)
    return phi0.pair(*expansion)


def _triple_monte_carlo(model, mu, phi0, phi1, phi2, n1, n2, budget):
    d = model.state_dimension

    def block(indices: range, rng: np.random.Generator):
        x = rng.random((len(indices), d))
        product = phi0.evaluate(x).astype(complex)
        if n1 == 0:
            product = product * phi1.evaluate(x)
        for n in range(1, n2 + 1):
            x = step_points(model, mu, x, rng)
            if n == n1:
                product = product * phi1.evaluate(x)
        product = product * phi2.evaluate(x)
        return _moments(product[:, None])

    parts = map_blocks(block, budget.mc_samples, budget.seed, budget.block_size, budget.threads)
    mean, stderr = _reduce_moments(parts, budget.mc_samples)
    return complex(mean[0]), float(stderr[0])


def triple_correlation(
    model,
    mu: DrivingMeasure,
    phi0: Observable,
    phi1: Observable,
    phi2: Observable,
    n1: int,
    n2: int,
    budget: Optional[CocycleBudget] = None,
    method: CorrelationMethod | str = CorrelationMethod.MONTE_CARLO,
    K: Optional[int] = None,
) -> TripleCorrelation:
    """
    E int phi0 . G^{n1}(phi1 . G^{n2 - n1} phi2) dx.

    The operator method multiplies expansions by mode convolution; when the
    product leaves the operator box (or exact word sums exceed the cap) it
    falls back to Monte Carlo with a warning.
    """
    method = CorrelationMethod(method)
    budget = budget or CocycleBudget()
    _check_observables(model, phi0, phi1, phi2)
    if not 0 <= n1 <= n2:
        raise ConfigurationError(f"Need 0 <= n1 <= n2, got n1={n1}, n2={n2}", key="n1")
    if not phi0.zero_mean:
        raise ConfigurationError("phi0 must have zero mean", key="phi0")

    with logfire.span("stats.triple_correlation", model_id=model.model_id, n1=n1, n2=n2, method=method.value):
        if method == CorrelationMethod.OPERATOR:
            try:
                value = _triple_operator(model, mu, phi0, phi1, phi2, n1, n2, budget, K)
                return TripleCorrelation(value=(value.real, value.imag), stderr=0.0, method=method, n1=n1, n2=n2)
            except BudgetExceededError as e:
                logfire.warning("Operator triple correlation fell back to Monte Carlo", reason=str(e))
                value, stderr = _triple_monte_carlo(model, mu, phi0, phi1, phi2, n1, n2, budget)
                return TripleCorrelation(
                    value=(value.real, value.imag), stderr=stderr, method=CorrelationMethod.MONTE_CARLO,
                    n1=n1, n2=n2, fell_back=True,
                )

        value, stderr = _triple_monte_carlo(model, mu, phi0, phi1, phi2, n1, n2, budget)
        return TripleCorrelation(value=(value.real, value.imag), stderr=stderr, method=method, n1=n1, n2=n2)


# ===================================================================
# VARIANCE AND CLT
# ===================================================================

def _require_real_zero_mean(phi: Observable) -> None:
    if not phi.zero_mean:
        raise ConfigurationError("Observable must have zero mean", key="observable")
    if not phi.is_real:
        raise ConfigurationError("Observable must be real (conjugate-symmetric coefficients)", key="observable")


def green_kubo_variance(
    model,
    mu: DrivingMeasure,
    phi: Observable,
    n_max: int = 200,
    budget: Optional[CocycleBudget] = None,
    K: Optional[int] = None,
) -> GreenKuboEstimate:
    """
    sigma^2 = |phi|^2 + 2 sum_{n >= 1} <phi, G^n phi>, summed to n_max.

    For hyperbolic affine models the pushed modes outgrow the integer range
    after a few dozen steps; the sum then stops at the last computed lag and
    ``n_max`` reports that horizon.

    The tail beyond the horizon is bounded geometrically with the fitted rate. A
    series without decay, or a partial sum below minus the tail bound, gives
    no value and a diagnostic instead.
    """
    _require_real_zero_mean(phi)
    series = correlation_series(model, mu, phi, phi, n_max, CorrelationMethod.OPERATOR, budget, K)
    values = np.asarray(series.values)
    partial = float(values[0] + 2.0 * values[1:].sum())

    fit = mixing_rate_fit(series)
    tail = 0.0
    diagnostic = None
    if fit.decaying:
        theta = fit.theta_hat
        envelope = max(abs(values[-1]), OPERATOR_NOISE_FLOOR)
        tail = 2.0 * envelope * theta / (1.0 - theta)
    elif np.all(series.moduli()[1:] <= OPERATOR_NOISE_FLOOR):
        # No correlation beyond n = 0
        tail = 0.0
    else:
        diagnostic = f"correlation series does not decay (theta_hat={fit.theta_hat})"

    sigma2 = None
    if diagnostic is None:
        if partial + tail < 0.0:
            diagnostic = f"partial sum {partial:.6g} is negative beyond the tail bound {tail:.3g}"
        else:
            sigma2 = max(partial, 0.0)

    if diagnostic:
        logfire.warning("Green-Kubo variance unavailable", diagnostic=diagnostic)
    return GreenKuboEstimate(
        sigma2=sigma2,
        partial_sum=partial,
        tail_bound=tail,
        theta_hat=fit.theta_hat,
        n_max=series.n_max,
        requested_n_max=n_max,
        diagnostic=diagnostic,
    )


def _birkhoff_sums(model, mu, phi, N, trials, seed, threads, block_size, stream_offset=0) -> np.ndarray:
    """S_N / sqrt(N) per trial, S_N = sum_{j < N} phi(f^j x_0)."""
    d = model.state_dimension

    def block(indices: range, rng: np.random.Generator):
        x = rng.random((len(indices), d))
        acc = np.zeros(len(indices))
        for j in range(N):
            acc += phi.evaluate(x)
            if j < N - 1:
                x = step_points(model, mu, x, rng)
        return acc

    parts = map_blocks(block, trials, seed, block_size, threads, stream_offset=stream_offset)
    return ordered_concat(parts) / np.sqrt(N)


def _reference_variance(model, mu, phi, sigma2_gk, gk_n_max, K):
    if sigma2_gk is not None:
        return sigma2_gk, None
    try:
        gk = green_kubo_variance(model, mu, phi, gk_n_max, K=K)
    except BudgetExceededError as e:
        return None, f"Green-Kubo variance not computable: {e}"
    return gk.sigma2, gk.diagnostic


def _ks(sums: np.ndarray, variance: float):
    result = kstest(sums, "norm", args=(0.0, float(np.sqrt(variance))))
    return float(result.statistic), float(result.pvalue)


def clt_experiment(
    model,
    mu: DrivingMeasure,
    phi: Observable,
    N: int,
    trials: int,
    seed: int = 0,
    threads: int = 1,
    block_size: Optional[int] = None,
    sigma2_gk: Optional[float] = None,
    gk_n_max: int = 200,
    K: Optional[int] = None,
) -> CLTReport:
    """
    Distribution of S_N / sqrt(N) over independent (word, x_0) trials.

    The KS distance is taken against N(0, sigma2_gk). When sigma2_gk is not
    available (no decay of correlations) it is taken against the empirical
    variance and the report says so.
    """
    if N < MIN_CLT_STEPS:
        raise ConfigurationError(f"N must be >= {MIN_CLT_STEPS}, got {N}", key="N")
    if trials < MIN_CLT_TRIALS:
        raise ConfigurationError(f"trials must be >= {MIN_CLT_TRIALS}, got {trials}", key="trials")
    _check_observables(model, phi)
    _require_real_zero_mean(phi)
    block_size = block_size or CocycleBudget().block_size

    if phi.is_zero:
        logfire.warning("Zero observable: degenerate CLT")
        return CLTReport(sigma2_gk=0.0, sigma2_mc=0.0, N=N, trials=trials, degenerate=True,
                         diagnostic="observable is identically zero")

    with logfire.span("stats.clt_experiment", model_id=model.model_id, N=N, trials=trials, seed=seed):
        reference_var, diagnostic = _reference_variance(model, mu, phi, sigma2_gk, gk_n_max, K)
        sums = _birkhoff_sums(model, mu, phi, N, trials, seed, threads, block_size)
        sigma2_mc = float(np.var(sums, ddof=1))

        reference = "green-kubo"
        if reference_var is None or reference_var <= 0.0:
            reference = "empirical"
            reference_var = sigma2_mc
            diagnostic = diagnostic or "Green-Kubo variance is zero"
        ks, pvalue = _ks(sums, reference_var) if reference_var > 0 else (None, None)

        report = CLTReport(
            sigma2_gk=None if reference == "empirical" else reference_var,
            sigma2_mc=sigma2_mc,
            ks_distance=ks,
            ks_pvalue=pvalue,
            N=N,
            trials=trials,
            reference=reference,
            degenerate=reference_var == 0.0,
            diagnostic=diagnostic,
        )
        logfire.info("CLT experiment finished", sigma2_mc=sigma2_mc, ks_distance=ks, reference=reference)
        return report


def berry_esseen_scaling(
    model,
    mu: DrivingMeasure,
    phi: Observable,
    N_list: Sequence[int],
    trials: int,
    seed: int = 0,
    threads: int = 1,
    block_size: Optional[int] = None,
    sigma2_gk: Optional[float] = None,
    gk_n_max: int = 200,
    K: Optional[int] = None,
) -> BerryEsseenTable:
    """
    KS distance and sqrt(N) x KS per horizon.

    With three or more horizons, a one-sided Kendall tau test (level 0.05)
    decides whether sqrt(N) x KS grows with N.
    """
    N_list = [int(n) for n in N_list]
    if not N_list or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise ConfigurationError("N_list must be non-empty and strictly increasing", key="N_list")
    if N_list[0] < MIN_CLT_STEPS:
        raise ConfigurationError(f"Horizons must be >= {MIN_CLT_STEPS}", key="N_list")
    if trials < MIN_CLT_TRIALS:
        raise ConfigurationError(f"trials must be >= {MIN_CLT_TRIALS}, got {trials}", key="trials")
    _check_observables(model, phi)
    _require_real_zero_mean(phi)
    block_size = block_size or CocycleBudget().block_size

    with logfire.span("stats.berry_esseen", model_id=model.model_id, N_list=N_list, trials=trials):
        reference_var, _ = _reference_variance(model, mu, phi, sigma2_gk, gk_n_max, K)
        reference = "green-kubo" if reference_var is not None and reference_var > 0 else "empirical"

        rows = []
        for i, N in enumerate(N_list):
            sums = _birkhoff_sums(model, mu, phi, N, trials, seed, threads, block_size, stream_offset=(i + 1) << 24)
            variance = reference_var if reference == "green-kubo" else float(np.var(sums, ddof=1))
            ks, _ = _ks(sums, variance)
            rows.append(BerryEsseenRow(N=N, ks_distance=ks, sqrtN_times_ks=float(np.sqrt(N) * ks)))

        table = BerryEsseenTable(
            rows=rows,
            max_sqrtN_times_ks=max(r.sqrtN_times_ks for r in rows),
            sigma2_gk=reference_var if reference == "green-kubo" else None,
            reference=reference,
        )
        if len(rows) >= 3:
            tau, pvalue = kendalltau(N_list, [r.sqrtN_times_ks for r in rows], alternative="greater")
            table.trend_tau = float(tau)
            table.trend_pvalue = float(pvalue)
            table.growth_detected = bool(pvalue < TREND_LEVEL)
        return table
