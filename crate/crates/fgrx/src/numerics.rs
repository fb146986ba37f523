//! Gaussian and discrete message algebra on complex supports.
//!
//! Everything the receiver passes around is one of three currencies: a scalar
//! circularly-symmetric complex Gaussian, a joint complex Gaussian over a few
//! coupled variables, or a weighted discrete distribution on constellation
//! points. This module owns those types plus the handful of operations the
//! message-passing rules reduce to: precision-weighted products and quotients,
//! moment extraction, and small Hermitian positive-definite solves.
//!
//! Conventions used throughout the crate:
//!
//! * a scalar CN(μ, σ²) has density exp(−|x−μ|²/σ²)/(πσ²) — the variance is
//!   the full complex variance, not per real dimension;
//! * "flat" (uninformative) messages are ordinary Gaussians with variance
//!   [`FLAT_VARIANCE`] so that products and quotients need no special casing;
//! * Hermitian solves always add `1e-10 · trace(A)/d` of diagonal jitter
//!   before factorization, which keeps nearly-degenerate second-moment
//!   matrices (e.g. from hardened symbol beliefs) factorable.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Variance standing in for an uninformative ("flat") Gaussian message.
pub const FLAT_VARIANCE: f64 = 1e12;

/// Floor applied wherever a variance must stay strictly positive.
pub const MIN_VARIANCE: f64 = 1e-12;

/// Relative diagonal jitter added before every Cholesky factorization.
pub const PSD_JITTER: f64 = 1e-10;

// ---------------------------------------------------------------------------
// Scalar Gaussian messages
// ---------------------------------------------------------------------------

/// Circularly-symmetric complex Gaussian message CN(mean, variance).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarGaussian {
    mean: Complex64,
    variance: f64,
}

impl ScalarGaussian {
    /// Panics if the variance is negative or not finite; zero is allowed
    /// (point mass) but most operations require strictly positive variance.
    pub fn new(mean: Complex64, variance: f64) -> Self {
        assert!(
            variance >= 0.0 && variance.is_finite() && mean.re.is_finite() && mean.im.is_finite(),
            "invalid Gaussian parameters: mean {mean}, variance {variance}"
        );
        ScalarGaussian { mean, variance }
    }

    /// Uninformative message: zero mean, [`FLAT_VARIANCE`].
    pub fn flat() -> Self {
        ScalarGaussian {
            mean: Complex64::ZERO,
            variance: FLAT_VARIANCE,
        }
    }

    pub fn mean(&self) -> Complex64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn precision(&self) -> f64 {
        1.0 / self.variance
    }

    /// Unnormalized log-density at `x` (the −|x−μ|²/σ² exponent only).
    pub fn log_density_unnorm(&self, x: Complex64) -> f64 {
        -(x - self.mean).norm_sqr() / self.variance.max(MIN_VARIANCE)
    }
}

/// Product of Gaussian messages: precisions add, means combine
/// precision-weighted. All inputs must have strictly positive variance.
pub fn gaussian_combine(messages: &[ScalarGaussian]) -> ScalarGaussian {
    assert!(!messages.is_empty(), "gaussian_combine of zero messages");
    let mut precision = 0.0;
    let mut info = Complex64::ZERO;
    for m in messages {
        debug_assert!(m.variance > 0.0, "combine requires positive variances");
        precision += 1.0 / m.variance;
        info += m.mean / m.variance;
    }
    ScalarGaussian::new(info / precision, 1.0 / precision)
}

/// Result of a Gaussian quotient: either a proper Gaussian, or a flag that
/// the output precision was non-positive, carrying the numerator so callers
/// can fall back to using the belief itself.
#[derive(Clone, Copy, Debug)]
pub enum GaussianQuotient {
    Proper(ScalarGaussian),
    NegativeVariance(ScalarGaussian),
}

impl GaussianQuotient {
    /// The quotient when proper, else the numerator (the standard fallback).
    pub fn or_numerator(self) -> ScalarGaussian {
        match self {
            GaussianQuotient::Proper(g) | GaussianQuotient::NegativeVariance(g) => g,
        }
    }

    pub fn is_proper(&self) -> bool {
        matches!(self, GaussianQuotient::Proper(_))
    }
}

/// Quotient of Gaussian messages: precisions subtract. A non-positive output
/// precision yields [`GaussianQuotient::NegativeVariance`].
pub fn gaussian_divide(numerator: ScalarGaussian, denominator: ScalarGaussian) -> GaussianQuotient {
    debug_assert!(numerator.variance > 0.0 && denominator.variance > 0.0);
    let precision = 1.0 / numerator.variance - 1.0 / denominator.variance;
    if precision <= 0.0 {
        return GaussianQuotient::NegativeVariance(numerator);
    }
    let info = numerator.mean / numerator.variance - denominator.mean / denominator.variance;
    GaussianQuotient::Proper(ScalarGaussian::new(info / precision, 1.0 / precision))
}

// ---------------------------------------------------------------------------
// Discrete messages on complex supports
// ---------------------------------------------------------------------------

/// Normalized weights on a duplicate-free set of complex points
/// (typically a constellation).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMessage {
    support: Vec<Complex64>,
    weights: Vec<f64>,
}

impl DiscreteMessage {
    /// Normalizes the given nonnegative weights. Panics on structural misuse
    /// (empty/duplicated support, negative weight, zero total mass); use
    /// [`DiscreteMessage::try_new`] when zero mass is a runtime possibility.
    pub fn new(support: Vec<Complex64>, weights: Vec<f64>) -> Self {
        Self::try_new(support, weights).expect("discrete message had zero total mass")
    }

    /// As [`DiscreteMessage::new`], but zero total mass becomes
    /// [`Error::DegenerateBelief`] instead of a panic.
    pub fn try_new(support: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        assert!(!support.is_empty(), "empty discrete support");
        assert_eq!(support.len(), weights.len(), "support/weight length mismatch");
        for (i, a) in support.iter().enumerate() {
            for b in &support[..i] {
                assert!(a != b, "duplicate support point {a}");
            }
        }
        let mut total = 0.0;
        for &w in &weights {
            assert!(w >= 0.0 && w.is_finite(), "invalid weight {w}");
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::DegenerateBelief);
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(DiscreteMessage { support, weights })
    }

    pub fn uniform(support: Vec<Complex64>) -> Self {
        let w = vec![1.0; support.len()];
        DiscreteMessage::new(support, w)
    }

    /// Builds from log-domain weights, shifting by the maximum before
    /// exponentiation; all-(-inf) input is structurally impossible here
    /// because the shifted maximum exponentiates to 1.
    pub fn from_log_weights(support: Vec<Complex64>, log_weights: &[f64]) -> Self {
        let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(max.is_finite(), "no finite log-weight in discrete message");
        let weights = log_weights.iter().map(|&lw| (lw - max).exp()).collect();
        DiscreteMessage::new(support, weights)
    }

    /// Evaluates a Gaussian message on the support points:
    /// weights ∝ exp(−|p−μ|²/σ²), normalized.
    pub fn from_gaussian(g: &ScalarGaussian, support: &[Complex64]) -> Self {
        let logw: Vec<f64> = support.iter().map(|&p| g.log_density_unnorm(p)).collect();
        DiscreteMessage::from_log_weights(support.to_vec(), &logw)
    }

    pub fn support(&self) -> &[Complex64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        false // support is never empty by construction
    }

    pub fn moments(&self) -> GaussianMoments {
        discrete_moments(self)
    }
}

/// First and second moments of a distribution on ℂ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianMoments {
    pub mean: Complex64,
    pub variance: f64,
    pub second_moment: f64,
}

/// Mean, variance, and scalar second moment E|x|² of a discrete message.
///
/// Rounding can push the variance a hair below zero for near-point-masses;
/// anything in [−1e-12, 0) is clamped to exactly 0.
pub fn discrete_moments(msg: &DiscreteMessage) -> GaussianMoments {
    let mut mean = Complex64::ZERO;
    let mut second = 0.0;
    for (&p, &w) in msg.support.iter().zip(&msg.weights) {
        mean += p * w;
        second += p.norm_sqr() * w;
    }
    let mut variance = second - mean.norm_sqr();
    if variance < 0.0 {
        debug_assert!(variance >= -MIN_VARIANCE, "variance {variance} below clamp window");
        variance = 0.0;
    }
    GaussianMoments {
        mean,
        variance,
        second_moment: second,
    }
}

// ---------------------------------------------------------------------------
// Joint Gaussians and Hermitian solves
// ---------------------------------------------------------------------------

/// Joint complex Gaussian over a small vector of coupled variables.
///
/// The covariance is exactly hermitianized on construction; inputs must
/// already be Hermitian to within 1e-12 relative tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGaussian {
    mean: DVector<Complex64>,
    covariance: DMatrix<Complex64>,
}

impl VectorGaussian {
    pub fn new(mean: DVector<Complex64>, covariance: DMatrix<Complex64>) -> Self {
        let d = mean.len();
        assert!(d > 0, "empty vector Gaussian");
        assert_eq!(covariance.nrows(), d);
        assert_eq!(covariance.ncols(), d);
        debug_assert!(hermitian_defect(&covariance) <= 1e-12, "covariance not Hermitian");
        let covariance = hermitianize(covariance);
        VectorGaussian { mean, covariance }
    }

    /// Uninformative joint message: zero mean, [`FLAT_VARIANCE`] · I.
    pub fn flat(dim: usize) -> Self {
        VectorGaussian::new(
            DVector::zeros(dim),
            DMatrix::from_diagonal_element(dim, dim, Complex64::from(FLAT_VARIANCE)),
        )
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<Complex64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<Complex64> {
        &self.covariance
    }

    /// Scalar marginal of component `i`.
    pub fn marginal(&self, i: usize) -> ScalarGaussian {
        ScalarGaussian::new(self.mean[i], self.covariance[(i, i)].re.max(0.0))
    }
}

/// E[x xᴴ] = Σ + μ μᴴ of a joint Gaussian.
pub fn second_moment_matrix(g: &VectorGaussian) -> DMatrix<Complex64> {
    let outer = g.mean() * g.mean().adjoint();
    hermitianize(g.covariance() + outer)
}

/// Max absolute deviation from Hermitian symmetry, relative to the largest entry.
fn hermitian_defect(a: &DMatrix<Complex64>) -> f64 {
    let scale = a.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let mut defect: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..=i {
            defect = defect.max((a[(i, j)] - a[(j, i)].conj()).norm() / scale);
        }
    }
    defect
}

/// (A + Aᴴ)/2 with an exactly real diagonal.
pub fn hermitianize(mut a: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in 0..i {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    a
}

/// Solves A X = B for Hermitian positive semidefinite A via Cholesky, after
/// adding `PSD_JITTER · trace(A)/d` of diagonal jitter. Fails with
/// [`Error::SingularMatrix`] if the jittered matrix still is not positive
/// definite.
pub fn hermitian_solve(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let d = a.nrows();
    assert!(d > 0 && a.is_square(), "hermitian_solve needs a square matrix");
    assert_eq!(b.nrows(), d, "right-hand side height mismatch");
    let trace: f64 = (0..d).map(|i| a[(i, i)].re).sum();
    let eps = PSD_JITTER * trace.max(0.0) / d as f64;
    let mut jittered = a.clone();
    for i in 0..d {
        jittered[(i, i)] += Complex64::from(eps);
    }
    let chol = jittered.cholesky().ok_or(Error::SingularMatrix {
        context: "hermitian_solve: matrix not positive definite after jitter",
    })?;
    // One step of iterative refinement against the unjittered matrix removes
    // the O(ε·cond) bias the jitter introduces.
    let x = chol.solve(b);
    let residual = b - a * &x;
    Ok(x + chol.solve(&residual))
}

/// Convenience wrapper for a single right-hand-side vector.
pub fn hermitian_solve_vec(
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
) -> Result<DVector<Complex64>> {
    let cols = hermitian_solve(a, &DMatrix::from_columns(&[b.clone()]))?;
    Ok(cols.column(0).into_owned())
}

/// A⁻¹ via [`hermitian_solve`] against the identity.
pub fn hermitian_inverse(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let d = a.nrows();
    hermitian_solve(a, &DMatrix::identity(d, d)).map(hermitianize)
}

// ---------------------------------------------------------------------------
// Belief moments (mean + full second-moment matrix)
// ---------------------------------------------------------------------------

/// Mean vector μ and second-moment matrix R = E[x xᴴ] of a joint belief.
///
/// This is the currency the channel estimator consumes: it carries the
/// cross-correlations between streams whether the belief came from a joint
/// Gaussian, a joint discrete distribution, or independent per-stream
/// marginals (in which case R has product off-diagonals).
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefMoments {
    mean: DVector<Complex64>,
    second_moment: DMatrix<Complex64>,
}

impl BeliefMoments {
    pub fn new(mean: DVector<Complex64>, second_moment: DMatrix<Complex64>) -> Self {
        let d = mean.len();
        assert!(d > 0);
        assert_eq!(second_moment.nrows(), d);
        assert_eq!(second_moment.ncols(), d);
        debug_assert!(hermitian_defect(&second_moment) <= 1e-12);
        BeliefMoments {
            mean,
            second_moment: hermitianize(second_moment),
        }
    }

    pub fn from_gaussian(g: &VectorGaussian) -> Self {
        BeliefMoments::new(g.mean().clone(), second_moment_matrix(g))
    }

    /// Point mass: R = s sᴴ exactly.
    pub fn from_point(s: DVector<Complex64>) -> Self {
        let r = &s * s.adjoint();
        BeliefMoments::new(s, r)
    }

    /// Independent per-stream marginals: product off-diagonals, supplied
    /// scalar second moments on the diagonal.
    pub fn from_independent(means: &[Complex64], second_moments: &[f64]) -> Self {
        assert_eq!(means.len(), second_moments.len());
        let d = means.len();
        let mean = DVector::from_column_slice(means);
        let mut r = &mean * mean.adjoint();
        for i in 0..d {
            debug_assert!(second_moments[i] + 1e-9 >= means[i].norm_sqr());
            r[(i, i)] = Complex64::from(second_moments[i].max(means[i].norm_sqr()));
        }
        BeliefMoments::new(mean, r)
    }

    /// Zero mean, unit per-stream energy, zero cross-correlation.
    pub fn uninformative(dim: usize) -> Self {
        BeliefMoments::new(DVector::zeros(dim), DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<Complex64> {
        &self.mean
    }

    /// R = E[x xᴴ]; entry (i, j) is E[x_i x_j*].
    pub fn second_moment(&self) -> &DMatrix<Complex64> {
        &self.second_moment
    }

    /// E|x_i|² (real diagonal of R).
    pub fn energy(&self, i: usize) -> f64 {
        self.second_moment[(i, i)].re
    }
}

// ---------------------------------------------------------------------------
