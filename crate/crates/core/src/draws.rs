//! Variate draws beyond Pólya–Gamma: truncated Beta by CDF inversion,
//! multivariate normal parameterized by a precision matrix, and the
//! elementary distributions used by the sampler and the data generator.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::special::{inverse_regularized_incomplete_beta, regularized_incomplete_beta};
use crate::stream::RandomStream;

/// Draw from Beta(gamma, lambda) restricted and renormalized to `[a, b]`.
///
/// Inverse-CDF construction: u ~ Uniform(I_a, I_b), return the inverse
/// regularized incomplete beta at u. Every draw lies in `[a, b]`.
pub fn draw_truncated_beta(
    gamma: f64,
    lambda: f64,
    a: f64,
    b: f64,
    rng: &mut RandomStream,
) -> Result<f64> {
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::domain(format!(
            "truncation bounds must satisfy 0 <= a < b <= 1, got [{a}, {b}]"
        )));
    }
    let ia = regularized_incomplete_beta(a, gamma, lambda)?;
    let ib = regularized_incomplete_beta(b, gamma, lambda)?;
    let mass = ib - ia;
    if mass < 1e-14 {
        return Err(Error::DegenerateSupport {
            mass,
            lower: a,
            upper: b,
        });
    }
    let u = ia + rng.random::<f64>() * mass;
    let x = inverse_regularized_incomplete_beta(u, gamma, lambda)?;
    Ok(x.clamp(a, b))
}

/// Draw from MVN(P^-1 h, P^-1) given the linear term `h` and precision `P`.
///
/// Uses the Cholesky factor of the precision: the mean solves P mu = h and
/// the noise is L^-T z with z standard normal; the dense inverse is never
/// formed. A failed factorization reports the eigenvalue range of `P`.
pub fn draw_mvn_from_precision(
    linear_term: &DVector<f64>,
    precision: &DMatrix<f64>,
    rng: &mut RandomStream,
) -> Result<DVector<f64>> {
    let (mu, l) = precision_solve(linear_term, precision)?;
    let z = DVector::from_fn(mu.len(), |_, _| StandardNormal.sample(rng));
    let noise = l
        .tr_solve_lower_triangular(&z)
        .expect("triangular solve after successful Cholesky");
    Ok(mu + noise)
}

/// Cholesky-based solve shared by the sampler: returns (P^-1 h, L).
pub(crate) fn precision_solve(
    linear_term: &DVector<f64>,
    precision: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let dim = precision.nrows();
    if precision.ncols() != dim || linear_term.len() != dim {
        return Err(Error::domain(format!(
            "precision must be square and conformable: {}x{} vs length {}",
            dim,
            precision.ncols(),
            linear_term.len()
        )));
    }
    let chol = precision
        .clone()
        .cholesky()
        .ok_or_else(|| not_positive_definite(precision))?;
    let mu = chol.solve(linear_term);
    Ok((mu, chol.unpack()))
}

fn not_positive_definite(precision: &DMatrix<f64>) -> Error {
    let eigen = precision.clone().symmetric_eigen();
    let min_eigen = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_eigen = eigen
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    Error::NotPositiveDefinite {
        dim: precision.nrows(),
        min_eigen,
        max_eigen,
    }
}

/// Binomial(n, p) draw.
pub fn draw_binomial(n: u64, p: f64, rng: &mut RandomStream) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("binomial p = {p} outside [0, 1]")));
    }
    let d = Binomial::new(n, p).map_err(|e| Error::domain(e.to_string()))?;
    Ok(d.sample(rng))
}

/// Multinomial(n, probs) draw by sequential conditional binomials.
///
/// Components always sum to `n` exactly.
pub fn draw_multinomial(n: u64, probs: &[f64], rng: &mut RandomStream) -> Result<Vec<u64>> {
    if probs.is_empty() {
        return Err(Error::domain("multinomial needs at least one category"));
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::domain(format!(
            "multinomial probabilities outside [0, 1]: {probs:?}"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "multinomial probabilities sum to {total}, not 1"
        )));
    }
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass_left = 1.0_f64;
    for (i, &p) in probs.iter().enumerate().take(probs.len() - 1) {
        if remaining == 0 {
            break;
        }
        let cond = if mass_left > 0.0 {
            (p / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let x = draw_binomial(remaining, cond, rng)?;
        counts[i] = x;
        remaining -= x;
        mass_left -= p;
    }
    *counts.last_mut().expect("nonempty") += remaining;
    Ok(counts)
}

/// Inverse-Gamma(shape, scale) draw (mean scale/(shape-1) for shape > 1).
pub fn draw_inverse_gamma(shape: f64, scale: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(shape > 0.0 && scale > 0.0) {
        return Err(Error::domain(format!(
            "inverse-gamma shape and scale must be positive, got ({shape}, {scale})"
        )));
    }
    // 1/X with X ~ Gamma(shape, rate = scale).
    let g = Gamma::new(shape, 1.0 / scale).map_err(|e| Error::domain(e.to_string()))?;
    Ok(1.0 / g.sample(rng))
}

/// Normal(mean, variance) draw.
pub fn draw_normal(mean: f64, variance: f64, rng: &mut RandomStream) -> Result<f64> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::domain(format!("variance must be nonnegative, got {variance}")));
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + variance.sqrt() * z)
}
