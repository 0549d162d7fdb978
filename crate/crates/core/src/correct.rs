//! Misclassification-rate draws and the ordered count correction.
//!
//! Each sweep, rates are drawn from their elicited priors only (never
//! conditioned on outcome data) and pushed through the fixed correction
//! order: remove erroneously-eligible participants from the denominator,
//! then reclassify a share of the remaining eligible unvaccinated as
//! vaccinated, then recompute the Pólya–Gamma pseudo-observation kappa.

use crate::elicit::ElicitedPrior;
use crate::error::{Error, Result};
use crate::stream::RandomStream;

/// The three misclassification rates for one site (or one arm).
///
/// `rho1`: study-period outcome misclassification among the eligible;
/// `rho2`: eligibility misclassification among observed unvaccinated;
/// `rho3`: eligibility misclassification among observed vaccinated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisclassRates {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
}

impl MisclassRates {
    pub const ZERO: MisclassRates = MisclassRates {
        rho1: 0.0,
        rho2: 0.0,
        rho3: 0.0,
    };

    pub fn new(rho1: f64, rho2: f64, rho3: f64) -> Result<Self> {
        for (name, v) in [("rho1", rho1), ("rho2", rho2), ("rho3", rho3)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(MisclassRates { rho1, rho2, rho3 })
    }
}

/// Corrected counts for one site at one sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedCounts {
    /// Corrected eligible denominator N*.
    pub n_star: u64,
    /// Eligible observed-vaccinated count E.
    pub eligible_vaccinated: u64,
    /// Corrected vaccinated numerator Y*.
    pub y_star: u64,
    /// Pseudo-observation kappa = Y* - N*/2 (half-integer).
    pub kappa: f64,
    pub delta1: u64,
    pub delta2: u64,
    pub delta3: u64,
}

/// A prior for one misclassification rate: degenerate or elicited.
#[derive(Debug, Clone, PartialEq)]
pub enum RatePrior {
    /// Point mass; drawing consumes no randomness.
    Fixed(f64),
    Elicited(ElicitedPrior),
}

impl RatePrior {
    pub fn fixed(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::domain(format!("fixed rate {value} outside [0, 1]")));
        }
        Ok(RatePrior::Fixed(value))
    }

    /// Prior mode (chain initialization value).
    pub fn mode(&self) -> f64 {
        match self {
            RatePrior::Fixed(v) => *v,
            RatePrior::Elicited(p) => p.mode(),
        }
    }

    pub fn draw(&self, rng: &mut RandomStream) -> Result<f64> {
        match self {
            RatePrior::Fixed(v) => Ok(*v),
            RatePrior::Elicited(p) => p.draw(rng),
        }
    }
}

/// Priors for the rate triple of one site or arm.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePriorTriple {
    pub rho1: RatePrior,
    pub rho2: RatePrior,
    pub rho3: RatePrior,
}

impl RatePriorTriple {
    /// Degenerate triple: the correction is the identity.
    pub fn zero() -> Self {
        RatePriorTriple {
            rho1: RatePrior::Fixed(0.0),
            rho2: RatePrior::Fixed(0.0),
            rho3: RatePrior::Fixed(0.0),
        }
    }

    pub fn modes(&self) -> MisclassRates {
        MisclassRates {
            rho1: self.rho1.mode(),
            rho2: self.rho2.mode(),
            rho3: self.rho3.mode(),
        }
    }
}

/// Independent prior draws for the three rates, in fixed order.
pub fn draw_misclass_rates(
    priors: &RatePriorTriple,
    rng: &mut RandomStream,
) -> Result<MisclassRates> {
    Ok(MisclassRates {
        rho1: priors.rho1.draw(rng)?,
        rho2: priors.rho2.draw(rng)?,
        rho3: priors.rho3.draw(rng)?,
    })
}

/// `ceil(rate * count)` of the f64 product.
fn ceil_rate_count(rate: f64, count: u64) -> u64 {
    (rate * count as f64).ceil() as u64
}

/// Apply the ordered correction to one site's observed counts.
///
/// Exactly, in order:
/// `N* = N - ceil(rho2 (N - Y)) - ceil(rho3 Y)`;
/// `E  = Y - ceil(rho3 Y)`;
/// `Y* = E + ceil(rho1 (N* - E))`;
/// `kappa = Y* - N*/2`.
///
/// A nonpositive corrected denominator is an error, never a clamp: clamping
/// would silently bias kappa. The sampler enriches the error with the site
/// id and aborts the sweep.
pub fn apply_correction(n: u64, y: u64, rates: &MisclassRates) -> Result<CorrectedCounts> {
    if y > n {
        return Err(Error::domain(format!("observed Y = {y} exceeds N = {n}")));
    }
    for (name, v) in [("rho1", rates.rho1), ("rho2", rates.rho2), ("rho3", rates.rho3)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let delta2 = ceil_rate_count(rates.rho2, n - y);
    let delta3 = ceil_rate_count(rates.rho3, y);
    let removed = delta2 + delta3;
    if removed >= n {
        return Err(Error::SiteDegenerate {
            site_id: String::new(),
            n_obs: n,
            delta2,
            delta3,
        });
    }
    let n_star = n - removed;
    let eligible = y - delta3;
    let delta1 = ceil_rate_count(rates.rho1, n_star - eligible);
    let y_star = eligible + delta1;
    debug_assert!(y_star <= n_star);
    let kappa = y_star as f64 - n_star as f64 / 2.0;
    Ok(CorrectedCounts {
        n_star,
        eligible_vaccinated: eligible,
        y_star,
        kappa,
        delta1,
        delta2,
        delta3,
    })
}
