//! The Gibbs sampler with the misclassification-correction step interleaved.
//!
//! One sweep, in order: (1) draw misclassification rates from their priors
//! and recompute the corrected counts and kappa per site; (2) draw the
//! Pólya–Gamma auxiliaries given the corrected denominators and the current
//! linear predictor; (3) draw the coefficient stack from its conditionally
//! Gaussian posterior parameterized by precision; (4) draw the
//! random-effect variances from their inverse-Gamma full conditionals and
//! refresh the prior precision blocks.
//!
//! Rates are drawn from their priors only — a cut update that propagates
//! prior uncertainty without likelihood feedback — so the correction may
//! run first in the sweep, letting omega condition on the current N*.

use nalgebra::{DMatrix, DVector};

use crate::correct::{
    apply_correction, draw_misclass_rates, CorrectedCounts, MisclassRates, RatePriorTriple,
};
use crate::design::{Arm, DesignSet};
use crate::draws::{draw_inverse_gamma, draw_mvn_from_precision};
use crate::error::{Error, Result};
use crate::pg::{draw_polya_gamma, PolyaGammaParams};
use crate::stream::RandomStream;

/// Hyperparameters of the coefficient and variance priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    /// Prior variance of each fixed-effect coefficient.
    pub fixed_effect_variance: f64,
    /// Shape of the Gamma prior on each random-effect precision.
    pub variance_shape: f64,
    /// Rate of the Gamma prior on each random-effect precision.
    pub variance_rate: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            fixed_effect_variance: 1.0,
            variance_shape: 0.01,
            variance_rate: 0.01,
        }
    }
}

/// Granularity of the per-sweep rate draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateSharing {
    /// One rate triple drawn per arm and shared by its sites.
    Arm,
    /// Independent draws per site.
    Site,
}

/// Whether rates are redrawn every sweep or fixed at one draw per chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateRedraw {
    EverySweep,
    OncePerChain,
}

/// Rate priors supplied per arm or per site.
#[derive(Debug, Clone)]
pub enum RatePriors {
    PerArm {
        control: RatePriorTriple,
        intervention: RatePriorTriple,
    },
    /// Keyed by site id.
    PerSite(std::collections::BTreeMap<String, RatePriorTriple>),
}

impl RatePriors {
    /// Degenerate priors: the correction is the identity everywhere.
    pub fn zero() -> Self {
        RatePriors::PerArm {
            control: RatePriorTriple::zero(),
            intervention: RatePriorTriple::zero(),
        }
    }
}

/// Chain run settings.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub rate_sharing: RateSharing,
    pub rate_redraw: RateRedraw,
    /// Skip the correction step entirely and model the observed counts.
    pub bypass_correction: bool,
}

impl ChainConfig {
    pub fn new(iterations: usize, burn_in: usize, seed: u64) -> Self {
        ChainConfig {
            iterations,
            burn_in,
            seed,
            stream_id: 0,
            rate_sharing: RateSharing::Site,
            rate_redraw: RateRedraw::EverySweep,
            bypass_correction: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.iterations <= self.burn_in {
            return Err(Error::input(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            )));
        }
        Ok(())
    }
}

/// Mutable sampler state: coefficient stack, auxiliaries, variances, and
/// the current rates and corrected counts per design row.
#[derive(Debug, Clone)]
pub struct GibbsState {
    /// Fixed effects first, then each random-effect block.
    pub beta: DVector<f64>,
    pub omega: DVector<f64>,
    pub sigma2: Vec<f64>,
    pub rates: Vec<MisclassRates>,
    pub corrected: Vec<CorrectedCounts>,
}

/// One retained posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraw {
    pub beta: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub rates: Vec<MisclassRates>,
    pub corrected: Vec<CorrectedCounts>,
}

/// Retained post-burn-in draws plus the replay information.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: Vec<ChainDraw>,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub stream_id: u64,
    /// Number of sweeps that needed a diagonal jitter before factorizing.
    pub jitter_events: usize,
}

impl ChainOutput {
    /// Draws of one coefficient.
    pub fn coefficient_draws(&self, index: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.beta[index]).collect()
    }

    /// Per-draw corrected vaccination rate aggregated within each arm.
    pub fn arm_rate_draws(&self, design: &DesignSet) -> [Vec<f64>; 2] {
        let mut out = [Vec::with_capacity(self.draws.len()), Vec::with_capacity(self.draws.len())];
        for draw in &self.draws {
            let mut y = [0u64; 2];
            let mut n = [0u64; 2];
            for (site, c) in design.sites.iter().zip(&draw.corrected) {
                let t = site.arm.index();
                y[t] += c.y_star;
                n[t] += c.n_star;
            }
            for t in 0..2 {
                out[t].push(y[t] as f64 / n[t] as f64);
            }
        }
        out
    }
}

/// Diagonal jitter added to the posterior precision when factorization
/// fails; logged and counted, never silent.
const PRECISION_JITTER: f64 = 1e-10;

/// A configured sampler bound to one design.
pub struct GibbsSampler<'a> {
    design: &'a DesignSet,
    priors: PriorConfig,
    /// Rate prior per design row.
    site_priors: Vec<RatePriorTriple>,
    /// Arm-level priors when sharing at arm granularity.
    arm_priors: Option<[RatePriorTriple; 2]>,
    bypass: bool,
    z_t: DMatrix<f64>,
}

impl<'a> GibbsSampler<'a> {
    pub fn new(
        design: &'a DesignSet,
        rate_priors: &RatePriors,
        priors: PriorConfig,
        sharing: RateSharing,
        bypass_correction: bool,
    ) -> Result<Self> {
        let site_priors: Vec<RatePriorTriple> = match rate_priors {
            RatePriors::PerArm {
                control,
                intervention,
            } => design
                .sites
                .iter()
                .map(|s| match s.arm {
                    Arm::Control => control.clone(),
                    Arm::Intervention => intervention.clone(),
                })
                .collect(),
            RatePriors::PerSite(map) => design
                .sites
                .iter()
                .map(|s| {
                    map.get(&s.site_id).cloned().ok_or_else(|| {
                        Error::input(format!("no rate prior for site {}", s.site_id))
                    })
                })
                .collect::<Result<_>>()?,
        };
        let arm_priors = if sharing == RateSharing::Arm {
            let mut per_arm: [Option<RatePriorTriple>; 2] = [None, None];
            for (site, triple) in design.sites.iter().zip(&site_priors) {
                match &per_arm[site.arm.index()] {
                    None => per_arm[site.arm.index()] = Some(triple.clone()),
                    Some(existing) if existing == triple => {}
                    Some(_) => {
                        return Err(Error::input(format!(
                            "arm-shared rate draws need identical priors within an arm; \
                             site {} differs",
                            site.site_id
                        )))
                    }
                }
            }
            // An absent arm keeps a degenerate placeholder.
            Some([
                per_arm[0].take().unwrap_or_else(RatePriorTriple::zero),
                per_arm[1].take().unwrap_or_else(RatePriorTriple::zero),
            ])
        } else {
            None
        };
        Ok(GibbsSampler {
            design,
            priors,
            site_priors,
            arm_priors,
            bypass: bypass_correction,
            z_t: design.z.transpose(),
        })
    }

    /// Initial state: beta = 0, sigma2 = 1, rates at their prior modes,
    /// corrections evaluated at those modes.
    pub fn initial_state(&self) -> Result<GibbsState> {
        let s = self.design.sites.len();
        let w = self.design.total_dim();
        let r = self.design.a_blocks.len();
        let rates: Vec<MisclassRates> = if self.bypass {
            vec![MisclassRates::ZERO; s]
        } else {
            self.site_priors.iter().map(|t| t.modes()).collect()
        };
        let corrected = self.correct_sites(&rates)?;
        Ok(GibbsState {
            beta: DVector::zeros(w),
            omega: DVector::zeros(s),
            sigma2: vec![1.0; r],
            rates,
            corrected,
        })
    }

    fn correct_sites(&self, rates: &[MisclassRates]) -> Result<Vec<CorrectedCounts>> {
        self.design
            .sites
            .iter()
            .zip(rates)
            .map(|(site, r)| {
                apply_correction(site.n_obs, site.y_obs, r).map_err(|e| match e {
                    Error::SiteDegenerate {
                        n_obs,
                        delta2,
                        delta3,
                        ..
                    } => Error::SiteDegenerate {
                        site_id: site.site_id.clone(),
                        n_obs,
                        delta2,
                        delta3,
                    },
                    other => other,
                })
            })
            .collect()
    }

    /// Draw one rate triple per site at the configured granularity.
    fn draw_rates(&self, rng: &mut RandomStream) -> Result<Vec<MisclassRates>> {
        match &self.arm_priors {
            Some(arm_triples) => {
                let control = draw_misclass_rates(&arm_triples[0], rng)?;
                let intervention = draw_misclass_rates(&arm_triples[1], rng)?;
                Ok(self
                    .design
                    .sites
                    .iter()
                    .map(|s| match s.arm {
                        Arm::Control => control,
                        Arm::Intervention => intervention,
                    })
                    .collect())
            }
            None => self
                .site_priors
                .iter()
                .map(|t| draw_misclass_rates(t, rng))
                .collect(),
        }
    }

    /// Posterior precision and linear term of the coefficient update:
    /// `precision = Z' Omega Z + Lambda0^-1`, `linear = Z' kappa`
    /// (the prior mean is zero, so the prior term drops).
    pub fn beta_posterior_terms(&self, state: &GibbsState) -> (DVector<f64>, DMatrix<f64>) {
        let s = self.design.sites.len();
        let w = self.design.total_dim();
        let mut z_omega = self.design.z.clone();
        for row in 0..s {
            let scale = state.omega[row];
            z_omega.row_mut(row).scale_mut(scale);
        }
        let mut precision = &self.z_t * &z_omega;
        let prior_diag = self.prior_precision_diag(&state.sigma2);
        for i in 0..w {
            precision[(i, i)] += prior_diag[i];
        }
        let kappa = DVector::from_iterator(s, state.corrected.iter().map(|c| c.kappa));
        let linear = &self.z_t * kappa;
        (linear, precision)
    }

    /// Diagonal of the block prior precision: fixed block, then 1/sigma2_r
    /// per random-effect block.
    fn prior_precision_diag(&self, sigma2: &[f64]) -> DVector<f64> {
        let p = self.design.fixed_dim();
        let w = self.design.total_dim();
        let mut diag = DVector::zeros(w);
        for i in 0..p {
            diag[i] = 1.0 / self.priors.fixed_effect_variance;
        }
        let mut offset = p;
        for (r, block) in self.design.a_blocks.iter().enumerate() {
            for i in 0..block.ncols() {
                diag[offset + i] = 1.0 / sigma2[r];
            }
            offset += block.ncols();
        }
        diag
    }

    /// One full sweep.
    pub fn step(
        &self,
        state: &mut GibbsState,
        redraw_rates: bool,
        rng: &mut RandomStream,
        jitter_events: &mut usize,
    ) -> Result<()> {
        // (1) rates and corrections.
        if !self.bypass && redraw_rates {
            state.rates = self.draw_rates(rng)?;
            state.corrected = self.correct_sites(&state.rates)?;
        }

        // (2) Pólya-Gamma auxiliaries given corrected denominators.
        for (row, c) in state.corrected.iter().enumerate() {
            let tilt = self.design.z.row(row).transpose().dot(&state.beta);
            state.omega[row] =
                draw_polya_gamma(PolyaGammaParams { b: c.n_star, c: tilt }, rng)?;
        }

        // (3) coefficient stack from its Gaussian full conditional.
        let (linear, mut precision) = self.beta_posterior_terms(state);
        state.beta = match draw_mvn_from_precision(&linear, &precision, rng) {
            Ok(b) => b,
            Err(Error::NotPositiveDefinite { .. }) => {
                *jitter_events += 1;
                log::warn!(
                    "posterior precision factorization failed; retrying with {PRECISION_JITTER} jitter"
                );
                for i in 0..precision.nrows() {
                    precision[(i, i)] += PRECISION_JITTER;
                }
                draw_mvn_from_precision(&linear, &precision, rng)?
            }
            Err(e) => return Err(e),
        };

        // (4) random-effect variances.
        let p = self.design.fixed_dim();
        let mut offset = p;
        for (r, block) in self.design.a_blocks.iter().enumerate() {
            let q = block.ncols();
            let theta = state.beta.rows(offset, q);
            let ssq = theta.dot(&theta);
            state.sigma2[r] = draw_variance_given_block(ssq, q, &self.priors, rng)?;
            offset += q;
        }
        Ok(())
    }
}

/// Inverse-Gamma full-conditional draw for one random-effect variance.
pub(crate) fn draw_variance_given_block(
    theta_ssq: f64,
    block_dim: usize,
    priors: &PriorConfig,
    rng: &mut RandomStream,
) -> Result<f64> {
    draw_inverse_gamma(
        priors.variance_shape + block_dim as f64 / 2.0,
        priors.variance_rate + theta_ssq / 2.0,
        rng,
    )
}

/// Run a full chain and retain the post-burn-in draws.
pub fn run_chain(
    design: &DesignSet,
    rate_priors: &RatePriors,
    priors: &PriorConfig,
    config: &ChainConfig,
) -> Result<ChainOutput> {
    config.validate()?;
    let sampler = GibbsSampler::new(
        design,
        rate_priors,
        *priors,
        config.rate_sharing,
        config.bypass_correction,
    )?;
    let mut rng = RandomStream::with_stream(config.seed, config.stream_id);
    let mut state = sampler.initial_state()?;
    let mut draws = Vec::with_capacity(config.iterations - config.burn_in);
    let mut jitter_events = 0usize;
    for sweep in 0..config.iterations {
        let redraw = match config.rate_redraw {
            RateRedraw::EverySweep => true,
            RateRedraw::OncePerChain => sweep == 0,
        };
        sampler.step(&mut state, redraw, &mut rng, &mut jitter_events)?;
        if sweep >= config.burn_in {
            draws.push(ChainDraw {
                beta: state.beta.iter().copied().collect(),
                sigma2: state.sigma2.clone(),
                rates: state.rates.clone(),
                corrected: state.corrected.clone(),
            });
        }
    }
    Ok(ChainOutput {
        draws,
        iterations: config.iterations,
        burn_in: config.burn_in,
        seed: config.seed,
        stream_id: config.stream_id,
        jitter_events,
    })
}
