//! Truncated-Beta prior elicitation from expert inputs.
//!
//! An expert supplies a most-likely value (mode), hard lower/upper bounds,
//! and two percentile anchors for a misclassification rate. Fixing the mode
//! ties the Beta scale parameter to the shape, reducing the fit to a
//! one-dimensional search in `gamma`: the fitted prior is the truncated
//! Beta whose between-anchor mass matches the requested percentile spread.

use crate::draws::draw_truncated_beta;
use crate::error::{Error, Result};
use crate::special::regularized_incomplete_beta;
use crate::stream::RandomStream;

/// Expert inputs for one misclassification-rate prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ElicitationSpec {
    /// Most likely rate, in (0, 1).
    pub mode: f64,
    /// Hard lower bound of the rate's support.
    pub lower: f64,
    /// Hard upper bound of the rate's support.
    pub upper: f64,
    /// Lower anchor: cumulative probability `p_low` is attained at `kappa_low`.
    pub p_low: f64,
    pub kappa_low: f64,
    /// Upper anchor: cumulative probability `p_high` is attained at `kappa_high`.
    pub p_high: f64,
    pub kappa_high: f64,
}

impl ElicitationSpec {
    /// Validate an elicitation request, clamping out-of-bound anchors.
    ///
    /// Anchors that collide with the hard bounds (which happens when modes
    /// are constructed as `rho_hat +/- 0.01` near a bound) are clamped into
    /// `[lower, upper]` with a warning rather than rejected.
    pub fn new(
        mode: f64,
        lower: f64,
        upper: f64,
        anchor_low: (f64, f64),
        anchor_high: (f64, f64),
    ) -> Result<Self> {
        let (p_low, kappa_low) = anchor_low;
        let (p_high, kappa_high) = anchor_high;
        for (name, v) in [
            ("mode", mode),
            ("lower", lower),
            ("upper", upper),
            ("p_low", p_low),
            ("kappa_low", kappa_low),
            ("p_high", p_high),
            ("kappa_high", kappa_high),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(mode > 0.0 && mode < 1.0) {
            return Err(Error::domain(format!("mode = {mode} must lie strictly in (0, 1)")));
        }
        if lower >= upper {
            return Err(Error::domain(format!(
                "bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        if !(lower <= mode && mode <= upper) {
            return Err(Error::domain(format!(
                "mode {mode} outside bounds [{lower}, {upper}]"
            )));
        }
        if p_low >= p_high {
            return Err(Error::domain(format!(
                "anchor probabilities must satisfy p_low < p_high, got {p_low} >= {p_high}"
            )));
        }
        if kappa_low >= kappa_high {
            return Err(Error::domain(format!(
                "anchor values must satisfy kappa_low < kappa_high, got {kappa_low} >= {kappa_high}"
            )));
        }
        let clamped_low = kappa_low.clamp(lower, upper);
        let clamped_high = kappa_high.clamp(lower, upper);
        if clamped_low != kappa_low || clamped_high != kappa_high {
            log::warn!(
                "elicitation anchors ({kappa_low}, {kappa_high}) clamped into \
                 [{lower}, {upper}]"
            );
        }
        if clamped_low >= clamped_high {
            return Err(Error::domain(format!(
                "anchors collapse after clamping into [{lower}, {upper}]"
            )));
        }
        Ok(ElicitationSpec {
            mode,
            lower,
            upper,
            p_low,
            kappa_low: clamped_low,
            p_high,
            kappa_high: clamped_high,
        })
    }
}

/// A fitted truncated-Beta prior for a misclassification rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ElicitedPrior {
    pub gamma: f64,
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    /// Between-anchor mass defect at convergence (0 for an exact fit).
    pub residual: f64,
}

impl ElicitedPrior {
    /// Density argmax over the truncation interval.
    pub fn mode(&self) -> f64 {
        debug_assert!(self.gamma > 1.0 && self.lambda > 1.0);
        let interior = (self.gamma - 1.0) / (self.gamma + self.lambda - 2.0);
        interior.clamp(self.lower, self.upper)
    }

    /// CDF of the truncated distribution (0 below `lower`, 1 above `upper`).
    pub fn truncated_cdf(&self, x: f64) -> Result<f64> {
        truncated_beta_cdf(x, self.gamma, self.lambda, self.lower, self.upper)
    }

    /// Unnormalized log density of the underlying Beta at `x` in `(0, 1)`.
    pub fn log_density_unnorm(&self, x: f64) -> f64 {
        (self.gamma - 1.0) * x.ln() + (self.lambda - 1.0) * (1.0 - x).ln()
    }

    /// Draw a rate from this prior.
    pub fn draw(&self, rng: &mut RandomStream) -> Result<f64> {
        draw_truncated_beta(self.gamma, self.lambda, self.lower, self.upper, rng)
    }
}

/// CDF of Beta(gamma, lambda) truncated to `[a, b]`.
pub fn truncated_beta_cdf(x: f64, gamma: f64, lambda: f64, a: f64, b: f64) -> Result<f64> {
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
    let ix = regularized_incomplete_beta(x.clamp(a, b), gamma, lambda)?;
    Ok(((ix - ia) / mass).clamp(0.0, 1.0))
}

/// Beta scale parameter pinned by the mode identity `M = (g-1)/(g+l-2)`.
pub fn lambda_from_gamma_mode(gamma: f64, mode: f64) -> Result<f64> {
    if !(mode > 0.0 && mode < 1.0) {
        return Err(Error::domain(format!("mode = {mode} must lie strictly in (0, 1)")));
    }
    if gamma <= 1.0 {
        return Err(Error::domain(format!(
            "gamma = {gamma} must exceed 1 for an interior mode"
        )));
    }
    Ok((gamma * (1.0 - mode) + (2.0 * mode - 1.0)) / mode)
}

/// Lower end of the gamma search bracket (exclusive of the uniform limit).
const GAMMA_MIN: f64 = 1.0 + 1e-6;
/// Upper end of the gamma search bracket.
const GAMMA_MAX: f64 = 500.0;
/// Convergence tolerance in gamma.
const GAMMA_TOL: f64 = 1e-8;
/// Residuals above this are treated as infeasible rather than best-effort.
const FEASIBLE_RESIDUAL: f64 = 0.05;

/// Fit a truncated-Beta prior to an elicitation spec.
///
/// One-parameter search over `gamma`, with `lambda` tied by
/// [`lambda_from_gamma_mode`], driving the between-anchor mass defect
/// `g(gamma) = [F(kappa_high) - F(kappa_low)] - (p_high - p_low)` to zero:
/// golden-section on `g^2`, then bisection on `g` when the final bracket
/// straddles a sign change. Specs whose best residual exceeds 0.05 are
/// rejected; searches that collapse onto the near-uniform `gamma -> 1`
/// boundary are surfaced as [`Error::GammaAtBoundary`].
pub fn elicit_prior(spec: &ElicitationSpec) -> Result<ElicitedPrior> {
    let target = spec.p_high - spec.p_low;
    let defect = |gamma: f64| -> Result<f64> {
        let lambda = lambda_from_gamma_mode(gamma, spec.mode)?;
        let f_high = truncated_beta_cdf(spec.kappa_high, gamma, lambda, spec.lower, spec.upper)?;
        let f_low = truncated_beta_cdf(spec.kappa_low, gamma, lambda, spec.lower, spec.upper)?;
        Ok((f_high - f_low) - target)
    };

    // Coarse log-spaced scan brackets the minimizer of the squared defect.
    // g saturates at +/-(p_high - p_low) for extreme gamma, and golden
    // section alone drifts on those plateaus.
    let npoints = 129;
    let ln_lo = (GAMMA_MIN - 1.0).ln();
    let ln_hi = (GAMMA_MAX - 1.0).ln();
    let grid_gamma =
        |i: usize| 1.0 + (ln_lo + (ln_hi - ln_lo) * i as f64 / (npoints - 1) as f64).exp();
    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    for i in 0..npoints {
        let f = defect(grid_gamma(i))?.powi(2);
        if f < best_f {
            best_f = f;
            best_i = i;
        }
    }
    let (mut lo, mut hi) = (
        grid_gamma(best_i.saturating_sub(1)),
        grid_gamma((best_i + 1).min(npoints - 1)),
    );

    // Golden-section on the squared defect within the bracket.
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = defect(c)?.powi(2);
    let mut fd = defect(d)?.powi(2);
    while hi - lo > GAMMA_TOL {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = defect(c)?.powi(2);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = defect(d)?.powi(2);
        }
    }
    let mut gamma = 0.5 * (lo + hi);
    let mut residual = defect(gamma)?;

    // Bisection refinement when a sign change brackets the minimizer.
    let mut blo = (gamma - 1e-3).max(GAMMA_MIN);
    let mut bhi = (gamma + 1e-3).min(GAMMA_MAX);
    let mut glo = defect(blo)?;
    let ghi = defect(bhi)?;
    if glo * ghi < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (blo + bhi);
            let gm = defect(mid)?;
            if gm == 0.0 || bhi - blo < GAMMA_TOL {
                blo = mid;
                bhi = mid;
                break;
            }
            if gm * glo < 0.0 {
                bhi = mid;
            } else {
                blo = mid;
                glo = gm;
            }
        }
        gamma = 0.5 * (blo + bhi);
        residual = defect(gamma)?;
    }

    let lambda = lambda_from_gamma_mode(gamma, spec.mode)?;
    if gamma <= GAMMA_MIN + 1e-4 {
        return Err(Error::GammaAtBoundary {
            gamma,
            lambda,
            residual,
        });
    }
    if residual.abs() > FEASIBLE_RESIDUAL {
        return Err(Error::ElicitationInfeasible { gamma, residual });
    }
    Ok(ElicitedPrior {
        gamma,
        lambda,
        lower: spec.lower,
        upper: spec.upper,
        residual,
    })
}

/// Push-forward pmf of `delta = ceil(rate * count)` under a fitted prior.
///
/// Computed exactly from truncated-CDF differences:
/// `P(delta = d) = F(d/count) - F((d-1)/count)`. The result has length
/// `count + 1` and sums to 1 up to CDF round-off.
pub fn induced_delta_pmf(prior: &ElicitedPrior, count: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(vec![1.0]);
    }
    let n = count as f64;
    let mut pmf = Vec::with_capacity(count as usize + 1);
    let mut prev = 0.0;
    for d in 0..=count {
        let cdf = prior.truncated_cdf(d as f64 / n)?;
        pmf.push((cdf - prev).max(0.0));
        prev = cdf;
    }
    Ok(pmf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn figure_spec_a() -> ElicitationSpec {
        ElicitationSpec::new(0.05, 0.02, 0.20, (0.05, 0.03), (0.95, 0.15)).unwrap()
    }

    fn figure_spec_b() -> ElicitationSpec {
        ElicitationSpec::new(0.09, 0.02, 0.20, (0.10, 0.03), (0.90, 0.15)).unwrap()
    }

    fn figure_spec_c() -> ElicitationSpec {
        ElicitationSpec::new(0.14, 0.02, 0.20, (0.11, 0.06), (0.95, 0.18)).unwrap()
    }

    /// Independent oracle: fine-grid scan over gamma for the best |defect|.
    fn grid_scan_best_gamma(spec: &ElicitationSpec, points: usize) -> (f64, f64) {
        let target = spec.p_high - spec.p_low;
        let mut best = (f64::NAN, f64::INFINITY);
        for i in 0..points {
            let gamma = 1.0 + 1e-6 + (500.0 - 1.0 - 1e-6) * i as f64 / (points - 1) as f64;
            let lambda = lambda_from_gamma_mode(gamma, spec.mode).unwrap();
            let fh =
                truncated_beta_cdf(spec.kappa_high, gamma, lambda, spec.lower, spec.upper).unwrap();
            let fl =
                truncated_beta_cdf(spec.kappa_low, gamma, lambda, spec.lower, spec.upper).unwrap();
            let g = (fh - fl) - target;
            if g.abs() < best.1 {
                best = (gamma, g.abs());
            }
        }
        best
    }

    /// Density argmax over a 1e4-point grid on the truncation interval.
    fn grid_argmax(prior: &ElicitedPrior) -> f64 {
        let mut best_x = prior.lower;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=10_000 {
            let x = prior.lower + (prior.upper - prior.lower) * i as f64 / 10_000.0;
            let v = prior.log_density_unnorm(x);
            if v > best {
                best = v;
                best_x = x;
            }
        }
        best_x
    }

    #[test]
    fn lambda_from_mode_formula() {
        assert_abs_diff_eq!(lambda_from_gamma_mode(2.0, 0.5).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lambda_from_gamma_mode(3.0, 0.25).unwrap(), 7.0, epsilon = 1e-12);
        // Formula evaluation, then verify the mode identity (5-1)/(5+77-2).
        let lambda = lambda_from_gamma_mode(5.0, 0.05).unwrap();
        assert_abs_diff_eq!(lambda, 77.0, epsilon = 1e-10);
        assert_abs_diff_eq!((5.0 - 1.0) / (5.0 + lambda - 2.0), 0.05, epsilon = 1e-12);
        assert!(lambda_from_gamma_mode(2.0, 0.0).is_err());
        assert!(lambda_from_gamma_mode(2.0, 1.0).is_err());
        assert!(lambda_from_gamma_mode(0.9, 0.5).is_err());
    }

    #[test]
    fn fits_figure_distribution_a() {
        let spec = figure_spec_a();
        let prior = elicit_prior(&spec).unwrap();
        assert!(prior.residual.abs() <= 1e-6, "residual {}", prior.residual);
        assert_abs_diff_eq!(grid_argmax(&prior), 0.05, epsilon = 1e-3);
        // Between-anchor mass equals the requested 0.90.
        let mass = prior.truncated_cdf(0.15).unwrap() - prior.truncated_cdf(0.03).unwrap();
        assert_abs_diff_eq!(mass, 0.90, epsilon = 1e-6);
        // Solver agrees with the independent fine-grid scan.
        let (grid_gamma, _) = grid_scan_best_gamma(&spec, 200_001);
        let grid_step = (500.0 - 1.0) / 200_000.0;
        assert!(
            (prior.gamma - grid_gamma).abs() <= grid_step,
            "solver gamma {} vs grid {}",
            prior.gamma,
            grid_gamma
        );
    }

    #[test]
    fn fits_figure_distribution_c() {
        let prior = elicit_prior(&figure_spec_c()).unwrap();
        assert!(prior.residual.abs() <= 1e-6);
        assert_abs_diff_eq!(grid_argmax(&prior), 0.14, epsilon = 1e-3);
    }

    #[test]
    fn near_uniform_request_hits_gamma_boundary() {
        // A mode of 0.5 with quartile anchors at (0.25, 0.75) on [0, 1] is
        // the uniform limit: no interior-mode solution with gamma > 1.
        let spec = ElicitationSpec::new(0.5, 0.0, 1.0, (0.25, 0.25), (0.75, 0.75)).unwrap();
        match elicit_prior(&spec) {
            Err(Error::GammaAtBoundary { gamma, .. }) => assert!(gamma < 1.001),
            other => panic!("expected GammaAtBoundary, got {other:?}"),
        }
    }

    #[test]
    fn percentile_fidelity_for_feasible_specs() {
        for spec in [figure_spec_a(), figure_spec_b(), figure_spec_c()] {
            let prior = elicit_prior(&spec).unwrap();
            let mass = prior.truncated_cdf(spec.kappa_high).unwrap()
                - prior.truncated_cdf(spec.kappa_low).unwrap();
            assert_abs_diff_eq!(mass, spec.p_high - spec.p_low, epsilon = 1e-6);
            let argmax = grid_argmax(&prior);
            assert_abs_diff_eq!(argmax, spec.mode, epsilon = 1e-3);
        }
    }

    #[test]
    fn monotone_argmax_in_mode() {
        // Raising the mode with anchors shifted identically must not lower
        // the fitted argmax.
        let mut prev = 0.0;
        for i in 0..6 {
            let m = 0.05 + 0.015 * i as f64;
            let spec =
                ElicitationSpec::new(m, 0.02, 0.20, (0.05, m - 0.015), (0.95, m + 0.015)).unwrap();
            let prior = elicit_prior(&spec).unwrap();
            let argmax = grid_argmax(&prior);
            assert!(
                argmax >= prev - 1e-9,
                "argmax decreased: {argmax} after {prev} at mode {m}"
            );
            prev = argmax;
        }
    }

    #[test]
    fn anchor_clamping_is_applied() {
        // kappa_low below the hard lower bound gets pulled up to it.
        let spec = ElicitationSpec::new(0.05, 0.04, 0.20, (0.05, 0.03), (0.95, 0.15)).unwrap();
        assert_eq!(spec.kappa_low, 0.04);
        // Collapsing anchors are rejected.
        assert!(ElicitationSpec::new(0.05, 0.04, 0.20, (0.05, 0.01), (0.95, 0.02)).is_err());
    }

    #[test]
    fn spec_validation_errors() {
        assert!(ElicitationSpec::new(0.5, 0.6, 0.4, (0.05, 0.45), (0.95, 0.55)).is_err());
        assert!(ElicitationSpec::new(0.5, 0.0, 1.0, (0.95, 0.25), (0.05, 0.75)).is_err());
        assert!(ElicitationSpec::new(1.5, 0.0, 1.0, (0.05, 0.25), (0.95, 0.75)).is_err());
        assert!(ElicitationSpec::new(0.3, 0.4, 1.0, (0.05, 0.45), (0.95, 0.75)).is_err());
    }

    #[test]
    fn delta_pmf_point_mass_at_zero_count() {
        let prior = elicit_prior(&figure_spec_a()).unwrap();
        assert_eq!(induced_delta_pmf(&prior, 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn delta_pmf_uniform_prior_support() {
        // Uniform rate on [0.2, 0.4] with count 10: support sits inside the
        // ceiling bounds [ceil(0.2*10), ceil(0.4*10)] = [2, 4]. The left
        // endpoint 0.2*10 = 2 is an exact integer whose bin {2} is the
        // measure-zero atom {rate = 0.2}, so positive mass lands on {3, 4}.
        let prior = ElicitedPrior {
            gamma: 1.0 + 1e-9,
            lambda: 1.0 + 1e-9,
            lower: 0.2,
            upper: 0.4,
            residual: 0.0,
        };
        let pmf = induced_delta_pmf(&prior, 10).unwrap();
        for (d, &p) in pmf.iter().enumerate() {
            if (3..=4).contains(&d) {
                assert!(p > 0.0, "expected mass at {d}");
            } else if d == 2 {
                assert_abs_diff_eq!(p, 0.0, epsilon = 1e-9);
            } else {
                assert_abs_diff_eq!(p, 0.0, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        // A boundary that is not an exact integer puts real mass on its bin.
        let shifted = ElicitedPrior {
            lower: 0.25,
            ..prior
        };
        let pmf = induced_delta_pmf(&shifted, 10).unwrap();
        assert!(pmf[3] > 0.0);
    }

    #[test]
    fn delta_pmf_figure_two_mode() {
        // Distribution A pushed through an unvaccinated count of 5653:
        // the modal count is ceil(0.05 * 5653) = 283.
        let prior = elicit_prior(&figure_spec_a()).unwrap();
        let count = 5653;
        let pmf = induced_delta_pmf(&prior, count).unwrap();
        assert_eq!(pmf.len() as u64, count + 1);
        let total: f64 = pmf.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        let modal = pmf
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(modal as u64, (0.05f64 * 5653.0).ceil() as u64);
        assert_eq!(modal, 283);
        // Support respects the ceiling bounds of the truncation interval.
        let d_min = (prior.lower * count as f64).ceil() as usize;
        let d_max = (prior.upper * count as f64).ceil() as usize;
        for (d, &p) in pmf.iter().enumerate() {
            if d < d_min || d > d_max {
                assert_abs_diff_eq!(p, 0.0, epsilon = 1e-12);
            }
        }
        assert!(pmf.iter().all(|&p| p >= 0.0));
    }
}
