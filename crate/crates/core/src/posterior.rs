//! Posterior reductions: odds-ratio summaries and convergence diagnostics.

use crate::error::{Error, Result};
use crate::sampler::ChainOutput;

/// Summary of the odds-ratio posterior for one coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub or_mean: f64,
    /// Headline value: commutes with the log transform.
    pub or_median: f64,
    /// Equal-tailed 95% credible interval.
    pub cri_95: (f64, f64),
    /// `(threshold, P(OR > threshold))`, in input order.
    pub tail_probs: Vec<(f64, f64)>,
    /// Effective sample size (absent for a zero-variance chain).
    pub ess: Option<f64>,
    /// Split-chain potential scale reduction (needs >= 2 chains).
    pub psrf: Option<f64>,
}

/// Equal-tailed quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Reduce one chain's arm-coefficient draws to odds-ratio summaries.
///
/// OR draws are `exp` of the coefficient draws; the interval is the
/// 2.5%/97.5% empirical quantile pair; each tail probability is the
/// fraction of OR draws above its threshold.
pub fn summarize_or(
    chain: &ChainOutput,
    coefficient_index: usize,
    thresholds: &[f64],
) -> Result<PosteriorSummary> {
    let draws = chain.coefficient_draws(coefficient_index);
    if draws.is_empty() {
        return Err(Error::input("empty retained chain"));
    }
    let or: Vec<f64> = draws.iter().map(|a| a.exp()).collect();
    let mut sorted = or.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = or.len() as f64;
    let or_mean = or.iter().sum::<f64>() / n;
    let or_median = quantile(&sorted, 0.5);
    let cri_95 = (quantile(&sorted, 0.025), quantile(&sorted, 0.975));
    let tail_probs = thresholds
        .iter()
        .map(|&t| (t, or.iter().filter(|&&x| x > t).count() as f64 / n))
        .collect();
    let ess = effective_sample_size(&draws).ok();
    Ok(PosteriorSummary {
        or_mean,
        or_median,
        cri_95,
        tail_probs,
        ess,
        psrf: None,
    })
}

/// Convergence diagnostics for one coefficient across chains.
///
/// Returns the summed per-chain effective sample size and, when two or
/// more chains are supplied, the split-chain potential scale reduction.
pub fn diagnostics(chains: &[ChainOutput], coefficient_index: usize) -> Result<(f64, Option<f64>)> {
    if chains.is_empty() {
        return Err(Error::input("no chains supplied"));
    }
    for c in chains {
        if c.draws.len() < 100 {
            return Err(Error::input(format!(
                "diagnostics need chains of length >= 100, got {}",
                c.draws.len()
            )));
        }
    }
    let series: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| c.coefficient_draws(coefficient_index))
        .collect();
    let mut ess = 0.0;
    for s in &series {
        ess += effective_sample_size(s)?;
    }
    let psrf = if series.len() >= 2 {
        Some(split_psrf(&series)?)
    } else {
        None
    };
    Ok((ess, psrf))
}

/// Effective sample size with the autocorrelation sum truncated at the
/// first negative consecutive pair (Geyer's initial positive sequence).
pub fn effective_sample_size(draws: &[f64]) -> Result<f64> {
    let n = draws.len();
    if n < 10 {
        return Err(Error::input("too few draws for an autocorrelation estimate"));
    }
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    // A constant chain accumulates ~1e-34 of rounding noise in `var`;
    // anything below the f64 noise floor of the draws is zero variance.
    let scale = draws.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let noise_floor = (1e-12 * (scale + 1e-300)).powi(2);
    if !var.is_finite() || var <= noise_floor {
        return Err(Error::DiagnosticUndefined(
            "zero-variance chain has no effective sample size".into(),
        ));
    }
    let acf = |lag: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..n - lag {
            s += (draws[t] - mean) * (draws[t + lag] - mean);
        }
        s / (n as f64 * var)
    };
    // tau = -1 + 2 * sum of positive consecutive-lag pairs, starting from
    // (rho_0 + rho_1).
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = acf(2 * k) + acf(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 1;
    }
    Ok(n as f64 / tau.max(1e-12))
}

/// Split-chain potential scale reduction factor.
fn split_psrf(series: &[Vec<f64>]) -> Result<f64> {
    let half = series.iter().map(|s| s.len()).min().unwrap() / 2;
    if half < 2 {
        return Err(Error::input("chains too short to split"));
    }
    let mut halves: Vec<&[f64]> = Vec::with_capacity(series.len() * 2);
    for s in series {
        halves.push(&s[..half]);
        halves.push(&s[s.len() - half..]);
    }
    let m = halves.len() as f64;
    let n = half as f64;
    let means: Vec<f64> = halves
        .iter()
        .map(|h| h.iter().sum::<f64>() / n)
        .collect();
    let vars: Vec<f64> = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0))
        .collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n * means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>() / (m - 1.0);
    let w = vars.iter().sum::<f64>() / m;
    if w <= 0.0 || !w.is_finite() {
        return Err(Error::DiagnosticUndefined(
            "zero within-chain variance; PSRF undefined".into(),
        ));
    }
    Ok((((n - 1.0) / n * w + b / n) / w).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{ChainDraw, ChainOutput};
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    /// Wrap a scalar series as a single-coefficient chain.
    fn pseudo_chain(values: &[f64]) -> ChainOutput {
        ChainOutput {
            draws: values
                .iter()
                .map(|&v| ChainDraw {
                    beta: vec![0.0, v],
                    sigma2: vec![1.0],
                    rates: vec![],
                    corrected: vec![],
                })
                .collect(),
            iterations: values.len(),
            burn_in: 0,
            seed: 0,
            stream_id: 0,
            jitter_events: 0,
        }
    }

    #[test]
    fn constant_chain_summary() {
        let chain = pseudo_chain(&vec![2.0_f64.ln(); 200]);
        let s = summarize_or(&chain, 1, &[1.0]).unwrap();
        assert_abs_diff_eq!(s.or_median, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.or_mean, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.cri_95.0, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.cri_95.1, 2.0, epsilon = 1e-12);
        assert_eq!(s.tail_probs, vec![(1.0, 1.0)]);
        // Degenerate chain: no ESS, but the summary itself stands.
        assert!(s.ess.is_none());
    }

    #[test]
    fn tail_probability_is_a_count() {
        let chain = pseudo_chain(&[0.1, -0.2, 0.3]);
        let s = summarize_or(&chain, 1, &[1.0]).unwrap();
        assert_abs_diff_eq!(s.tail_probs[0].1, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_chain_is_error() {
        let chain = pseudo_chain(&[]);
        assert!(summarize_or(&chain, 1, &[1.0]).is_err());
    }

    #[test]
    fn iid_chain_ess_is_near_n() {
        let mut rng = crate::stream::RandomStream::new(71);
        let draws: Vec<f64> = (0..4000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ess = effective_sample_size(&draws).unwrap();
        assert!(
            (3200.0..=4800.0).contains(&ess),
            "iid ESS should be near n: {ess}"
        );
    }

    #[test]
    fn identical_chains_have_unit_psrf() {
        let mut rng = crate::stream::RandomStream::new(72);
        let draws: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let a = pseudo_chain(&draws);
        let b = pseudo_chain(&draws);
        let (ess, psrf) = diagnostics(&[a, b], 1).unwrap();
        let r = psrf.unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 0.01);
        assert!(ess > 0.0);
    }

    #[test]
    fn constant_chain_diagnostics_error() {
        let chain = pseudo_chain(&vec![0.7; 500]);
        let err = diagnostics(&[chain], 1).unwrap_err();
        assert!(matches!(err, Error::DiagnosticUndefined(_)));
    }

    #[test]
    fn short_chain_rejected() {
        let chain = pseudo_chain(&vec![0.1; 50]);
        assert!(diagnostics(&[chain], 1).is_err());
    }

    #[test]
    fn quantile_sandwich_and_monotone_tails() {
        let mut rng = crate::stream::RandomStream::new(73);
        let draws: Vec<f64> = (0..2000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.2 + 0.5 * z
            })
            .collect();
        let chain = pseudo_chain(&draws);
        let s = summarize_or(&chain, 1, &[0.5, 1.0, 1.5, 2.0]).unwrap();
        assert!(s.cri_95.0 <= s.or_median && s.or_median <= s.cri_95.1);
        for pair in s.tail_probs.windows(2) {
            assert!(pair[0].1 >= pair[1].1, "tail probs must be nonincreasing");
        }
    }

    #[test]
    fn exponentiation_commutes_with_quantiles() {
        // Equal-tailed quantiles of exp(draws) equal exp of the quantiles
        // of the draws. n chosen so (n-1)q is integral at 0.025/0.5/0.975
        // and the interpolation step drops out.
        let mut rng = crate::stream::RandomStream::new(74);
        let draws: Vec<f64> = (0..1601).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut log_sorted = draws.clone();
        log_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let chain = pseudo_chain(&draws);
        let s = summarize_or(&chain, 1, &[]).unwrap();
        assert_abs_diff_eq!(s.or_median, quantile(&log_sorted, 0.5).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(s.cri_95.0, quantile(&log_sorted, 0.025).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(s.cri_95.1, quantile(&log_sorted, 0.975).exp(), epsilon = 1e-9);
    }
}
