//! Sensitivity-grid construction from registry-derived estimates.
//!
//! Each group contributes two external estimates: `q1`, the known
//! misclassification rate among the observed unvaccinated (registry says
//! vaccinated, trial data says not), and `q2`, the share of observed
//! unvaccinated with no registry record at all. A grid level `r` converts
//! the unvalidated pool into an assumed misclassification mode
//! `rho_hat = q1 + r q2`; anchors sit at `rho_hat +/- 0.01` and the hard
//! bounds at `(q1, q1 + q2)`.

use std::collections::BTreeMap;

use ccrt_misclass::design::SiteRecord;
use ccrt_misclass::elicit::ElicitationSpec;
use ccrt_misclass::error::Error;

use crate::error::{CliError, CliResult};

/// Grid level for the share of unvalidated unvaccinated assumed
/// misclassified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RLabel {
    Low,
    Medium,
    High,
}

impl RLabel {
    pub fn value(self) -> f64 {
        match self {
            RLabel::Low => 0.25,
            RLabel::Medium => 0.50,
            RLabel::High => 0.66,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RLabel::Low => "Low",
            RLabel::Medium => "Medium",
            RLabel::High => "High",
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        match text {
            "Low" => Ok(RLabel::Low),
            "Medium" => Ok(RLabel::Medium),
            "High" => Ok(RLabel::High),
            other => Err(CliError::input(format!(
                "r label must be Low, Medium, or High, got `{other}`"
            ))),
        }
    }
}

/// Registry estimates per group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEstimates {
    pub q1: f64,
    pub q2: f64,
    /// Values were imputed as the average of the other groups.
    pub imputed: bool,
}

/// Registry-derived misclassification estimates for the whole trial.
#[derive(Debug, Clone, Default)]
pub struct RegistryEstimates {
    groups: BTreeMap<String, GroupEstimates>,
}

impl RegistryEstimates {
    /// Assemble from raw rows; rows with `impute` get the across-group
    /// average of the known estimates.
    pub fn new(rows: Vec<(String, Option<(f64, f64)>)>) -> CliResult<Self> {
        let mut known = Vec::new();
        for (group, est) in &rows {
            if let Some((q1, q2)) = est {
                validate_q(group, *q1, *q2)?;
                known.push((*q1, *q2));
            }
        }
        if known.is_empty() {
            return Err(CliError::input(
                "registry has no groups with known estimates to impute from",
            ));
        }
        let avg_q1 = known.iter().map(|(q1, _)| q1).sum::<f64>() / known.len() as f64;
        let avg_q2 = known.iter().map(|(_, q2)| q2).sum::<f64>() / known.len() as f64;
        let mut groups = BTreeMap::new();
        for (group, est) in rows {
            let (q1, q2, imputed) = match est {
                Some((q1, q2)) => (q1, q2, false),
                None => (avg_q1, avg_q2, true),
            };
            if groups
                .insert(group.clone(), GroupEstimates { q1, q2, imputed })
                .is_some()
            {
                return Err(CliError::input(format!("duplicate registry group `{group}`")));
            }
        }
        Ok(RegistryEstimates { groups })
    }

    pub fn get(&self, group: &str) -> CliResult<&GroupEstimates> {
        self.groups.get(group).ok_or_else(|| {
            CliError::input(format!(
                "group `{group}` has no registry estimates (mark it `impute` to average)"
            ))
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &GroupEstimates)> {
        self.groups.iter()
    }
}

fn validate_q(group: &str, q1: f64, q2: f64) -> CliResult<()> {
    if !(0.0..=1.0).contains(&q1) || !(0.0..=1.0).contains(&q2) || q1 + q2 > 1.0 {
        return Err(CliError::input(format!(
            "group `{group}`: need q1, q2 >= 0 with q1 + q2 <= 1, got ({q1}, {q2})"
        )));
    }
    Ok(())
}

/// Elicitation mode for the study-misclassification rate:
/// `rho_hat = q1 + r q2`.
pub fn compute_rho_hat(q1: f64, q2: f64, r: f64) -> CliResult<f64> {
    for (name, v) in [("q1", q1), ("q2", q2), ("r", r)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(CliError::Input(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let rho_hat = q1 + r * q2;
    if rho_hat > 1.0 {
        return Err(CliError::Input(format!(
            "rho_hat = {rho_hat} exceeds 1 (q1 = {q1}, q2 = {q2}, r = {r})"
        )));
    }
    Ok(rho_hat)
}

/// Build each site's study-misclassification elicitation spec for one grid
/// cell: the site's arm picks its `r` level, the site's group its
/// `(q1, q2)`. Anchors at the 5th/95th percentiles, `rho_hat +/- 0.01`,
/// clamped into the hard bounds `(q1, q1 + q2)` when they collide.
pub fn build_grid_priors(
    registry: &RegistryEstimates,
    sites: &[SiteRecord],
    r_control: RLabel,
    r_intervention: RLabel,
) -> CliResult<BTreeMap<String, ElicitationSpec>> {
    let mut out = BTreeMap::new();
    for site in sites {
        let group = site
            .group_path
            .first()
            .ok_or_else(|| CliError::input(format!("site {} has no group label", site.site_id)))?;
        let est = registry.get(group)?;
        let r = match site.arm {
            ccrt_misclass::design::Arm::Control => r_control,
            ccrt_misclass::design::Arm::Intervention => r_intervention,
        };
        let rho_hat = compute_rho_hat(est.q1, est.q2, r.value())?;
        let spec = ElicitationSpec::new(
            rho_hat,
            est.q1,
            est.q1 + est.q2,
            (0.05, rho_hat - 0.01),
            (0.95, rho_hat + 0.01),
        )
        .map_err(|e: Error| CliError::input(format!("site {}: {e}", site.site_id)))?;
        out.insert(site.site_id.clone(), spec);
    }
    Ok(out)
}
