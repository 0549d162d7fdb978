//! Input-file parsers: site counts, registry estimates, and optional
//! per-site eligibility-prior overrides.

use std::path::Path;

use ccrt_misclass::design::{Arm, SiteRecord};
use ccrt_misclass::elicit::ElicitationSpec;

use crate::error::{CliError, CliResult};
use crate::grid::RegistryEstimates;

/// Site file: `site_id,group_id,arm,n_obs,y_obs[,cov_*...]`.
pub fn read_sites(path: &Path) -> CliResult<Vec<SiteRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let expected = ["site_id", "group_id", "arm", "n_obs", "y_obs"];
    for (i, name) in expected.iter().enumerate() {
        if headers.get(i) != Some(*name) {
            return Err(CliError::input(format!(
                "{}: column {} must be `{name}`, got `{}`",
                path.display(),
                i + 1,
                headers.get(i).unwrap_or("<missing>")
            )));
        }
    }
    let cov_names: Vec<String> = headers.iter().skip(expected.len()).map(String::from).collect();
    for name in &cov_names {
        if !name.starts_with("cov_") {
            return Err(CliError::input(format!(
                "{}: extra columns must be covariates named `cov_*`, got `{name}`",
                path.display()
            )));
        }
    }

    let mut sites = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row?;
        let ctx = |field: &str, e: String| {
            CliError::input(format!("{} row {}: {field}: {e}", path.display(), row_idx + 2))
        };
        let site_id = row.get(0).unwrap_or_default().to_string();
        if site_id.is_empty() {
            return Err(CliError::input(format!(
                "{} row {}: empty site_id",
                path.display(),
                row_idx + 2
            )));
        }
        let group_id = row.get(1).unwrap_or_default().to_string();
        let arm_raw: u8 = row
            .get(2)
            .unwrap_or_default()
            .parse()
            .map_err(|e: std::num::ParseIntError| ctx("arm", e.to_string()))?;
        let arm = Arm::from_index(arm_raw).map_err(|e| ctx("arm", e.to_string()))?;
        let n_obs: u64 = row
            .get(3)
            .unwrap_or_default()
            .parse()
            .map_err(|e: std::num::ParseIntError| ctx("n_obs", e.to_string()))?;
        let y_obs: u64 = row
            .get(4)
            .unwrap_or_default()
            .parse()
            .map_err(|e: std::num::ParseIntError| ctx("y_obs", e.to_string()))?;
        let mut covariates = Vec::with_capacity(cov_names.len());
        for (j, _) in cov_names.iter().enumerate() {
            let v: f64 = row
                .get(5 + j)
                .unwrap_or_default()
                .parse()
                .map_err(|e: std::num::ParseFloatError| ctx("covariate", e.to_string()))?;
            covariates.push(v);
        }
        sites.push(SiteRecord {
            site_id,
            group_path: vec![group_id],
            arm,
            n_obs,
            y_obs,
            covariates,
        });
    }
    if sites.is_empty() {
        return Err(CliError::input(format!("{}: no site rows", path.display())));
    }
    Ok(sites)
}

/// Registry file: `group_id,q1,q2[,impute]`. A row whose fourth field is
/// `impute` takes the across-group averages; its q fields may be blank.
pub fn read_registry(path: &Path) -> CliResult<RegistryEstimates> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    for (i, name) in ["group_id", "q1", "q2"].iter().enumerate() {
        if headers.get(i) != Some(*name) {
            return Err(CliError::input(format!(
                "{}: column {} must be `{name}`",
                path.display(),
                i + 1
            )));
        }
    }
    let mut rows = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row?;
        let group = row.get(0).unwrap_or_default().to_string();
        let impute = row.get(3).is_some_and(|f| f == "impute");
        let est = if impute {
            None
        } else {
            let parse = |i: usize, name: &str| -> CliResult<f64> {
                row.get(i)
                    .unwrap_or_default()
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| {
                        CliError::input(format!(
                            "{} row {}: {name}: {e}",
                            path.display(),
                            row_idx + 2
                        ))
                    })
            };
            Some((parse(1, "q1")?, parse(2, "q2")?))
        };
        rows.push((group, est));
    }
    RegistryEstimates::new(rows)
}

/// Eligibility-prior override file:
/// `site_id,mode,p_low,kappa_low,p_high,kappa_high,lower,upper`.
/// Sites absent from the file keep the degenerate (zero) eligibility
/// rates of the default workflow.
pub fn read_eligibility_overrides(
    path: &Path,
) -> CliResult<std::collections::BTreeMap<String, ElicitationSpec>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let expected = [
        "site_id",
        "mode",
        "p_low",
        "kappa_low",
        "p_high",
        "kappa_high",
        "lower",
        "upper",
    ];
    for (i, name) in expected.iter().enumerate() {
        if headers.get(i) != Some(*name) {
            return Err(CliError::input(format!(
                "{}: column {} must be `{name}`",
                path.display(),
                i + 1
            )));
        }
    }
    let mut out = std::collections::BTreeMap::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row?;
        let site_id = row.get(0).unwrap_or_default().to_string();
        let num = |i: usize| -> CliResult<f64> {
            row.get(i).unwrap_or_default().parse().map_err(|e: std::num::ParseFloatError| {
                CliError::input(format!(
                    "{} row {}: {}: {e}",
                    path.display(),
                    row_idx + 2,
                    expected[i]
                ))
            })
        };
        let spec = ElicitationSpec::new(
            num(1)?,
            num(6)?,
            num(7)?,
            (num(2)?, num(3)?),
            (num(4)?, num(5)?),
        )
        .map_err(|e| CliError::input(format!("{} site {site_id}: {e}", path.display())))?;
        if out.insert(site_id.clone(), spec).is_some() {
            return Err(CliError::input(format!("duplicate eligibility row for `{site_id}`")));
        }
    }
    Ok(out)
}

/// Roster-size file for simulate mode: one integer per line.
pub fn read_site_sizes(path: &Path, expected: usize) -> CliResult<Vec<u64>> {
    let text = std::fs::read_to_string(path)?;
    let sizes: Vec<u64> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse()
                .map_err(|e: std::num::ParseIntError| CliError::input(format!("{}: {e}", path.display())))
        })
        .collect::<CliResult<_>>()?;
    if sizes.len() != expected {
        return Err(CliError::input(format!(
            "{}: expected {expected} site sizes, got {}",
            path.display(),
            sizes.len()
        )));
    }
    Ok(sizes)
}
