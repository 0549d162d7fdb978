//! Design-matrix assembly for the multi-level logistic model.
//!
//! Sites are sorted (controls first, then by group labels, then site id) so
//! that the site-level random-effect design is the identity and the
//! group-level design is block diagonal of ones-vectors. The full design
//! `Z = [X | A1 | A2]` column-concatenates the fixed effects with the
//! random-effect designs; the coefficient vector stacks the fixed effects
//! first, then each random-effect block.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Intervention arm of a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arm {
    Control = 0,
    Intervention = 1,
}

impl Arm {
    pub fn indicator(self) -> f64 {
        match self {
            Arm::Control => 0.0,
            Arm::Intervention => 1.0,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            0 => Ok(Arm::Control),
            1 => Ok(Arm::Intervention),
            other => Err(Error::input(format!("arm must be 0 or 1, got {other}"))),
        }
    }
}

/// One cluster's observed data.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteRecord {
    pub site_id: String,
    /// Hierarchy labels above the site (e.g. the health-care system).
    pub group_path: Vec<String>,
    pub arm: Arm,
    pub n_obs: u64,
    pub y_obs: u64,
    /// Site-level covariates (proportions on a comparable scale).
    pub covariates: Vec<f64>,
}

impl SiteRecord {
    pub fn validate(&self) -> Result<()> {
        if self.y_obs > self.n_obs {
            return Err(Error::input(format!(
                "site {}: Y = {} exceeds N = {}",
                self.site_id, self.y_obs, self.n_obs
            )));
        }
        Ok(())
    }
}

/// Random-effect hierarchy shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hierarchy {
    /// Site-level random intercepts only (R = 1).
    SiteOnly,
    /// Site intercepts nested in group intercepts (R = 2).
    SiteWithinGroup,
}

/// Assembled design matrices plus the sorted site records they describe.
#[derive(Debug, Clone)]
pub struct DesignSet {
    /// Sites in design-row order.
    pub sites: Vec<SiteRecord>,
    /// Fixed-effect matrix: intercept, arm indicator, covariates.
    pub x: DMatrix<f64>,
    /// Random-effect design matrices (identity, then group blocks).
    pub a_blocks: Vec<DMatrix<f64>>,
    /// Column-concatenation [X | A1 | ... | AR].
    pub z: DMatrix<f64>,
    /// Group labels in the column order of the group-level block.
    pub group_labels: Vec<String>,
    /// Group column index per design row (present when R = 2).
    pub group_index: Vec<usize>,
}

impl DesignSet {
    /// Number of fixed-effect columns p.
    pub fn fixed_dim(&self) -> usize {
        self.x.ncols()
    }

    /// Random-effect block sizes q_r.
    pub fn block_dims(&self) -> Vec<usize> {
        self.a_blocks.iter().map(|a| a.ncols()).collect()
    }

    /// Total coefficient dimension W = p + sum q_r.
    pub fn total_dim(&self) -> usize {
        self.z.ncols()
    }

    /// Coefficient index of the arm effect (second fixed-effect column).
    pub fn arm_coefficient_index(&self) -> usize {
        1
    }
}

/// Build the design set for a list of sites.
///
/// Rows are ordered controls-first, then by group path, then site id, so
/// permuting the input order never changes the assembled design.
pub fn build_design(sites: &[SiteRecord], hierarchy: Hierarchy) -> Result<DesignSet> {
    if sites.is_empty() {
        return Err(Error::input("no sites provided"));
    }
    let n_cov = sites[0].covariates.len();
    let path_len = sites[0].group_path.len();
    let mut seen = std::collections::HashSet::new();
    for site in sites {
        site.validate()?;
        if !seen.insert(site.site_id.clone()) {
            return Err(Error::input(format!("duplicate site_id {}", site.site_id)));
        }
        if site.covariates.len() != n_cov {
            return Err(Error::input(format!(
                "site {}: expected {} covariates, got {}",
                site.site_id,
                n_cov,
                site.covariates.len()
            )));
        }
        if site.group_path.len() != path_len {
            return Err(Error::input(format!(
                "site {}: inconsistent hierarchy depth",
                site.site_id
            )));
        }
    }
    if hierarchy == Hierarchy::SiteWithinGroup && path_len == 0 {
        return Err(Error::input(
            "group-level hierarchy requires a group label per site",
        ));
    }

    let mut sorted: Vec<SiteRecord> = sites.to_vec();
    sorted.sort_by(|a, b| {
        (a.arm, &a.group_path, &a.site_id).cmp(&(b.arm, &b.group_path, &b.site_id))
    });

    let s = sorted.len();
    let p = 2 + n_cov;
    let mut x = DMatrix::zeros(s, p);
    for (row, site) in sorted.iter().enumerate() {
        x[(row, 0)] = 1.0;
        x[(row, 1)] = site.arm.indicator();
        for (j, &c) in site.covariates.iter().enumerate() {
            x[(row, 2 + j)] = c;
        }
    }

    let a1 = DMatrix::identity(s, s);
    let mut a_blocks = vec![a1];
    let mut group_labels = Vec::new();
    let mut group_index = Vec::new();
    if hierarchy == Hierarchy::SiteWithinGroup {
        for site in &sorted {
            let label = site.group_path.join("/");
            let idx = match group_labels.iter().position(|g| *g == label) {
                Some(i) => i,
                None => {
                    group_labels.push(label);
                    group_labels.len() - 1
                }
            };
            group_index.push(idx);
        }
        let mut a2 = DMatrix::zeros(s, group_labels.len());
        for (row, &g) in group_index.iter().enumerate() {
            a2[(row, g)] = 1.0;
        }
        a_blocks.push(a2);
    }

    let w = p + a_blocks.iter().map(|a| a.ncols()).sum::<usize>();
    let mut z = DMatrix::zeros(s, w);
    z.view_mut((0, 0), (s, p)).copy_from(&x);
    let mut offset = p;
    for a in &a_blocks {
        z.view_mut((0, offset), (s, a.ncols())).copy_from(a);
        offset += a.ncols();
    }

    Ok(DesignSet {
        sites: sorted,
        x,
        a_blocks,
        z,
        group_labels,
        group_index,
    })
}
