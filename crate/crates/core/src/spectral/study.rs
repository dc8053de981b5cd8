use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::variational::{fit_deficit, DeficitFit};

use super::{assemble, build_nystrom, MeshSpec, NystromDiscretization, SpectralResult};

/// `|lambda(mesh) - lambda(coarser mesh)|`, where the coarser mesh drops two
/// Gauss points per panel and two grading levels.
pub fn discretization_estimate(
    kernel: &KernelSpec,
    eps: f64,
    r: f64,
    mesh: &MeshSpec,
    tol: f64,
) -> Result<f64> {
    let fine = build_nystrom(kernel, eps, r, mesh)?.largest_eigenvalue(tol)?;
    let coarse_mesh = MeshSpec {
        order: mesh.order.saturating_sub(2).max(2),
        end_grading: mesh.end_grading.saturating_sub(2),
        ..*mesh
    };
    // The comparison mesh is coarse by design, so it skips the correction check.
    let coarse = assemble(kernel, eps, r, &coarse_mesh, false)?.largest_eigenvalue(tol)?;
    Ok((fine.lambda_max - coarse.lambda_max).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub eps: f64,
    pub r: f64,
    pub mesh: MeshSpec,
    pub n: usize,
    pub lambda_max: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<StudyRow>,
    /// `lambda = limit - c1/ln(R/eps) - c2/ln(R/eps)^2` over the rows of the
    /// last mesh.
    pub fit: Option<DeficitFit>,
}

impl ConvergenceStudy {
    /// Rows for one mesh, in domain order.
    pub fn rows_for(&self, mesh: &MeshSpec) -> Vec<&StudyRow> {
        self.rows.iter().filter(|r| r.mesh == *mesh).collect()
    }

    /// Whether `lambda` never drops by more than `slack` as the domain widens.
    pub fn nondecreasing(&self, slack: f64) -> bool {
        let mut meshes: Vec<MeshSpec> = Vec::new();
        for r in &self.rows {
            if !meshes.contains(&r.mesh) {
                meshes.push(r.mesh);
            }
        }
        meshes.iter().all(|m| {
            self.rows_for(m)
                .windows(2)
                .all(|w| w[1].lambda_max >= w[0].lambda_max - slack)
        })
    }
}

/// `lambda_max` on every domain for every mesh.
pub fn norm_convergence_study(
    kernel: &KernelSpec,
    domains: &[(f64, f64)],
    meshes: &[MeshSpec],
    tol: f64,
) -> Result<ConvergenceStudy> {
    if domains.is_empty() || meshes.is_empty() {
        return Err(Error::InsufficientData("need at least one domain and one mesh".into()));
    }
    for w in domains.windows(2) {
        let nested = w[1].0 <= w[0].0 && w[1].1 >= w[0].1;
        if !nested {
            return Err(Error::InvalidInput("domains must be nested and widening".into()));
        }
    }
    let mut rows = Vec::new();
    for mesh in meshes {
        for &(eps, r) in domains {
            let d = build_nystrom(kernel, eps, r, mesh)?;
            let res = d.largest_eigenvalue(tol)?;
            rows.push(StudyRow {
                eps,
                r,
                mesh: *mesh,
                n: d.n(),
                lambda_max: res.lambda_max,
                residual: res.residual,
            });
        }
    }
    let last = meshes[meshes.len() - 1];
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.mesh == last)
        .map(|row| (row.r / row.eps, row.lambda_max))
        .collect();
    let fit = if points.len() >= 2 {
        Some(fit_deficit(&points)?)
    } else {
        None
    };
    Ok(ConvergenceStudy { rows, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeReport {
    /// `(eps, R, median x of |v|^2)` per domain.
    pub medians: Vec<(f64, f64, f64)>,
    pub strictly_increasing: bool,
}

/// Median in `ln x` of the eigenvector mass `v_i^2` for each discretization.
///
/// A norm that is approached only by sequences escaping to infinity shows up
/// as a median that keeps moving outward as `R` grows.
pub fn extremal_escape_diagnostic(
    results: &[(&NystromDiscretization, &SpectralResult)],
) -> Result<EscapeReport> {
    if results.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "escape diagnostic needs at least 3 domains, got {}",
            results.len()
        )));
    }
    let mut medians = Vec::with_capacity(results.len());
    for (d, res) in results {
        if res.eigenvector.len() != d.n() {
            return Err(Error::InvalidInput("eigenvector does not match discretization".into()));
        }
        medians.push((d.domain.0, d.domain.1, mass_median(d, &res.eigenvector)));
    }
    let strictly_increasing = medians.windows(2).all(|w| w[1].2 > w[0].2);
    Ok(EscapeReport {
        medians,
        strictly_increasing,
    })
}

/// Each node carries `v_i^2` spread uniformly over its share `w_i` of the
/// log axis; the median is located by linear interpolation in `ln x`.
fn mass_median(d: &NystromDiscretization, v: &[f64]) -> f64 {
    let total: f64 = v.iter().map(|x| x * x).sum();
    let mut left = d.domain.0.ln();
    let mut acc = 0.0;
    for (i, &vi) in v.iter().enumerate() {
        let mass = vi * vi / total;
        let right = left + d.log_weights[i];
        if acc + mass >= 0.5 {
            let frac = (0.5 - acc) / mass;
            return (left + frac * (right - left)).exp();
        }
        acc += mass;
        left = right;
    }
    d.domain.1
}
