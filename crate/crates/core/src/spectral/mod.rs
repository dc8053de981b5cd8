//! Nyström discretization of the kernel operators on truncated domains
//! `[eps, R]`, the largest eigenvalue of the discrete operator, and the
//! convergence and escape studies built on it.
//!
//! The operator is discretized in `s = ln x`, where every kernel of interest
//! is a function of `(s, r)` with a logarithmic singularity at `r = s`. The
//! mesh is a composite Gauss-Legendre rule with a fixed number of panels per
//! decade, geometrically refined toward both ends. Matrix entries whose
//! column panel lies near the row node are computed by product integration
//! (`int_Q K(s_i, r) l_j(r) dr` against the Lagrange basis of the panel);
//! all others are `K(s_i, s_j) w_j`.

mod lanczos;
mod study;

use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::quadrature::gauss_legendre;

pub use lanczos::{largest_eigenvalue_matrix, SpectralResult};
pub use study::{
    discretization_estimate, extremal_escape_diagnostic, norm_convergence_study, ConvergenceStudy,
    EscapeReport, StudyRow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalTreatment {
    /// Product integration of the singular kernel on near panels.
    #[default]
    ProductIntegration,
    /// Plain Nyström with zero diagonal; biased low, for cross-checks only.
    IgnoreDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshSpec {
    pub panels_per_decade: usize,
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Halvings of the end panel at each end of the domain.
    pub end_grading: usize,
    pub treatment: DiagonalTreatment,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            panels_per_decade: 3,
            order: 8,
            end_grading: 6,
            treatment: DiagonalTreatment::ProductIntegration,
        }
    }
}

impl MeshSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = (1..=64).contains(&self.panels_per_decade)
            && (2..=32).contains(&self.order)
            && self.end_grading <= 30;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("mesh settings out of range: {self:?}")))
        }
    }

    /// Panel edges in `s = ln x` for the log-domain `[a, b]`.
    fn edges(&self, a: f64, b: f64) -> Vec<f64> {
        let decades = (b - a) / std::f64::consts::LN_10;
        let base = ((decades * self.panels_per_decade as f64).ceil() as usize).max(1);
        let h = (b - a) / base as f64;
        let mut edges: Vec<f64> = (0..=base).map(|k| a + h * k as f64).collect();
        edges[base] = b;
        for k in 1..=self.end_grading {
            let d = h * 0.5f64.powi(k as i32);
            edges.push(a + d);
            edges.push(b - d);
        }
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        edges
    }
}

/// Near-diagonal correction share above which a mesh is rejected.
const MAX_CORRECTION_FRACTION: f64 = 0.2;

/// A discretized operator on `[eps, R]`.
#[derive(Debug, Clone)]
pub struct NystromDiscretization {
    pub kernel: KernelSpec,
    pub domain: (f64, f64),
    pub mesh: MeshSpec,
    /// Nodes in `x`, ascending.
    pub nodes: Vec<f64>,
    /// Quadrature weights in `x` (`x_i` times the weight in `ln x`).
    pub weights: Vec<f64>,
    /// Symmetric `n x n` matrix `sqrt(w_i) t(x_i, x_j) sqrt(w_j)` with
    /// corrected near-diagonal entries.
    pub matrix: DMatrix<f64>,
    /// Largest near-diagonal correction share over the ungraded panels.
    pub max_correction_fraction: f64,
    log_nodes: Vec<f64>,
    log_weights: Vec<f64>,
}

impl NystromDiscretization {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn log_nodes(&self) -> &[f64] {
        &self.log_nodes
    }

    /// `sum_ij u_i M_ij u_j / sum u_i^2` for the vector sampling `phi` as
    /// `u_i = sqrt(w_i) phi(x_i)`.
    pub fn sampled_quotient<F: Fn(f64) -> f64>(&self, phi: F) -> f64 {
        let u: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w.sqrt() * phi(x))
            .collect();
        let v = nalgebra::DVector::from_vec(u);
        (v.transpose() * &self.matrix * &v)[(0, 0)] / v.norm_squared()
    }

    /// `max |M_ij - M_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let m = &self.matrix;
        let n = self.n();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn min_off_diagonal(&self) -> f64 {
        let n = self.n();
        let mut min = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    min = min.min(self.matrix[(i, j)]);
                }
            }
        }
        min
    }

    /// Writes `i,j,x_i,x_j,entry` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "i,j,x_i,x_j,entry")?;
        for i in 0..self.n() {
            for j in 0..self.n() {
                writeln!(
                    out,
                    "{i},{j},{:.17e},{:.17e},{:.17e}",
                    self.nodes[i], self.nodes[j], self.matrix[(i, j)]
                )?;
            }
        }
        Ok(())
    }

    pub fn largest_eigenvalue(&self, tol: f64) -> Result<SpectralResult> {
        largest_eigenvalue_matrix(&self.matrix, tol)
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    /// Index of the first node.
    first: usize,
    graded: bool,
}

/// Discretizes `kernel` on `[eps, r]`.
pub fn build_nystrom(kernel: &KernelSpec, eps: f64, r: f64, mesh: &MeshSpec) -> Result<NystromDiscretization> {
    assemble(kernel, eps, r, mesh, true)
}

pub(crate) fn assemble(
    kernel: &KernelSpec,
    eps: f64,
    r: f64,
    mesh: &MeshSpec,
    reject_coarse: bool,
) -> Result<NystromDiscretization> {
    mesh.validate()?;
    if !(eps > 0.0 && r > eps) || !r.is_finite() {
        return Err(Error::InvalidInput(format!("need 0 < eps < R, got [{eps}, {r}]")));
    }
    let (a, b) = (eps.ln(), r.ln());
    let edges = mesh.edges(a, b);
    let (gx, gw) = gauss_legendre(mesh.order);
    let p = mesh.order;
    let base_width = (edges[edges.len() - 1] - edges[0])
        / ((((b - a) / std::f64::consts::LN_10) * mesh.panels_per_decade as f64).ceil()).max(1.0);
    let mut panels = Vec::with_capacity(edges.len() - 1);
    let mut s_nodes = Vec::new();
    let mut s_weights = Vec::new();
    for (k, w) in edges.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        panels.push(Panel {
            lo,
            hi,
            first: k * p,
            graded: hi - lo < 0.99 * base_width,
        });
        for (x, wt) in gx.iter().zip(&gw) {
            s_nodes.push(lo + half * (1.0 + x));
            s_weights.push(half * wt);
        }
    }
    let n = s_nodes.len();
    if n < 16 {
        return Err(Error::InvalidInput(format!("mesh has {n} nodes, need at least 16")));
    }

    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| nystrom_row(kernel, mesh, &panels, &s_nodes, &s_weights, i))
        .collect();

    let mut max_fraction = 0.0_f64;
    let mut matrix = DMatrix::zeros(n, n);
    let sqrt_w: Vec<f64> = s_weights.iter().map(|w| w.sqrt()).collect();
    for (i, (row, fraction)) in rows.iter().enumerate() {
        let panel = &panels[i / p];
        if !panel.graded && mesh.treatment == DiagonalTreatment::ProductIntegration {
            if reject_coarse && *fraction > MAX_CORRECTION_FRACTION {
                return Err(Error::MeshTooCoarse {
                    x: s_nodes[i].exp(),
                    fraction: *fraction,
                });
            }
            max_fraction = max_fraction.max(*fraction);
        }
        for j in 0..n {
            matrix[(i, j)] = sqrt_w[i] * row[j] / sqrt_w[j];
        }
    }
    let sym = (&matrix + matrix.transpose()) * 0.5;

    let nodes: Vec<f64> = s_nodes.iter().map(|s| s.exp()).collect();
    let weights = nodes.iter().zip(&s_weights).map(|(x, w)| x * w).collect();
    Ok(NystromDiscretization {
        kernel: *kernel,
        domain: (eps, r),
        mesh: *mesh,
        nodes,
        weights,
        matrix: sym,
        max_correction_fraction: max_fraction,
        log_nodes: s_nodes,
        log_weights: s_weights,
    })
}

/// Row `i` of the unsymmetrized Nyström matrix `N_ij` (so that
/// `(K u)(s_i) ~ sum_j N_ij u(s_j)`), and the share of the row sum that
/// comes from near-panel corrections.
fn nystrom_row(
    kernel: &KernelSpec,
    mesh: &MeshSpec,
    panels: &[Panel],
    s_nodes: &[f64],
    s_weights: &[f64],
    i: usize,
) -> (Vec<f64>, f64) {
    let n = s_nodes.len();
    let si = s_nodes[i];
    let mut row: Vec<f64> = (0..n)
        .map(|j| {
            if j == i {
                0.0
            } else {
                kernel.eval_log_offset(si, s_nodes[j] - si) * s_weights[j]
            }
        })
        .collect();
    if mesh.treatment == DiagonalTreatment::IgnoreDiagonal {
        return (row, 0.0);
    }
    let naive_sum: f64 = row.iter().sum();
    for panel in panels {
        let width = panel.hi - panel.lo;
        let distance = (panel.lo - si).max(si - panel.hi).max(0.0);
        if distance > width {
            continue;
        }
        let local = &s_nodes[panel.first..panel.first + mesh.order];
        let weights = product_weights(kernel, si, panel.lo, panel.hi, local);
        row[panel.first..panel.first + mesh.order].copy_from_slice(&weights);
    }
    let total: f64 = row.iter().sum();
    let fraction = if total > 0.0 {
        (total - naive_sum).abs() / total
    } else {
        0.0
    };
    (row, fraction)
}

/// Geometric ratio and depth of the graded rule toward the singular point.
const GRADING_RATIO: f64 = 0.2;
const GRADING_LEVELS: usize = 30;
const SEGMENT_ORDER: usize = 16;

thread_local! {
    static SEGMENT_RULE: (Vec<f64>, Vec<f64>) = gauss_legendre(SEGMENT_ORDER);
}

/// `int_lo^hi K(s, r) l_j(r) dr` for the Lagrange basis `l_j` on `local`,
/// by a composite rule graded geometrically toward `clamp(s, lo, hi)`.
/// Kernel offsets are formed relative to that point, never by subtracting
/// nearby abscissae.
fn product_weights(kernel: &KernelSpec, s: f64, lo: f64, hi: f64, local: &[f64]) -> Vec<f64> {
    let c = s.clamp(lo, hi);
    let shift = c - s;
    let bary = barycentric_weights(local);
    let mut out = vec![0.0; local.len()];
    let mut basis = vec![0.0; local.len()];
    SEGMENT_RULE.with(|(gx, gw)| {
        for (length, sign) in [(c - lo, -1.0), (hi - c, 1.0)] {
            if length <= 0.0 {
                continue;
            }
            let mut outer = length;
            for level in 0..=GRADING_LEVELS {
                let inner = if level == GRADING_LEVELS { 0.0 } else { outer * GRADING_RATIO };
                let half = 0.5 * (outer - inner);
                let mid = 0.5 * (outer + inner);
                for (x, w) in gx.iter().zip(gw) {
                    let t = sign * (mid + half * x);
                    let weight = half * w * kernel.eval_log_offset(s, shift + t);
                    lagrange_basis(local, &bary, c + t, &mut basis);
                    for (o, l) in out.iter_mut().zip(&basis) {
                        *o += weight * l;
                    }
                }
                outer = inner;
            }
        }
    });
    out
}

fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    (0..nodes.len())
        .map(|j| {
            let prod: f64 = (0..nodes.len())
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product();
            1.0 / prod
        })
        .collect()
}

fn lagrange_basis(nodes: &[f64], bary: &[f64], x: f64, out: &mut [f64]) {
    if let Some(k) = nodes.iter().position(|&v| v == x) {
        out.iter_mut().for_each(|o| *o = 0.0);
        out[k] = 1.0;
        return;
    }
    let mut denom = 0.0;
    for ((o, &node), &b) in out.iter_mut().zip(nodes).zip(bary) {
        *o = b / (x - node);
        denom += *o;
    }
    out.iter_mut().for_each(|o| *o /= denom);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_reproduces_polynomials() {
        let (x, _) = gauss_legendre(6);
        let bary = barycentric_weights(&x);
        let mut basis = vec![0.0; 6];
        lagrange_basis(&x, &bary, 0.37, &mut basis);
        let interp: f64 = x.iter().zip(&basis).map(|(n, l)| n.powi(5) * l).sum();
        assert!((interp - 0.37f64.powi(5)).abs() < 1e-14);
    }

    #[test]
    fn mesh_edges_are_graded() {
        let mesh = MeshSpec::default();
        let e = mesh.edges(0.0, std::f64::consts::LN_10);
        assert_eq!(e.len(), 4 + 2 * mesh.end_grading);
        assert!(e.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn product_weights_integrate_log_singularity() {
        // int_0^1 -ln|r - 0.3| dr against the constant basis sum.
        let k = KernelSpec::homogeneous(0).unwrap();
        let (x, _) = gauss_legendre(8);
        let local: Vec<f64> = x.iter().map(|v| 0.5 * (v + 1.0)).collect();
        let w = product_weights(&k, 0.3, 0.0, 1.0, &local);
        let total: f64 = w.iter().sum();
        let exact = crate::quadrature::integrate_interval(
            |r| k.eval_log(0.3, r),
            0.0,
            1.0,
            &crate::quadrature::QuadSpec::with_tolerances(1e-13, 1e-15).with_singular_points(&[0.3]),
        )
        .unwrap()
        .value;
        assert!((total - exact).abs() < 1e-12, "{total} vs {exact}");
    }
}
