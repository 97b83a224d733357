//! Point-cloud discretizations of radial measures on hyperbolic manifolds.
//!
//! A radial density about a center is binned into rings `(radius, polar
//! angle[, azimuth])` realized through the exponential map. Two clouds built
//! with the same spec from the same profile share their local grids, so the
//! exact transport cost between them tracks the continuum distance closely:
//! the matched pairing is a feasible plan whose cost is a quadrature of the
//! isometry displacement.

use ndarray::Array2;

use super::{DiscreteMeasure, TransportError};
use crate::geometry::{HyperboloidPoint, ModelManifold};
use crate::solver::DensityField;

/// Cloud resolution. Azimuth nodes are only used in dimension 3.
#[derive(Clone, Copy, Debug)]
pub struct CloudSpec {
    pub radial_bins: usize,
    pub polar_nodes: usize,
    pub azimuth_nodes: usize,
}

impl Default for CloudSpec {
    fn default() -> Self {
        Self {
            radial_bins: 20,
            polar_nodes: 12,
            azimuth_nodes: 6,
        }
    }
}

/// Bins the active cells of `rho` into at most `radial_bins` groups of
/// consecutive cells; returns `(representative radius, mass)` per bin with
/// the representative at the mass-weighted mean radius.
fn radial_bins(rho: &DensityField, bins: usize) -> Vec<(f64, f64)> {
    let grid = rho.grid();
    let active: Vec<(usize, f64)> = rho
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (i, v * grid.volumes()[i]))
        .collect();
    if active.is_empty() {
        return Vec::new();
    }
    let per_bin = active.len().div_ceil(bins);
    active
        .chunks(per_bin)
        .map(|chunk| {
            let mass: f64 = chunk.iter().map(|&(_, m)| m).sum();
            let r = if mass > 0.0 {
                chunk
                    .iter()
                    .map(|&(i, m)| grid.centers()[i] * m)
                    .sum::<f64>()
                    / mass
            } else {
                grid.centers()[chunk[0].0]
            };
            (r, mass)
        })
        .filter(|&(_, m)| m > 0.0)
        .collect()
}

/// Discretizes the radial density `rho` about `center` into a weighted point
/// cloud on the hyperboloid. `axis` fixes the polar direction, so two clouds
/// built around different centers with axes along the connecting geodesic
/// are matched ring by ring. Supports dimensions 2 and 3.
pub fn radial_point_cloud(
    rho: &DensityField,
    center: &HyperboloidPoint,
    axis: &[f64],
    spec: &CloudSpec,
) -> Result<DiscreteMeasure, TransportError> {
    let manifold = rho.grid().manifold();
    if center.manifold() != manifold {
        return Err(TransportError::InvalidParameter(
            "cloud center lives on a different manifold than the density grid",
        ));
    }
    let n = manifold.dim();
    if n != 2 && n != 3 {
        return Err(TransportError::InvalidParameter(
            "point clouds are implemented for dimensions 2 and 3",
        ));
    }
    let frame = center.tangent_basis(axis)?;
    let bins = radial_bins(rho, spec.radial_bins);

    let mut points = Vec::new();
    let mut weights = Vec::new();
    match n {
        2 => {
            // Full circle, uniform angular weight.
            let np = spec.polar_nodes.max(2);
            for &(r, mass) in &bins {
                let w = mass / np as f64;
                for j in 0..np {
                    let theta = (j as f64 + 0.5) * 2.0 * std::f64::consts::PI / np as f64;
                    let dir: Vec<f64> = frame[0]
                        .iter()
                        .zip(&frame[1])
                        .map(|(&a, &o)| theta.cos() * a + theta.sin() * o)
                        .collect();
                    let p = center.exp_map(&dir, r)?;
                    points.push(p.coords().to_vec());
                    weights.push(w);
                }
            }
        }
        3 => {
            // Equal-mass polar bins (uniform in cos alpha) times a uniform
            // azimuth fan.
            let np = spec.polar_nodes.max(2);
            let na = spec.azimuth_nodes.max(2);
            for &(r, mass) in &bins {
                let w = mass / (np * na) as f64;
                for j in 0..np {
                    let cos_a = 1.0 - (2.0 * j as f64 + 1.0) / np as f64;
                    let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
                    for k in 0..na {
                        let beta = (k as f64 + 0.5) * 2.0 * std::f64::consts::PI / na as f64;
                        let dir: Vec<f64> = (0..4)
                            .map(|c| {
                                cos_a * frame[0][c]
                                    + sin_a * (beta.cos() * frame[1][c] + beta.sin() * frame[2][c])
                            })
                            .collect();
                        let p = center.exp_map(&dir, r)?;
                        points.push(p.coords().to_vec());
                        weights.push(w);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    DiscreteMeasure::new(points, weights)
}

/// Squared geodesic distances between two clouds of hyperboloid points.
pub fn hyperbolic_cost_matrix(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    manifold: ModelManifold,
) -> Result<Array2<f64>, TransportError> {
    let k = manifold.curvature();
    if k <= 0.0 {
        return Err(TransportError::InvalidParameter(
            "hyperbolic cost matrix requires K > 0",
        ));
    }
    let sqrt_k = k.sqrt();
    let mut cost = Array2::zeros((mu.len(), nu.len()));
    for (i, p) in mu.points().iter().enumerate() {
        for (j, q) in nu.points().iter().enumerate() {
            let c = -k * crate::geometry::minkowski(p, q);
            let d = if c <= 1.0 { 0.0 } else { c.acosh() / sqrt_k };
            cost[[i, j]] = d * d;
        }
    }
    Ok(cost)
}
