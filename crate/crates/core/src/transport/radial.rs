//! Quantile coupling for co-centered radial measures.
//!
//! Two radial measures about the same center couple optimally by monotone
//! rearrangement of the radius: projecting to the radial coordinate is
//! 1-Lipschitz (so no plan does better) and the monotone radial plan
//! achieves the projected cost (so no plan does worse).

use std::sync::Arc;

use super::{check_equal_masses, TransportError};
use crate::solver::DensityField;

/// Squared-distance cost of the monotone (quantile) coupling between two
/// atom lists `(position, mass)`. Atoms must be sorted by position.
pub fn quantile_coupling_cost(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut cost = 0.0;
    let mut ia = 0;
    let mut ib = 0;
    let mut rem_a = a.first().map_or(0.0, |x| x.1);
    let mut rem_b = b.first().map_or(0.0, |x| x.1);
    while ia < a.len() && ib < b.len() {
        let w = rem_a.min(rem_b);
        let d = a[ia].0 - b[ib].0;
        cost += w * d * d;
        rem_a -= w;
        rem_b -= w;
        if rem_a <= 0.0 {
            ia += 1;
            if ia < a.len() {
                rem_a = a[ia].1;
            }
        }
        if rem_b <= 0.0 {
            ib += 1;
            if ib < b.len() {
                rem_b = b[ib].1;
            }
        }
    }
    cost
}

fn atoms(field: &DensityField) -> Vec<(f64, f64)> {
    field
        .values()
        .iter()
        .zip(field.grid().centers())
        .zip(field.grid().volumes())
        .filter(|((&v, _), _)| v > 0.0)
        .map(|((&v, &r), &vol)| (r, v * vol))
        .collect()
}

/// 2-Wasserstein distance between two co-centered radial densities on the
/// same grid, by quantile matching of the volume-weighted radial
/// distribution functions.
pub fn w2_same_center_radial(a: &DensityField, b: &DensityField) -> Result<f64, TransportError> {
    if !Arc::ptr_eq(a.grid(), b.grid()) {
        return Err(TransportError::InvalidParameter(
            "co-centered coupling requires the same grid",
        ));
    }
    check_equal_masses(a.mass(), b.mass())?;
    Ok(quantile_coupling_cost(&atoms(a), &atoms(b)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::super::{exact_ot, DiscreteMeasure};
    use super::*;
    use crate::geometry::ModelManifold;
    use crate::solver::{DensityField, RadialGrid};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_fields_have_zero_distance() {
        let grid = RadialGrid::new(ModelManifold::euclidean(2).unwrap(), 1.0, 32).unwrap();
        let rho = DensityField::new(grid, vec![0.5; 32], 0.0).unwrap();
        assert_eq!(w2_same_center_radial(&rho, &rho).unwrap(), 0.0);
    }

    #[test]
    fn uniform_densities_match_analytic_integral() {
        // Unit-mass uniform distributions on [0, 1] and [0, 2] along a line:
        // quantile maps q and 2q, so the squared cost is int_0^1 q^2 dq = 1/3.
        let n = 4000;
        let a: Vec<(f64, f64)> = (0..n)
            .map(|i| ((i as f64 + 0.5) / n as f64, 1.0 / n as f64))
            .collect();
        let b: Vec<(f64, f64)> = (0..n)
            .map(|i| (2.0 * (i as f64 + 0.5) / n as f64, 1.0 / n as f64))
            .collect();
        let cost = quantile_coupling_cost(&a, &b);
        assert_abs_diff_eq!(cost, 1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn matches_exact_ot_on_cocentered_instances() {
        let grid = RadialGrid::new(ModelManifold::euclidean(2).unwrap(), 1.0, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let va: Vec<f64> = (0..32).map(|_| rng.gen::<f64>()).collect();
            let vb: Vec<f64> = (0..32).map(|_| rng.gen::<f64>()).collect();
            let a = DensityField::new(grid.clone(), va, 0.0).unwrap();
            let b_raw = DensityField::new(grid.clone(), vb, 0.0).unwrap();
            let b = b_raw.normalized_to_mass(a.mass());
            let quantile = w2_same_center_radial(&a, &b).unwrap();

            let atoms_a = atoms(&a);
            let atoms_b = atoms(&b);
            let mu = DiscreteMeasure::new(
                atoms_a.iter().map(|&(r, _)| vec![r]).collect(),
                atoms_a.iter().map(|&(_, m)| m).collect(),
            )
            .unwrap();
            let nu = DiscreteMeasure::new(
                atoms_b.iter().map(|&(r, _)| vec![r]).collect(),
                atoms_b.iter().map(|&(_, m)| m).collect(),
            )
            .unwrap();
            let cost = Array2::from_shape_fn((mu.len(), nu.len()), |(i, j)| {
                (mu.points()[i][0] - nu.points()[j][0]).powi(2)
            });
            let exact = exact_ot(&mu, &nu, &cost).unwrap().cost().sqrt();
            assert_relative_eq!(quantile, exact, epsilon = 1e-6);
        }
    }

    #[test]
    fn mass_mismatch_rejected() {
        let grid = RadialGrid::new(ModelManifold::euclidean(2).unwrap(), 1.0, 16).unwrap();
        let a = DensityField::new(grid.clone(), vec![1.0; 16], 0.0).unwrap();
        let b = DensityField::new(grid, vec![2.0; 16], 0.0).unwrap();
        assert!(matches!(
            w2_same_center_radial(&a, &b),
            Err(TransportError::MassMismatch(_, _))
        ));
    }
}
