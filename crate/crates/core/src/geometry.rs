//! Rotationally symmetric model-manifold geometry.
//!
//! A [`ModelManifold`] is the warped product `dr^2 + psi(r)^2 dtheta^2` with
//! `psi(r) = sinh(sqrt(K) r)/sqrt(K)` for curvature parameter `K > 0`
//! (sectional curvature `-K`) and `psi(r) = r` in the Euclidean case `K = 0`.
//!
//! Points of the hyperbolic case live in the hyperboloid (Minkowski) model:
//! `(n+1)`-vectors with signature `(n, 1)` satisfying `<p, p> = -1/K` on the
//! upper sheet. Distances, geodesics, the exponential map, parallel transport
//! and signed distances to totally geodesic hypersurfaces all have closed
//! forms there; after every arithmetic operation points are renormalized back
//! to the sheet (drift tolerance 1e-10).

use thiserror::Error;

use crate::numerics::integrate;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("curvature parameter must be nonnegative and finite, got {0}")]
    InvalidCurvature(f64),
    #[error("radius must be nonnegative, got {0}")]
    NegativeRadius(f64),
    #[error("radial Laplacian coefficient is singular at r = 0")]
    OriginSingularity,
    #[error("hyperboloid points require K > 0, got K = {0}")]
    NotHyperbolic(f64),
    #[error("points belong to different manifolds")]
    ManifoldMismatch,
    #[error("Minkowski product drifted off the sheet by {0:e}")]
    OffSheet(f64),
    #[error("vector is not a unit tangent at the base point (defect {0:e})")]
    NotTangent(f64),
    #[error("bisector is undefined for coincident points")]
    CoincidentPoints,
    #[error("distance argument below the arccosh domain by {0:e}")]
    DistanceDomain(f64),
}

/// Renormalization tolerance for hyperboloid points.
const SHEET_TOL: f64 = 1e-10;

/// Rotationally symmetric model manifold of dimension `n >= 2` with
/// sectional curvature `-K`, `K >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelManifold {
    n: usize,
    k: f64,
}

impl ModelManifold {
    pub fn new(n: usize, k: f64) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        if !(k.is_finite() && k >= 0.0) {
            return Err(GeometryError::InvalidCurvature(k));
        }
        Ok(Self { n, k })
    }

    pub fn euclidean(n: usize) -> Result<Self, GeometryError> {
        Self::new(n, 0.0)
    }

    pub fn hyperbolic(n: usize, k: f64) -> Result<Self, GeometryError> {
        if !(k > 0.0) {
            return Err(GeometryError::NotHyperbolic(k));
        }
        Self::new(n, k)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn curvature(&self) -> f64 {
        self.k
    }

    /// Lower bound constant for the Ricci curvature: `Ric >= -(n-1) K`.
    #[inline]
    pub fn ricci_lower_constant(&self) -> f64 {
        (self.n as f64 - 1.0) * self.k
    }

    /// Area of the unit `(n-1)`-sphere.
    pub fn sphere_area(&self) -> f64 {
        unit_sphere_area(self.n - 1)
    }

    /// Warping function `psi(r)`: `sinh(sqrt(K) r)/sqrt(K)` or `r` at `K = 0`.
    pub fn warping(&self, r: f64) -> Result<f64, GeometryError> {
        if !(r >= 0.0) {
            return Err(GeometryError::NegativeRadius(r));
        }
        if self.k == 0.0 {
            Ok(r)
        } else {
            let s = self.k.sqrt();
            Ok((s * r).sinh() / s)
        }
    }

    /// `psi'(r)`.
    pub fn warping_deriv(&self, r: f64) -> f64 {
        if self.k == 0.0 {
            1.0
        } else {
            (self.k.sqrt() * r).cosh()
        }
    }

    /// Coefficient of the first-order term of the Laplacian acting on radial
    /// functions: `(n-1) psi'(r)/psi(r)`.
    pub fn radial_laplacian_coefficient(&self, r: f64) -> Result<f64, GeometryError> {
        if !(r > 0.0) {
            return if r == 0.0 {
                Err(GeometryError::OriginSingularity)
            } else {
                Err(GeometryError::NegativeRadius(r))
            };
        }
        let nm1 = self.n as f64 - 1.0;
        if self.k == 0.0 {
            Ok(nm1 / r)
        } else {
            let s = self.k.sqrt();
            Ok(nm1 * s / (s * r).tanh())
        }
    }

    /// Volume of the geodesic ball of radius `r`. Closed forms for `K = 0`
    /// (any dimension) and `K > 0` with `n` in {2, 3}; quadrature otherwise.
    pub fn ball_volume(&self, r: f64) -> Result<f64, GeometryError> {
        if !(r >= 0.0) {
            return Err(GeometryError::NegativeRadius(r));
        }
        let area = self.sphere_area();
        if self.k == 0.0 {
            return Ok(area * r.powi(self.n as i32) / self.n as f64);
        }
        let s = self.k.sqrt();
        match self.n {
            2 => Ok(area * ((s * r).cosh() - 1.0) / self.k),
            3 => Ok(area * ((2.0 * s * r).sinh() / (4.0 * s) - r / 2.0) / self.k),
            _ => {
                let nm1 = (self.n - 1) as i32;
                Ok(area * integrate(|t| ((s * t).sinh() / s).powi(nm1), 0.0, r, 1e-13))
            }
        }
    }

    /// Base point of the hyperboloid model (requires `K > 0`).
    pub fn origin(&self) -> Result<HyperboloidPoint, GeometryError> {
        if self.k == 0.0 {
            return Err(GeometryError::NotHyperbolic(self.k));
        }
        let mut coords = vec![0.0; self.n + 1];
        coords[self.n] = 1.0 / self.k.sqrt();
        Ok(HyperboloidPoint {
            coords,
            manifold: *self,
        })
    }
}

/// `|S^d|`, the surface measure of the unit `d`-sphere, via the recurrence
/// `|S^d| = 2 pi |S^{d-2}| / (d - 1)` with `|S^0| = 2`, `|S^1| = 2 pi`.
pub fn unit_sphere_area(d: usize) -> f64 {
    let mut areas = vec![0.0; d.max(1) + 1];
    areas[0] = 2.0;
    areas[1] = 2.0 * std::f64::consts::PI;
    for i in 2..=d {
        areas[i] = 2.0 * std::f64::consts::PI * areas[i - 2] / (i as f64 - 1.0);
    }
    areas[d]
}

/// Minkowski product with signature `(n, 1)`: the last coordinate is
/// timelike.
pub fn minkowski(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() - 1;
    let mut acc = 0.0;
    for i in 0..n {
        acc += a[i] * b[i];
    }
    acc - a[n] * b[n]
}

/// Point on the upper sheet of the hyperboloid `<p, p> = -1/K`.
#[derive(Clone, Debug)]
pub struct HyperboloidPoint {
    coords: Vec<f64>,
    manifold: ModelManifold,
}

impl HyperboloidPoint {
    /// Wraps raw ambient coordinates, renormalizing onto the sheet.
    /// Fails if the self-product drifted further than 1e-10 from `-1/K`.
    pub fn from_coords(
        manifold: ModelManifold,
        coords: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        if manifold.curvature() <= 0.0 {
            return Err(GeometryError::NotHyperbolic(manifold.curvature()));
        }
        if coords.len() != manifold.dim() + 1 {
            return Err(GeometryError::ManifoldMismatch);
        }
        let mut p = Self { coords, manifold };
        p.renormalize()?;
        Ok(p)
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn manifold(&self) -> ModelManifold {
        self.manifold
    }

    fn k(&self) -> f64 {
        self.manifold.curvature()
    }

    /// Projects back onto the sheet; errors if the drift exceeds the
    /// tolerance (a sign of corrupted arithmetic rather than roundoff).
    /// The tolerance scales with the squared ambient norm, which is the
    /// condition number of the cancellation in the Minkowski product.
    fn renormalize(&mut self) -> Result<(), GeometryError> {
        let k = self.k();
        let q = minkowski(&self.coords, &self.coords);
        let drift = (q * k + 1.0).abs();
        let scale = 1.0f64.max(k * self.coords.iter().map(|c| c * c).sum::<f64>());
        if drift > SHEET_TOL * scale {
            return Err(GeometryError::OffSheet(drift));
        }
        if q >= 0.0 {
            return Err(GeometryError::OffSheet(drift));
        }
        let scale = 1.0 / (-k * q).sqrt();
        for c in &mut self.coords {
            *c *= scale;
        }
        let n = self.coords.len() - 1;
        if self.coords[n] <= 0.0 {
            return Err(GeometryError::OffSheet(self.coords[n]));
        }
        Ok(())
    }

    fn check_same_manifold(&self, other: &Self) -> Result<(), GeometryError> {
        if self.manifold != other.manifold {
            return Err(GeometryError::ManifoldMismatch);
        }
        Ok(())
    }

    /// Geodesic distance `arccosh(-K <p, q>)/sqrt(K)`. Arguments slightly
    /// below the arccosh domain are clamped when the deficit is within 1e-9.
    pub fn distance(&self, other: &Self) -> Result<f64, GeometryError> {
        self.check_same_manifold(other)?;
        let k = self.k();
        let c = -k * minkowski(&self.coords, &other.coords);
        if c < 1.0 {
            let deficit = 1.0 - c;
            if deficit < 1e-9 {
                return Ok(0.0);
            }
            return Err(GeometryError::DistanceDomain(deficit));
        }
        Ok(c.acosh() / k.sqrt())
    }

    /// Checks that `v` is a unit tangent vector at this point:
    /// `<p, v> = 0` and `<v, v> = 1` within 1e-8.
    pub fn check_unit_tangent(&self, v: &[f64]) -> Result<(), GeometryError> {
        if v.len() != self.coords.len() {
            return Err(GeometryError::ManifoldMismatch);
        }
        let ortho = minkowski(&self.coords, v).abs();
        if ortho > 1e-8 {
            return Err(GeometryError::NotTangent(ortho));
        }
        let norm_defect = (minkowski(v, v) - 1.0).abs();
        if norm_defect > 1e-8 {
            return Err(GeometryError::NotTangent(norm_defect));
        }
        Ok(())
    }

    /// Exponential map: the point at distance `r` along the unit tangent `v`.
    pub fn exp_map(&self, v: &[f64], r: f64) -> Result<Self, GeometryError> {
        if !(r >= 0.0) {
            return Err(GeometryError::NegativeRadius(r));
        }
        self.check_unit_tangent(v)?;
        let s = self.k().sqrt();
        let (ch, sh) = ((s * r).cosh(), (s * r).sinh());
        let coords = self
            .coords
            .iter()
            .zip(v)
            .map(|(&p, &vi)| ch * p + sh * vi / s)
            .collect();
        let mut out = Self {
            coords,
            manifold: self.manifold,
        };
        out.renormalize()?;
        Ok(out)
    }

    /// Unit tangent at `self` pointing toward `other` (the initial velocity
    /// of the connecting geodesic).
    pub fn direction_to(&self, other: &Self) -> Result<Vec<f64>, GeometryError> {
        self.check_same_manifold(other)?;
        let k = self.k();
        let ip = minkowski(&self.coords, &other.coords);
        // Component of `other` orthogonal to `self`.
        let mut v: Vec<f64> = other
            .coords
            .iter()
            .zip(&self.coords)
            .map(|(&q, &p)| q + k * ip * p)
            .collect();
        let norm2 = minkowski(&v, &v);
        if norm2 <= 0.0 || norm2.sqrt() < 1e-14 {
            return Err(GeometryError::CoincidentPoints);
        }
        let inv = 1.0 / norm2.sqrt();
        for c in &mut v {
            *c *= inv;
        }
        Ok(v)
    }

    /// Parallel transport of the tangent vector `w` at `self` along the
    /// geodesic to `other`.
    pub fn parallel_transport(&self, other: &Self, w: &[f64]) -> Result<Vec<f64>, GeometryError> {
        self.check_same_manifold(other)?;
        if w.len() != self.coords.len() {
            return Err(GeometryError::ManifoldMismatch);
        }
        let k = self.k();
        let yw = minkowski(&other.coords, w);
        let xy = minkowski(&self.coords, &other.coords);
        let denom = xy - 1.0 / k;
        if denom.abs() < 1e-300 {
            return Err(GeometryError::CoincidentPoints);
        }
        let alpha = -yw / denom;
        Ok(w
            .iter()
            .zip(self.coords.iter().zip(&other.coords))
            .map(|(&wi, (&xi, &yi))| wi + alpha * (xi + yi))
            .collect())
    }

    /// An orthonormal tangent basis at this point whose first vector is the
    /// given unit tangent `first`. Gram-Schmidt in the ambient Minkowski
    /// space; the induced metric on the tangent space is positive definite.
    pub fn tangent_basis(&self, first: &[f64]) -> Result<Vec<Vec<f64>>, GeometryError> {
        self.check_unit_tangent(first)?;
        let dim = self.manifold.dim();
        let amb = dim + 1;
        let k = self.k();
        let mut basis: Vec<Vec<f64>> = vec![first.to_vec()];
        for axis in 0..amb {
            if basis.len() == dim {
                break;
            }
            let mut cand = vec![0.0; amb];
            cand[axis] = 1.0;
            // Project out the point direction (timelike) and previous basis vectors.
            let cp = minkowski(&cand, &self.coords);
            for (ci, &pi) in cand.iter_mut().zip(&self.coords) {
                *ci += k * cp * pi;
            }
            for b in &basis {
                let cb = minkowski(&cand, b);
                for (ci, &bi) in cand.iter_mut().zip(b) {
                    *ci -= cb * bi;
                }
            }
            let norm2 = minkowski(&cand, &cand);
            if norm2 > 1e-12 {
                let inv = 1.0 / norm2.sqrt();
                for c in &mut cand {
                    *c *= inv;
                }
                basis.push(cand);
            }
        }
        if basis.len() != dim {
            return Err(GeometryError::NotTangent(0.0));
        }
        Ok(basis)
    }
}

/// Signed distance from `z` to the equidistant hypersurface of `x` and `y`:
/// positive on the `y`-side, negative on the `x`-side, zero on the surface.
///
/// The surface is the intersection of the sheet with the Minkowski
/// hyperplane orthogonal to `y - x`; with `u` its unit spacelike normal the
/// signed distance is `arcsinh(sqrt(K) <z, u>)/sqrt(K)`. The function is
/// 1-Lipschitz, odd under swapping `x` and `y`, and takes the values
/// `+-d(x,y)/2` at the two centers.
pub fn signed_distance_to_bisector(
    z: &HyperboloidPoint,
    x: &HyperboloidPoint,
    y: &HyperboloidPoint,
) -> Result<f64, GeometryError> {
    z.check_same_manifold(x)?;
    z.check_same_manifold(y)?;
    let k = z.manifold().curvature();
    let diff: Vec<f64> = y
        .coords()
        .iter()
        .zip(x.coords())
        .map(|(&a, &b)| a - b)
        .collect();
    let norm2 = minkowski(&diff, &diff);
    if norm2 <= 1e-28 {
        return Err(GeometryError::CoincidentPoints);
    }
    let zu = minkowski(z.coords(), &diff) / norm2.sqrt();
    let s = k.sqrt();
    Ok((s * zu).asinh() / s)
}

/// Distance expansion data for a point transverse to a geodesic hypersurface.
#[derive(Clone, Copy, Debug)]
pub struct OllivierExpansion {
    /// `d(exp_y(r w'), E)` where `E` is the hypersurface through `x`
    /// orthogonal to `v` and `w'` is `w` parallel-transported to
    /// `y = exp_x(delta v)`.
    pub exact: f64,
    /// Second-order model `delta (1 + K r^2 / 2)`.
    pub expansion: f64,
}

/// Evaluates the exact transverse distance together with its second-order
/// expansion. `v` and `w` must be orthogonal unit tangents at `x`.
///
/// The hypersurface through `x` orthogonal to `v` coincides with the
/// equidistant hypersurface of the pair `exp_x(-delta v)`, `exp_x(delta v)`,
/// which makes the signed-distance closed form applicable.
pub fn ollivier_expansion_check(
    x: &HyperboloidPoint,
    v: &[f64],
    w: &[f64],
    delta: f64,
    r: f64,
) -> Result<OllivierExpansion, GeometryError> {
    if !(delta > 0.0) || !(r >= 0.0) {
        return Err(GeometryError::NegativeRadius(delta.min(r)));
    }
    x.check_unit_tangent(v)?;
    x.check_unit_tangent(w)?;
    let cross = minkowski(v, w).abs();
    if cross > 1e-8 {
        return Err(GeometryError::NotTangent(cross));
    }
    let y = x.exp_map(v, delta)?;
    let neg_v: Vec<f64> = v.iter().map(|c| -c).collect();
    let x_minus = x.exp_map(&neg_v, delta)?;
    let w_t = x.parallel_transport(&y, w)?;
    let z = y.exp_map(&w_t, r)?;
    let exact = signed_distance_to_bisector(&z, &x_minus, &y)?;
    let k = x.manifold().curvature();
    Ok(OllivierExpansion {
        exact,
        expansion: delta * (1.0 + 0.5 * k * r * r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h2() -> ModelManifold {
        ModelManifold::hyperbolic(2, 1.0).unwrap()
    }

    fn h3() -> ModelManifold {
        ModelManifold::hyperbolic(3, 1.0).unwrap()
    }

    /// Taylor-series sinh oracle, independent of f64::sinh.
    fn sinh_series(x: f64) -> f64 {
        let mut term = x;
        let mut acc = x;
        for k in 1..40 {
            term *= x * x / ((2 * k) as f64 * (2 * k + 1) as f64);
            acc += term;
        }
        acc
    }

    fn random_point(m: ModelManifold, rng: &mut ChaCha8Rng, scale: f64) -> HyperboloidPoint {
        let o = m.origin().unwrap();
        let dir = random_unit_tangent(&o, rng);
        o.exp_map(&dir, rng.gen::<f64>() * scale).unwrap()
    }

    fn random_unit_tangent(p: &HyperboloidPoint, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let amb = p.coords().len();
        loop {
            let raw: Vec<f64> = (0..amb).map(|_| rng.gen::<f64>() - 0.5).collect();
            // Project onto the tangent space and normalize.
            let k = p.manifold().curvature();
            let ip = minkowski(&raw, p.coords());
            let mut v: Vec<f64> = raw
                .iter()
                .zip(p.coords())
                .map(|(&r, &pc)| r + k * ip * pc)
                .collect();
            let n2 = minkowski(&v, &v);
            if n2 > 1e-6 {
                let inv = 1.0 / n2.sqrt();
                v.iter_mut().for_each(|c| *c *= inv);
                return v;
            }
        }
    }

    #[test]
    fn warping_euclidean_is_identity() {
        let m = ModelManifold::euclidean(3).unwrap();
        assert_eq!(m.warping(2.0).unwrap(), 2.0);
    }

    #[test]
    fn warping_limits_at_origin() {
        for k in [0.0, 0.5, 1.0, 4.0] {
            let m = ModelManifold::new(2, k).unwrap();
            assert_abs_diff_eq!(m.warping(0.0).unwrap(), 0.0, epsilon = 1e-12);
            let h = 1e-7;
            let deriv0 = m.warping(h).unwrap() / h;
            assert_abs_diff_eq!(deriv0, 1.0, epsilon = 1e-12);
            assert!(m.warping(0.3).unwrap() > 0.0);
        }
    }

    #[test]
    fn warping_matches_series_oracle() {
        let m = h2();
        assert_abs_diff_eq!(m.warping(1.0).unwrap(), sinh_series(1.0), epsilon = 1e-12);
        let m4 = ModelManifold::hyperbolic(3, 4.0).unwrap();
        assert_abs_diff_eq!(
            m4.warping(0.7).unwrap(),
            sinh_series(2.0 * 0.7) / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn warping_rejects_negative_radius() {
        assert!(h2().warping(-1.0).is_err());
    }

    #[test]
    fn laplacian_coefficient_cases() {
        let e3 = ModelManifold::euclidean(3).unwrap();
        assert_relative_eq!(
            e3.radial_laplacian_coefficient(2.0).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        // coth -> 1 at infinity.
        let m = h2();
        assert_relative_eq!(
            m.radial_laplacian_coefficient(40.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        // (n-1) coth(1) via the series oracle for cosh/sinh.
        let m3 = h3();
        let coth1 = (1.0 + sinh_series(1.0).powi(2)).sqrt() / sinh_series(1.0);
        assert_relative_eq!(
            m3.radial_laplacian_coefficient(1.0).unwrap(),
            2.0 * coth1,
            epsilon = 1e-12
        );
        assert!(m3.radial_laplacian_coefficient(0.0).is_err());
    }

    #[test]
    fn sphere_areas_match_closed_forms() {
        use std::f64::consts::PI;
        assert_relative_eq!(ModelManifold::euclidean(2).unwrap().sphere_area(), 2.0 * PI);
        assert_relative_eq!(ModelManifold::euclidean(3).unwrap().sphere_area(), 4.0 * PI);
        assert_relative_eq!(
            ModelManifold::euclidean(4).unwrap().sphere_area(),
            2.0 * PI * PI
        );
        assert_relative_eq!(
            ModelManifold::euclidean(5).unwrap().sphere_area(),
            8.0 * PI * PI / 3.0
        );
    }

    #[test]
    fn distance_identity_and_closed_form() {
        let m = h2();
        let p = m.origin().unwrap();
        assert_eq!(p.distance(&p).unwrap(), 0.0);
        let q = HyperboloidPoint::from_coords(m, vec![1.0f64.sinh(), 0.0, 1.0f64.cosh()]).unwrap();
        assert_relative_eq!(p.distance(&q).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exp_map_closed_form_and_roundtrip() {
        let m = h2();
        let p = m.origin().unwrap();
        let v = vec![1.0, 0.0, 0.0];
        let q = p.exp_map(&v, 0.0).unwrap();
        assert_abs_diff_eq!(p.distance(&q).unwrap(), 0.0, epsilon = 1e-12);
        let q = p.exp_map(&v, 1.0).unwrap();
        assert_relative_eq!(q.coords()[0], 1.0f64.sinh(), epsilon = 1e-14);
        assert_relative_eq!(q.coords()[2], 1.0f64.cosh(), epsilon = 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = random_point(h3(), &mut rng, 2.0);
            let v = random_unit_tangent(&p, &mut rng);
            let r = rng.gen::<f64>() * 5.0;
            let q = p.exp_map(&v, r).unwrap();
            // On-sheet invariant.
            let k = q.manifold().curvature();
            assert_abs_diff_eq!(
                minkowski(q.coords(), q.coords()) * k + 1.0,
                0.0,
                epsilon = 1e-10
            );
            assert_abs_diff_eq!(p.distance(&q).unwrap(), r, epsilon = 1e-9);
        }
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let (a, b, c) = (
                random_point(h2(), &mut rng, 3.0),
                random_point(h2(), &mut rng, 3.0),
                random_point(h2(), &mut rng, 3.0),
            );
            let dab = a.distance(&b).unwrap();
            let dbc = b.distance(&c).unwrap();
            let dac = a.distance(&c).unwrap();
            assert!(dac <= dab + dbc + 1e-10);
        }
    }

    #[test]
    fn parallel_transport_preserves_norm_and_tangency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = random_point(h3(), &mut rng, 1.5);
            let q = random_point(h3(), &mut rng, 1.5);
            let w = random_unit_tangent(&p, &mut rng);
            let wt = p.parallel_transport(&q, &w).unwrap();
            assert_abs_diff_eq!(minkowski(q.coords(), &wt), 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(minkowski(&wt, &wt), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn bisector_midpoint_symmetry() {
        let m = h2();
        let o = m.origin().unwrap();
        let v = vec![1.0, 0.0, 0.0];
        let x = o.exp_map(&v, 0.25).unwrap();
        let y = o
            .exp_map(&v.iter().map(|c| -c).collect::<Vec<_>>(), 0.35)
            .unwrap();
        let delta = x.distance(&y).unwrap();
        assert_relative_eq!(
            signed_distance_to_bisector(&y, &x, &y).unwrap(),
            0.5 * delta,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            signed_distance_to_bisector(&x, &x, &y).unwrap(),
            -0.5 * delta,
            epsilon = 1e-12
        );
        // Odd under swapping the two centers.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let z = random_point(m, &mut rng, 2.0);
            let g = signed_distance_to_bisector(&z, &x, &y).unwrap();
            let gs = signed_distance_to_bisector(&z, &y, &x).unwrap();
            assert_abs_diff_eq!(g + gs, 0.0, epsilon = 1e-12);
        }
        assert!(signed_distance_to_bisector(&o, &x, &x).is_err());
    }

    #[test]
    fn bisector_vanishes_on_surface_brute_force() {
        // Construct points of the equidistant surface through the midpoint and
        // verify both the closed form and a brute-force minimization agree.
        let m = h3();
        let o = m.origin().unwrap();
        let v = vec![1.0, 0.0, 0.0, 0.0];
        let x = o.exp_map(&v, 0.4).unwrap();
        let y = o
            .exp_map(&v.iter().map(|c| -c).collect::<Vec<_>>(), 0.4)
            .unwrap();
        // Midpoint is the origin; surface = exp of tangent vectors orthogonal to v.
        let basis = o.tangent_basis(&v).unwrap();
        for s in [-0.8f64, -0.3, 0.2, 0.9] {
            for t in [-0.5f64, 0.1, 0.7] {
                let norm = (s * s + t * t).sqrt();
                if norm < 1e-12 {
                    continue;
                }
                let dir: Vec<f64> = (0..4)
                    .map(|i| (s * basis[1][i] + t * basis[2][i]) / norm)
                    .collect();
                let z = o.exp_map(&dir, norm).unwrap();
                let g = signed_distance_to_bisector(&z, &x, &y).unwrap();
                assert_abs_diff_eq!(g, 0.0, epsilon = 1e-9);
            }
        }
        // Brute force: |g(z)| equals the minimum distance to a dense sample of
        // the surface, for a point off the surface.
        let z = x.exp_map(&x.direction_to(&y).unwrap(), 0.13).unwrap();
        let g = signed_distance_to_bisector(&z, &x, &y).unwrap();
        let mut best = f64::INFINITY;
        let steps = 60;
        for i in 0..=steps {
            for j in 0..=steps {
                let s = -1.5 + 3.0 * i as f64 / steps as f64;
                let t = -1.5 + 3.0 * j as f64 / steps as f64;
                let norm = (s * s + t * t).sqrt();
                if norm < 1e-9 {
                    best = best.min(z.distance(&o).unwrap());
                    continue;
                }
                let dir: Vec<f64> = (0..4)
                    .map(|i| (s * basis[1][i] + t * basis[2][i]) / norm)
                    .collect();
                let e = o.exp_map(&dir, norm).unwrap();
                best = best.min(z.distance(&e).unwrap());
            }
        }
        assert_abs_diff_eq!(g.abs(), best, epsilon = 2e-4);
    }

    #[test]
    fn bisector_is_one_lipschitz() {
        let m = h2();
        let o = m.origin().unwrap();
        let v = vec![1.0, 0.0, 0.0];
        let x = o.exp_map(&v, 0.3).unwrap();
        let y = o.exp_map(&vec![-1.0, 0.0, 0.0], 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let z1 = random_point(m, &mut rng, 2.5);
            let z2 = random_point(m, &mut rng, 2.5);
            let g1 = signed_distance_to_bisector(&z1, &x, &y).unwrap();
            let g2 = signed_distance_to_bisector(&z2, &x, &y).unwrap();
            assert!((g1 - g2).abs() <= z1.distance(&z2).unwrap() + 1e-10);
        }
    }

    #[test]
    fn ollivier_exact_at_zero_offset() {
        let m = h2();
        let x = m.origin().unwrap();
        let v = vec![1.0, 0.0, 0.0];
        let w = vec![0.0, 1.0, 0.0];
        let out = ollivier_expansion_check(&x, &v, &w, 0.01, 0.0).unwrap();
        assert_abs_diff_eq!(out.exact, 0.01, epsilon = 1e-13);
        assert_abs_diff_eq!(out.expansion, 0.01, epsilon = 1e-15);
    }

    #[test]
    fn ollivier_euclidean_analog_is_flat() {
        // Flat oracle: in R^n the hypersurface is affine and the transverse
        // distance is exactly delta for every r.
        let delta = 0.01;
        for r in [0.0, 0.005, 0.02, 0.3] {
            let z = (delta, r);
            let exact_flat = z.0; // distance from (delta, r) to {x = 0}
            assert_abs_diff_eq!(exact_flat, delta, epsilon = 1e-16);
        }
    }

    #[test]
    fn ollivier_residual_is_higher_order() {
        let m = h2();
        let x = m.origin().unwrap();
        let v = vec![1.0, 0.0, 0.0];
        let w = vec![0.0, 1.0, 0.0];
        let delta = 1e-3;
        let mut cs = Vec::new();
        for r in [1e-3, 2e-3, 4e-3, 8e-3] {
            let out = ollivier_expansion_check(&x, &v, &w, delta, r).unwrap();
            let resid = (out.exact - out.expansion).abs();
            cs.push(resid / (r.powi(3) + delta * r * r));
        }
        // The fitted constant stays bounded over the mesh.
        let cmax = cs.iter().cloned().fold(0.0, f64::max);
        assert!(cmax < 1.0, "residual constant too large: {cmax}");
    }
}
