//! Gamma-calculus on the radial grid and the Hamiltonian (weighted
//! Dirichlet) energy diagnostics.
//!
//! Two discrete Laplacians coexist on purpose. The divergence-form operator
//! [`fv_laplacian`] matches the finite-volume solver stencil: it is
//! self-adjoint in the volume-weighted inner product and annihilates
//! constants, which makes the forward linearized flow exactly conservative
//! and the forward/backward pairing exactly constant in time. The
//! coefficient-form operator used by [`gamma2`] applies
//! `f'' + (n-1) (psi'/psi) f'` with centered differences, which is the right
//! shape for pointwise curvature identities.
//!
//! The energy `E_rho[f] = sum Gamma(f) rho V` decays along the coupled
//! nonlinear/adjoint flow no faster than an explicit exponential envelope;
//! [`hamiltonian_decay_check`] measures both the stepwise differential
//! inequality and the integrated envelope.

use std::sync::Arc;

use thiserror::Error;

use crate::nonlinearity::RegularizedNonlinearity;
use crate::numerics::solve_tridiagonal;
use crate::solver::{DensityField, RadialGrid, SolverError, Trajectory};

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("time grid must be strictly increasing with at least two entries")]
    BadTimeGrid,
    #[error("linear solve failed at t = {0}")]
    LinearSolve(f64),
    #[error("grid too coarse for second-order interior stencils")]
    TooCoarse,
}

/// Interior margin (in cells) on which second-order stencils of [`gamma2`]
/// are trustworthy.
pub const GAMMA2_MARGIN: usize = 2;

/// Scalar field on the radial grid evolved by the backward adjoint flow.
#[derive(Clone, Debug)]
pub struct PotentialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    time: f64,
}

impl PotentialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, time: f64) -> Self {
        assert_eq!(values.len(), grid.cells());
        Self { grid, values, time }
    }

    /// Builds the field from a radial profile.
    pub fn from_profile(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64, time: f64) -> Self {
        let values = grid.centers().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, time)
    }

    #[inline]
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Scalar field evolved by the forward linearized flow; its volume-weighted
/// integral is a conserved quantity.
#[derive(Clone, Debug)]
pub struct LinearizedField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    time: f64,
}

impl LinearizedField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, time: f64) -> Self {
        assert_eq!(values.len(), grid.cells());
        Self { grid, values, time }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    /// `sum w_i V_i`, conserved along the forward linearized flow.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.volumes())
            .map(|(&w, &v)| w * v)
            .sum()
    }
}

/// Centered first derivative at cell centers, one-sided at the two ends.
fn radial_derivative(values: &[f64], dr: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    out[0] = (values[1] - values[0]) / dr;
    out[n - 1] = (values[n - 1] - values[n - 2]) / dr;
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dr);
    }
    out
}

/// `Gamma(f) = |f'|^2` with centered differences.
pub fn carre_du_champ(f: &PotentialField) -> Vec<f64> {
    radial_derivative(f.values(), f.grid().dr())
        .into_iter()
        .map(|d| d * d)
        .collect()
}

/// Coefficient-form radial Laplacian `f'' + (n-1)(psi'/psi) f'` with
/// centered differences; end cells carry one-sided stencils.
fn laplacian_coefficient_form(f: &PotentialField) -> Vec<f64> {
    let grid = f.grid();
    let dr = grid.dr();
    let vals = f.values();
    let n = vals.len();
    let manifold = grid.manifold();
    let first = radial_derivative(vals, dr);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let second = if i == 0 {
            (vals[2] - 2.0 * vals[1] + vals[0]) / (dr * dr)
        } else if i == n - 1 {
            (vals[n - 1] - 2.0 * vals[n - 2] + vals[n - 3]) / (dr * dr)
        } else {
            (vals[i + 1] - 2.0 * vals[i] + vals[i - 1]) / (dr * dr)
        };
        // Cell centers never sit at r = 0, so the coefficient is regular.
        let coeff = manifold
            .radial_laplacian_coefficient(grid.centers()[i])
            .expect("cell centers are positive");
        out[i] = second + coeff * first[i];
    }
    out
}

/// Discrete iterated operator `Gamma_2(f) = Lap Gamma(f)/2 - f' (Lap f)'`.
/// Only entries with index in `[GAMMA2_MARGIN, cells - 1 - GAMMA2_MARGIN]`
/// are second-order accurate; the margin cells are extrapolation noise.
pub fn gamma2(f: &PotentialField) -> Result<Vec<f64>, HamiltonianError> {
    let grid = f.grid();
    if grid.cells() < 2 * GAMMA2_MARGIN + 3 {
        return Err(HamiltonianError::TooCoarse);
    }
    let dr = grid.dr();
    let gamma = carre_du_champ(f);
    let gamma_field = PotentialField::new(grid.clone(), gamma, f.time());
    let lap_gamma = laplacian_coefficient_form(&gamma_field);
    let lap_f = laplacian_coefficient_form(f);
    let dlap = radial_derivative(&lap_f, dr);
    let df = radial_derivative(f.values(), dr);
    Ok((0..grid.cells())
        .map(|i| 0.5 * lap_gamma[i] - df[i] * dlap[i])
        .collect())
}

/// Minimal curvature-dimension defect
/// `min_i Gamma_2(f) - lambda Gamma(f) - (Lap f)^2 / n` over the trustworthy
/// interior. With `lambda = -(n-1) K` the minimum is bounded below by a
/// grid-resolution term.
pub fn be_defect(f: &PotentialField, lambda: f64, n: usize) -> Result<f64, HamiltonianError> {
    let g2 = gamma2(f)?;
    let gamma = carre_du_champ(f);
    let lap = laplacian_coefficient_form(f);
    let cells = f.grid().cells();
    let mut min_defect = f64::INFINITY;
    for i in GAMMA2_MARGIN..cells - GAMMA2_MARGIN {
        let defect = g2[i] - lambda * gamma[i] - lap[i] * lap[i] / n as f64;
        min_defect = min_defect.min(defect);
    }
    Ok(min_defect)
}

/// Divergence-form Laplacian matching the solver stencil:
/// `(Lap u)_i = [a_{i+1/2} (u_{i+1} - u_i) - a_{i-1/2} (u_i - u_{i-1})] / (V_i dr)`
/// with zero-flux ends. Self-adjoint in the volume-weighted inner product.
pub fn fv_laplacian(grid: &RadialGrid, values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let dr = grid.dr();
    let cond = grid.face_conductances();
    let vols = grid.volumes();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let hi = if i + 1 < n {
            cond[i + 1] * (values[i + 1] - values[i]) / dr
        } else {
            0.0
        };
        let lo = if i > 0 {
            cond[i] * (values[i] - values[i - 1]) / dr
        } else {
            0.0
        };
        out[i] = (hi - lo) / vols[i];
    }
    out
}

/// Hamiltonian energy `E_rho[phi] = sum Gamma(phi)_i rho_i V_i`.
pub fn hamiltonian_energy(rho: &DensityField, phi: &PotentialField) -> f64 {
    let gamma = carre_du_champ(phi);
    gamma
        .iter()
        .zip(rho.values())
        .zip(rho.grid().volumes())
        .map(|((&g, &r), &v)| g * r * v)
        .sum()
}

fn diffusivity_at(
    traj: &Trajectory,
    pe: &RegularizedNonlinearity,
    t: f64,
) -> Result<Vec<f64>, HamiltonianError> {
    let rho = traj.sample(t)?;
    Ok(rho.values().iter().map(|&r| pe.deriv(r)).collect())
}

fn check_time_grid(t_grid: &[f64]) -> Result<(), HamiltonianError> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HamiltonianError::BadTimeGrid);
    }
    Ok(())
}

/// Backward adjoint flow `d phi/dt = -P_eps'(rho) Lap phi` integrated from
/// the terminal state `phi_t` (given at `t_grid.last()`) down to
/// `t_grid[0]`. Each interval solves `(I - dt D Lap) phi_k = phi_{k+1}`
/// with the diffusivity `D` frozen at the interval's left endpoint, an
/// M-matrix system: the sup norm never grows, and the scheme is the exact
/// volume-weighted adjoint of the forward linearized step. Returned states
/// are ordered by increasing time.
pub fn backward_adjoint_solve(
    rho_traj: &Trajectory,
    pe: &RegularizedNonlinearity,
    phi_t: &PotentialField,
    t_grid: &[f64],
) -> Result<Vec<PotentialField>, HamiltonianError> {
    check_time_grid(t_grid)?;
    let grid = phi_t.grid().clone();
    let n = grid.cells();
    let dr = grid.dr();
    let cond = grid.face_conductances();
    let vols = grid.volumes();

    let mut out: Vec<PotentialField> = Vec::with_capacity(t_grid.len());
    let mut current = phi_t.values().to_vec();
    out.push(PotentialField::new(
        grid.clone(),
        current.clone(),
        *t_grid.last().unwrap(),
    ));
    for w in t_grid.windows(2).rev() {
        let (t_lo, t_hi) = (w[0], w[1]);
        let dt = t_hi - t_lo;
        let diff = diffusivity_at(rho_traj, pe, t_lo)?;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let a_hi = if i + 1 < n { cond[i + 1] } else { 0.0 };
            let a_lo = if i > 0 { cond[i] } else { 0.0 };
            let scale = dt * diff[i] / (vols[i] * dr);
            diag[i] = 1.0 + scale * (a_hi + a_lo);
            if i + 1 < n {
                upper[i] = -scale * a_hi;
            }
            if i > 0 {
                lower[i] = -scale * a_lo;
            }
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut current)
            .ok_or(HamiltonianError::LinearSolve(t_lo))?;
        out.push(PotentialField::new(grid.clone(), current.clone(), t_lo));
    }
    out.reverse();
    Ok(out)
}

/// Forward linearized flow `d w/dt = Lap [P_eps'(rho) w]` from `w0` at
/// `t_grid[0]`, implicit in time: `(I - dt Lap D) w_{k+1} = w_k` with the
/// diffusivity frozen at the interval's left endpoint. The divergence form
/// conserves `sum w_i V_i` exactly.
pub fn forward_linearized_solve(
    rho_traj: &Trajectory,
    pe: &RegularizedNonlinearity,
    w0: &LinearizedField,
    t_grid: &[f64],
) -> Result<Vec<LinearizedField>, HamiltonianError> {
    check_time_grid(t_grid)?;
    let grid = w0.grid().clone();
    let n = grid.cells();
    let dr = grid.dr();
    let cond = grid.face_conductances();
    let vols = grid.volumes();

    let mut out = Vec::with_capacity(t_grid.len());
    let mut current = w0.values().to_vec();
    out.push(LinearizedField::new(grid.clone(), current.clone(), t_grid[0]));
    for w in t_grid.windows(2) {
        let (t_lo, t_hi) = (w[0], w[1]);
        let dt = t_hi - t_lo;
        let diff = diffusivity_at(rho_traj, pe, t_lo)?;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 0..n {
            let a_hi = if i + 1 < n { cond[i + 1] } else { 0.0 };
            let a_lo = if i > 0 { cond[i] } else { 0.0 };
            let scale = dt / (vols[i] * dr);
            diag[i] = 1.0 + scale * (a_hi + a_lo) * diff[i];
            if i + 1 < n {
                upper[i] = -scale * a_hi * diff[i + 1];
            }
            if i > 0 {
                lower[i] = -scale * a_lo * diff[i - 1];
            }
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut current)
            .ok_or(HamiltonianError::LinearSolve(t_hi))?;
        out.push(LinearizedField::new(grid.clone(), current.clone(), t_hi));
    }
    Ok(out)
}

/// Volume-weighted pairing `sum w_i phi_i V_i`; constant in time when the
/// two fields solve the forward linearized and backward adjoint flows over
/// the same density trajectory and time grid.
pub fn duality_pairing(w: &LinearizedField, phi: &PotentialField) -> f64 {
    w.values()
        .iter()
        .zip(phi.values())
        .zip(w.grid().volumes())
        .map(|((&a, &b), &v)| a * b * v)
        .sum()
}

/// Smoothing envelope kernel `g_m(s) = (s^{-n/(2+n(m-1))} + 1)^{m-1}`.
pub fn g_m(s: f64, m: f64, n: usize) -> f64 {
    let nf = n as f64;
    (s.powf(-nf / (2.0 + nf * (m - 1.0))) + 1.0).powf(m - 1.0)
}

/// Structural constant `C^{m-1} 2^{m-2} [2 + n(m-1)]` entering both the
/// decay envelope and the stability factor.
pub fn c_frak_m(c_fit: f64, m: f64, n: usize) -> f64 {
    c_fit.powf(m - 1.0) * 2.0f64.powf(m - 2.0) * (2.0 + n as f64 * (m - 1.0))
}

/// Exponential envelope below which the Hamiltonian energy cannot fall:
/// `exp{-2 K c1 Cm [(t M^{m-1})^{2/(2+n(m-1))} v (t M^{m-1}) + eps t/(c1 Cm)]}`.
#[allow(clippy::too_many_arguments)]
pub fn decay_envelope(
    t: f64,
    mass: f64,
    m: f64,
    n: usize,
    ricci_k: f64,
    c1: f64,
    c_fit: f64,
    eps: f64,
) -> f64 {
    let nf = n as f64;
    let cm = c_frak_m(c_fit, m, n);
    let s = t * mass.powf(m - 1.0);
    let window = s.powf(2.0 / (2.0 + nf * (m - 1.0))).max(s);
    (-2.0 * ricci_k * c1 * cm * (window + eps * t / (c1 * cm))).exp()
}

/// Report of the Hamiltonian decay diagnostics along a coupled trajectory.
#[derive(Clone, Debug)]
pub struct DecayReport {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// Stepwise defect `(E_{k+1} - E_k)/(2 dt) + K int Gamma(phi_k) P_eps(rho_k)`;
    /// nonnegativity (up to `tolerance`) is the differential inequality.
    pub pointwise_defects: Vec<f64>,
    /// Discretization allowance `10 (dt + dr^2) max_t E`.
    pub tolerance: f64,
    pub pointwise_ok: bool,
    /// Envelope `decay_envelope(t - t0) * E(t0)` per time.
    pub envelope: Vec<f64>,
    pub integrated_ok: bool,
}

/// Measures the decay inequalities along matched density/potential states.
/// `rho_states` and `phi_states` must be aligned in time. `ricci_k` is the
/// Ricci lower-bound constant (`(n-1) K` on a model manifold of curvature
/// parameter `K`) and `c_fit` the fitted smoothing constant.
pub fn hamiltonian_decay_check(
    rho_states: &[DensityField],
    phi_states: &[PotentialField],
    pe: &RegularizedNonlinearity,
    ricci_k: f64,
    c_fit: f64,
) -> Result<DecayReport, HamiltonianError> {
    if rho_states.len() != phi_states.len() || rho_states.len() < 2 {
        return Err(HamiltonianError::BadTimeGrid);
    }
    let grid = rho_states[0].grid().clone();
    let n = grid.manifold().dim();
    let m = pe.base().exponent();
    let c1 = pe.base().c1();
    let mass = rho_states[0].mass();
    let t0 = rho_states[0].time();

    let times: Vec<f64> = rho_states.iter().map(|s| s.time()).collect();
    let energies: Vec<f64> = rho_states
        .iter()
        .zip(phi_states)
        .map(|(r, p)| hamiltonian_energy(r, p))
        .collect();
    let scale = energies.iter().cloned().fold(0.0, f64::max);
    let mut max_dt = 0.0f64;
    let mut defects = Vec::with_capacity(times.len() - 1);
    for k in 0..times.len() - 1 {
        let dt = times[k + 1] - times[k];
        if dt <= 0.0 {
            return Err(HamiltonianError::BadTimeGrid);
        }
        max_dt = max_dt.max(dt);
        let gamma = carre_du_champ(&phi_states[k]);
        let curvature_term: f64 = gamma
            .iter()
            .zip(rho_states[k].values())
            .zip(grid.volumes())
            .map(|((&g, &r), &v)| g * pe.value(r) * v)
            .sum();
        defects.push(0.5 * (energies[k + 1] - energies[k]) / dt + ricci_k * curvature_term);
    }
    let tolerance = 10.0 * (max_dt + grid.dr() * grid.dr()) * scale;
    let pointwise_ok = defects.iter().all(|&d| d >= -tolerance);

    let envelope: Vec<f64> = times
        .iter()
        .map(|&t| decay_envelope(t - t0, mass, m, n, ricci_k, c1, c_fit, pe.eps()) * energies[0])
        .collect();
    let integrated_ok = energies
        .iter()
        .zip(&envelope)
        .all(|(&e, &b)| e >= b * (1.0 - 1e-9));

    Ok(DecayReport {
        times,
        energies,
        pointwise_defects: defects,
        tolerance,
        pointwise_ok,
        envelope,
        integrated_ok,
    })
}
