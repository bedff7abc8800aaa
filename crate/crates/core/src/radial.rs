//! Radial grids, profiles and every quadrature-based diagnostic.
//!
//! A radial function on `R^d` is stored at the nodes `r_i = i h`. Integrals
//! use control volumes: node `i` owns the shell between the neighbouring
//! midpoints, `V_i = omega (r_{i+1/2}^d - r_{i-1/2}^d) / d`, clipped to
//! `[0, r_max]`. Gradients live on the faces `r_{i+1/2}` with area
//! `A_{i+1/2} = omega r_{i+1/2}^{d-1}`. The Laplacian is the conservative
//! finite-volume operator built from the same volumes and areas, so the
//! discrete free energy, its variational derivative and the dynamics flux
//! form are mutually consistent and mass is conserved exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_NODES: usize = 16;

/// `Gamma(k/2)` for integer `k >= 1`, by the half-integer recurrence.
pub(crate) fn gamma_half(k: u32) -> f64 {
    let (mut gamma, mut x) = if k % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    let target = k as f64 / 2.0;
    while x < target - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    gamma
}

/// Surface area of the unit sphere in `R^d`, `2 pi^{d/2} / Gamma(d/2)`.
pub fn sphere_area(d: u32) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// Uniform radial grid `r_i = i h`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    d: u32,
    n: usize,
    h: f64,
}

impl RadialGrid {
    pub fn new(d: u32, r_max: f64, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("n = {n} < {MIN_NODES}")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidGrid(format!("r_max = {r_max}")));
        }
        Self::with_spacing(d, r_max / (n - 1) as f64, n)
    }

    pub fn with_spacing(d: u32, h: f64, n: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidDimension(d));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("n = {n} < {MIN_NODES}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing h = {h}")));
        }
        Ok(Self { d, n, h })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn r_max(&self) -> f64 {
        self.h * (self.n - 1) as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.h * i as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.r(i))
    }

    /// Control volume of node `i`.
    pub fn volume(&self, i: usize) -> f64 {
        let d = self.d as i32;
        let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * self.h };
        let hi = if i + 1 == self.n { self.r_max() } else { (i as f64 + 0.5) * self.h };
        sphere_area(self.d) * (hi.powi(d) - lo.powi(d)) / self.d as f64
    }

    /// Area of the face between nodes `i` and `i + 1`.
    pub fn face_area(&self, i: usize) -> f64 {
        sphere_area(self.d) * ((i as f64 + 0.5) * self.h).powi(self.d as i32 - 1)
    }

    pub fn volumes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.volume(i)).collect()
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.n - 1).map(|i| self.face_area(i)).collect()
    }

    /// Same node count, spacing divided by `lambda`.
    pub fn contracted(&self, lambda: f64) -> Self {
        Self { h: self.h / lambda, ..*self }
    }

    /// Same spacing, `extra` nodes appended.
    pub fn extended(&self, extra: usize) -> Self {
        Self { n: self.n + extra, ..*self }
    }
}

/// Nonnegative, finite nodal values on a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidProfile(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidProfile(format!("value {v} at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self { grid, values: vec![0.0; grid.n()] }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn d(&self) -> u32 {
        self.grid.d()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Index of the last strictly positive node.
    pub fn support_end(&self) -> Option<usize> {
        self.values.iter().rposition(|&v| v > 0.0)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// Integral of the nodal quantity `f(i, u_i)` against the volume element.
    pub fn integrate(&self, f: impl Fn(usize, f64) -> f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &u)| f(i, u) * self.grid.volume(i))
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.integrate(|_, u| u)
    }

    pub fn sup_distance(&self, other: &RadialProfile) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `(int u^p dx)^{1/p}`.
pub fn lp_norm(u: &RadialProfile, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("L^p norm needs p >= 1, got {p}")));
    }
    Ok(lp_norm_unchecked(u, p))
}

/// `int u^p dx`, the `p`-th power of the norm, for any `p > 0`.
pub fn lp_integral(u: &RadialProfile, p: f64) -> f64 {
    u.integrate(|_, v| if v > 0.0 { v.powf(p) } else { 0.0 })
}

pub(crate) fn lp_norm_unchecked(u: &RadialProfile, p: f64) -> f64 {
    lp_integral(u, p).powf(1.0 / p)
}

/// `int |grad u|^2 dx` from face differences.
pub fn grad_l2_squared(u: &RadialProfile) -> f64 {
    let g = u.grid();
    let v = u.values();
    (0..g.n() - 1)
        .map(|i| {
            let du = v[i + 1] - v[i];
            g.face_area(i) * du * du / g.h()
        })
        .sum()
}

pub fn grad_l2_norm(u: &RadialProfile) -> f64 {
    grad_l2_squared(u).sqrt()
}

pub fn second_moment(u: &RadialProfile) -> f64 {
    let g = *u.grid();
    u.integrate(|i, v| v * g.r(i) * g.r(i))
}

/// `F(u) = 1/2 |grad u|^2 - |u|_{m+1}^{m+1} / (m + 1)`.
pub fn free_energy(u: &RadialProfile, m: f64) -> f64 {
    0.5 * grad_l2_squared(u) - lp_integral(u, m + 1.0) / (m + 1.0)
}

/// Conservative radial Laplacian applied to arbitrary nodal values.
///
/// `(A_{i+1/2}(u_{i+1}-u_i) - A_{i-1/2}(u_i-u_{i-1})) / (h V_i)`, with no flux
/// through `r = 0` and `r = r_max`. At the origin this is `2d (u_1-u_0)/h^2`,
/// the symmetric limit `d u''(0)`.
pub fn laplacian_values(grid: &RadialGrid, v: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let h = grid.h();
    let mut out = vec![0.0; n];
    let mut flux_left = 0.0;
    for i in 0..n {
        let flux_right = if i + 1 < n { grid.face_area(i) * (v[i + 1] - v[i]) } else { 0.0 };
        out[i] = (flux_right - flux_left) / (h * grid.volume(i));
        flux_left = flux_right;
    }
    out
}

pub fn radial_laplacian(u: &RadialProfile) -> Vec<f64> {
    laplacian_values(u.grid(), u.values())
}

/// Nodal chemical potential `mu = -Lap u - u^m`.
pub fn chemical_potential(u: &RadialProfile, m: f64) -> Vec<f64> {
    radial_laplacian(u)
        .into_iter()
        .zip(u.values())
        .map(|(lap, &v)| -lap - v.powf(m))
        .collect()
}

/// Discrete `int u |d_r mu|^2 dx` on faces, with arithmetic-mean face values.
pub fn dissipation(u: &RadialProfile, m: f64) -> f64 {
    weighted_gradient_energy(u, &chemical_potential(u, m))
}

/// Dissipation divided by its aggregation-only counterpart `int u |d_r u^m|^2 dx`,
/// which has the same scaling under both dilation families.
pub fn relative_dissipation(u: &RadialProfile, m: f64) -> f64 {
    let reference: Vec<f64> = u.values().iter().map(|v| v.powf(m)).collect();
    let denom = weighted_gradient_energy(u, &reference);
    if denom == 0.0 {
        0.0
    } else {
        dissipation(u, m) / denom
    }
}

fn weighted_gradient_energy(u: &RadialProfile, f: &[f64]) -> f64 {
    let g = u.grid();
    let v = u.values();
    (0..g.n() - 1)
        .map(|i| {
            let df = f[i + 1] - f[i];
            g.face_area(i) * 0.5 * (v[i] + v[i + 1]) * df * df / g.h()
        })
        .sum()
}

/// `lambda^d u(lambda r)`; node values move with the nodes so mass is unchanged.
pub fn dilate_mass_invariant(u: &RadialProfile, lambda: f64) -> Result<RadialProfile> {
    check_lambda(lambda)?;
    let c = lambda.powi(u.d() as i32);
    RadialProfile::new(u.grid().contracted(lambda), u.values().iter().map(|v| c * v).collect())
}

/// `lambda^{2/(m-1)} u(lambda r)`, the invariance of the evolution equation.
pub fn dilate_equation_invariant(u: &RadialProfile, lambda: f64, m: f64) -> Result<RadialProfile> {
    check_lambda(lambda)?;
    if (m - 1.0).abs() <= crate::params::EXPONENT_TOL {
        return Err(Error::DegenerateScaling);
    }
    let c = lambda.powf(2.0 / (m - 1.0));
    RadialProfile::new(u.grid().contracted(lambda), u.values().iter().map(|v| c * v).collect())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dilation factor must be positive, got {lambda}")))
    }
}

/// All scalar diagnostics of a profile at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mass: f64,
    pub lp_m1: f64,
    pub grad_l2: f64,
    pub second_moment: f64,
    pub free_energy: f64,
    pub dissipation: f64,
}

impl Diagnostics {
    pub fn of(u: &RadialProfile, m: f64) -> Self {
        let grad2 = grad_l2_squared(u);
        let pint = lp_integral(u, m + 1.0);
        Self {
            mass: u.mass(),
            lp_m1: pint.powf(1.0 / (m + 1.0)),
            grad_l2: grad2.sqrt(),
            second_moment: second_moment(u),
            free_energy: 0.5 * grad2 - pint / (m + 1.0),
            dissipation: dissipation(u, m),
        }
    }
}
