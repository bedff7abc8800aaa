//! One backward-Euler step of the finite-volume scheme.
//!
//! Unknowns are nodal values `u_i` with control volumes `V_i`. Faces carry
//! fluxes `F = A mob (mu_{i+1} - mu_i) / h` with `mob = max(mean u, eps)`
//! (the floor only between wet nodes),
//! and each step solves `V_i (u_i - u_i^old) = dt (F_{i+1/2} - F_{i-1/2})`.
//! The residual sums to `sum V (u - u_old)` for any `u`, so every Newton
//! iterate started from `u_old` conserves mass up to rounding.

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::radial::{RadialGrid, RadialProfile};

/// Merits remembered by the non-monotone line search.
const NONMONOTONE_WINDOW: usize = 5;

pub(super) struct Scheme {
    vol: Vec<f64>,
    /// `A_{i+1/2} / h`, one per face.
    face: Vec<f64>,
    cp: Vec<f64>,
    cm: Vec<f64>,
    m: f64,
    eps: f64,
}

/// Result of a converged step.
pub(super) struct StepInfo {
    pub values: Vec<f64>,
    pub iterations: usize,
}

impl Scheme {
    pub fn new(grid: &RadialGrid, m: f64, eps: f64) -> Self {
        let n = grid.n();
        let h = grid.h();
        let vol = grid.volumes();
        let face: Vec<f64> = grid.face_areas().into_iter().map(|a| a / h).collect();
        let cp = (0..n).map(|i| if i + 1 < n { face[i] / vol[i] } else { 0.0 }).collect();
        let cm = (0..n).map(|i| if i > 0 { face[i - 1] / vol[i] } else { 0.0 }).collect();
        Self { vol, face, cp, cm, m, eps }
    }

    fn source(&self, u: f64) -> f64 {
        u.signum() * u.abs().powf(self.m)
    }

    fn source_slope(&self, u: f64) -> f64 {
        if u == 0.0 {
            if self.m == 1.0 {
                1.0
            } else {
                0.0
            }
        } else {
            self.m * u.abs().powf(self.m - 1.0)
        }
    }

    fn potential(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|i| {
                let right = if i + 1 < n { self.cp[i] * (u[i + 1] - u[i]) } else { 0.0 };
                let left = if i > 0 { self.cm[i] * (u[i] - u[i - 1]) } else { 0.0 };
                -(right - left) - self.source(u[i])
            })
            .collect()
    }

    /// Face mobility and its derivative in either neighbour. The floor acts
    /// only between two wet nodes: across a dry face `mu` jumps, and any floor
    /// there would leak mass out of an exact steady state.
    fn mobility(&self, u: &[f64], i: usize) -> (f64, f64) {
        let mean = 0.5 * (u[i] + u[i + 1]);
        let floor = if u[i] > 0.0 && u[i + 1] > 0.0 { self.eps } else { 0.0 };
        if mean > floor {
            (mean, 0.5)
        } else {
            (floor, 0.0)
        }
    }

    fn residual(&self, u: &[f64], old: &[f64], dt: f64) -> Vec<f64> {
        let mu = self.potential(u);
        let mut r: Vec<f64> = (0..u.len()).map(|i| self.vol[i] * (u[i] - old[i])).collect();
        for i in 0..u.len() - 1 {
            let flux = self.face[i] * self.mobility(u, i).0 * (mu[i + 1] - mu[i]);
            r[i] -= dt * flux;
            r[i + 1] += dt * flux;
        }
        r
    }

    fn jacobian(&self, u: &[f64], dt: f64) -> BandedMatrix {
        let n = u.len();
        let mu = self.potential(u);
        let mut jac = BandedMatrix::zeros(n, 2, 2);
        for i in 0..n {
            jac.add(i, i as isize, self.vol[i]);
        }
        let dmu = |k: usize, j: isize| -> f64 {
            let k_i = k as isize;
            if j == k_i - 1 {
                -self.cm[k]
            } else if j == k_i {
                self.cp[k] + self.cm[k] - self.source_slope(u[k])
            } else if j == k_i + 1 {
                -self.cp[k]
            } else {
                0.0
            }
        };
        for i in 0..n - 1 {
            let (mob, dmob) = self.mobility(u, i);
            let jump = mu[i + 1] - mu[i];
            for j in i as isize - 1..=i as isize + 2 {
                let mut d = mob * (dmu(i + 1, j) - dmu(i, j));
                if j == i as isize || j == i as isize + 1 {
                    d += dmob * jump;
                }
                let d = self.face[i] * d;
                jac.add(i, j, -dt * d);
                jac.add(i + 1, j, dt * d);
            }
        }
        jac
    }

    /// `L^2` norm of the residual per unit volume.
    fn merit(&self, r: &[f64]) -> f64 {
        r.iter().zip(&self.vol).map(|(x, v)| x * x / v).sum::<f64>().sqrt()
    }

    /// Damped Newton from `old`; negative values are clipped afterwards.
    pub fn step(&self, old: &[f64], dt: f64, tol: f64, max_iter: usize) -> Result<StepInfo> {
        let scale = old.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        if scale == 0.0 {
            return Ok(StepInfo { values: old.to_vec(), iterations: 0 });
        }
        let mut u = old.to_vec();
        let mut r = self.residual(&u, old, dt);
        let mut merit = self.merit(&r);
        let mut history = std::collections::VecDeque::from([merit]);
        for iteration in 1..=max_iter {
            let mut delta: Vec<f64> = r.iter().map(|x| -x).collect();
            self.jacobian(&u, dt).factor()?.solve_in_place(&mut delta);
            let size = delta.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if !size.is_finite() {
                return Err(Error::NewtonDiverged { residual: merit, iterations: iteration });
            }
            if size <= tol * scale {
                for (x, d) in u.iter_mut().zip(&delta) {
                    *x += d;
                }
                clip_negative(&mut u, &self.vol);
                return Ok(StepInfo { values: u, iterations: iteration });
            }
            let reference = history.iter().fold(0.0f64, |a, &x| a.max(x));
            let mut theta = 1.0;
            loop {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(x, d)| x + theta * d).collect();
                let r_trial = self.residual(&trial, old, dt);
                let m_trial = self.merit(&r_trial);
                if m_trial.is_finite() && m_trial < reference * (1.0 - 1e-4 * theta) {
                    u = trial;
                    r = r_trial;
                    merit = m_trial;
                    history.push_back(merit);
                    if history.len() > NONMONOTONE_WINDOW {
                        history.pop_front();
                    }
                    break;
                }
                theta *= 0.5;
                if theta < 1.0 / 1024.0 {
                    if size <= 1e3 * tol * scale {
                        clip_negative(&mut u, &self.vol);
                        return Ok(StepInfo { values: u, iterations: iteration });
                    }
                    return Err(Error::NewtonDiverged { residual: merit, iterations: iteration });
                }
            }
        }
        Err(Error::NewtonDiverged { residual: merit, iterations: max_iter })
    }
}

/// Sets negative values to zero and moves their (negative) mass into the
/// adjacent cell: inwards first, then outwards for whatever reaches the origin.
/// Leaves a nonnegative profile whenever the total mass is nonnegative.
pub(super) fn clip_negative(u: &mut [f64], vol: &[f64]) {
    let n = u.len();
    for i in (1..n).rev() {
        if u[i] < 0.0 {
            u[i - 1] += u[i] * vol[i] / vol[i - 1];
            u[i] = 0.0;
        }
    }
    for i in 0..n - 1 {
        if u[i] < 0.0 {
            u[i + 1] += u[i] * vol[i] / vol[i + 1];
            u[i] = 0.0;
        }
    }
}

/// Doubles `r_max` at fixed spacing. The former wall node gains the rest of
/// its cell, so its value is scaled to keep the mass exact.
pub(super) fn expand(u: &RadialProfile) -> Result<RadialProfile> {
    let g = u.grid();
    let n = g.n();
    let wider = g.extended(n - 1);
    let mut values = u.values().to_vec();
    values[n - 1] *= g.volume(n - 1) / wider.volume(n - 1);
    values.resize(wider.n(), 0.0);
    RadialProfile::new(wider, values)
}

/// Doubles `r_max` and the spacing, keeping the node count. Even nodes land on
/// coarse nodes; each odd node splits its mass between its two coarse
/// neighbours linearly in `r^2`, so mass and second moment are both exact.
pub(super) fn coarsen(u: &RadialProfile) -> Result<RadialProfile> {
    let g = u.grid();
    let coarse = RadialGrid::with_spacing(g.d(), 2.0 * g.h(), g.n())?;
    let mut amount = vec![0.0; g.n()];
    for (k, (&v, vol)) in u.values().iter().zip(g.volumes()).enumerate() {
        let q = v * vol;
        let j = k / 2;
        if k % 2 == 0 {
            amount[j] += q;
        } else {
            let a = (4 * j + 3) as f64 / (8 * j + 4) as f64;
            amount[j] += a * q;
            amount[j + 1] += (1.0 - a) * q;
        }
    }
    let values = amount.iter().zip(coarse.volumes()).map(|(q, v)| q / v).collect();
    RadialProfile::new(coarse, values)
}
