//! Discrete free-boundary polish.
//!
//! Finds nodal values `W_0..W_{k-1} > 0` (with `W_j = 0` for `j >= k`) and a
//! spacing `h` such that the discrete chemical potential
//! `-Lap_h W - W^m` equals `-1` at every node touched by a face with
//! positive mobility, i.e. nodes `0..=k`. The result is an exact fixed point
//! of the finite-volume flow up to Newton tolerance, which the ODE profile
//! sampled on a grid is only to `O(h)` near the contact line.

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::radial::sphere_area;

/// Laplacian coefficients on the unit-spacing grid: `(left, right)` per node.
fn unit_coefficients(d: u32, k: usize) -> Vec<(f64, f64)> {
    let omega = sphere_area(d);
    let di = d as i32;
    (0..=k)
        .map(|i| {
            let x = i as f64;
            let lo = if i == 0 { 0.0 } else { x - 0.5 };
            let vol = omega * ((x + 0.5).powi(di) - lo.powi(di)) / d as f64;
            let left = if i == 0 { 0.0 } else { omega * (x - 0.5).powi(di - 1) / vol };
            let right = omega * (x + 0.5).powi(di - 1) / vol;
            (left, right)
        })
        .collect()
}

/// Unit-spacing `L_i(W)`, so that `Lap_h W_i = L_i / h^2`.
fn apply(coef: &[(f64, f64)], w: &[f64], i: usize) -> f64 {
    let at = |j: usize| if j < w.len() { w[j] } else { 0.0 };
    let left = if i == 0 { 0.0 } else { coef[i].0 * (at(i) - at(i - 1)) };
    coef[i].1 * (at(i + 1) - at(i)) - left
}

/// Solves the discrete problem from the seed `(w, h)` where `w` holds the
/// `k` positive nodes. Returns the polished values and spacing.
pub fn equilibrate(d: u32, m: f64, mut w: Vec<f64>, mut h: f64) -> Result<(Vec<f64>, f64)> {
    let k = w.len();
    if k < 4 {
        return Err(Error::EquilibriumFailed(format!("{k} support nodes")));
    }
    let coef = unit_coefficients(d, k);
    let residual = |w: &[f64], h: f64| -> Vec<f64> {
        (0..=k)
            .map(|i| {
                let wi = if i < k { w[i].max(0.0) } else { 0.0 };
                -apply(&coef, w, i) / (h * h) - wi.powf(m) + 1.0
            })
            .collect()
    };
    let norm = |r: &[f64]| r.iter().map(|x| x.abs()).fold(0.0, f64::max);
    // rounding floor of differences of O(W) values divided by h^2
    let floor = |w: &[f64], h: f64| 64.0 * f64::EPSILON * w[0].abs().max(1.0) / (h * h);

    let mut g = residual(&w, h);
    'newton: for _ in 0..60 {
        let gnorm = norm(&g);
        if gnorm <= floor(&w, h) {
            break;
        }
        let h2 = h * h;
        let mut t = BandedMatrix::zeros(k, 1, 1);
        let mut b = vec![0.0; k];
        for i in 0..k {
            let (cl, cr) = coef[i];
            let wi = w[i].max(0.0);
            t.add(i, i as isize, (cl + cr) / h2 - m * wi.powf(m - 1.0));
            if i > 0 {
                t.add(i, i as isize - 1, -cl / h2);
            }
            if i + 1 < k {
                t.add(i, i as isize + 1, -cr / h2);
            }
            b[i] = 2.0 * apply(&coef, &w, i) / (h2 * h);
        }
        let c = -coef[k].0 / h2;
        let e = 2.0 * apply(&coef, &w, k) / (h2 * h);
        let lu = t.factor()?;
        let mut z1: Vec<f64> = g[..k].iter().map(|x| -x).collect();
        lu.solve_in_place(&mut z1);
        let mut z2 = b;
        lu.solve_in_place(&mut z2);
        let denom = e - c * z2[k - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::EquilibriumFailed("singular bordered system".into()));
        }
        let dh = (-g[k] - c * z1[k - 1]) / denom;
        let dw: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a - b * dh).collect();

        let mut step = 1.0;
        loop {
            let trial_w: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a + step * b).collect();
            let trial_h = h + step * dh;
            if trial_h > 0.0 {
                let trial_g = residual(&trial_w, trial_h);
                if norm(&trial_g) < gnorm {
                    w = trial_w;
                    h = trial_h;
                    g = trial_g;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-3 {
                if gnorm <= 1e3 * floor(&w, h) {
                    break 'newton;
                }
                return Err(Error::EquilibriumFailed("line search stalled".into()));
            }
        }
    }
    let gnorm = norm(&g);
    if gnorm > 1e3 * floor(&w, h) {
        return Err(Error::EquilibriumFailed(format!("residual {gnorm:e}")));
    }
    if let Some(i) = w.iter().position(|&x| x <= 0.0) {
        return Err(Error::EquilibriumFailed(format!("nonpositive value at node {i}")));
    }
    Ok((w, h))
}
