//! Banded LU factorisation with partial pivoting.
//!
//! Row `i` stores columns `i - kl ..= i + ku + kl`; the extra `kl` upper
//! diagonals hold fill-in created by row interchanges.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    /// Adds `v` at `(i, j)`; out-of-range columns are ignored.
    #[inline]
    pub fn add(&mut self, i: usize, j: isize, v: f64) {
        if j < 0 || j as usize >= self.n {
            return;
        }
        let j = j as usize;
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let reach = self.ku + self.kl;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularJacobian(k));
            }
            pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let diag = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / diag;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let (ij, kj) = (self.idx(i, j), self.idx(k, j));
                        self.data[ij] -= l * self.data[kj];
                    }
                }
            }
        }
        Ok(BandedLu { m: self, pivots })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let a = &self.m;
        let n = a.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + a.kl).min(n - 1) {
                b[i] -= a.data[a.idx(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + a.ku + a.kl).min(n - 1) {
                s -= a.data[a.idx(k, j)] * b[j];
            }
            b[k] = s / a.data[a.idx(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn solves_random_banded_systems(
            n in 16usize..60,
            kl in 1usize..3,
            ku in 1usize..3,
            seed in proptest::collection::vec(-1.0f64..1.0, 400),
            rhs in proptest::collection::vec(-5.0f64..5.0, 60),
        ) {
            let mut a = BandedMatrix::zeros(n, kl, ku);
            let mut s = seed.iter().cycle();
            for i in 0..n {
                for j in i as isize - kl as isize..=(i + ku) as isize {
                    // weak diagonal so that pivoting is exercised
                    let v = *s.next().unwrap() + if j == i as isize { 0.1 } else { 0.0 };
                    a.add(i, j, v);
                }
            }
            let x: Vec<f64> = rhs[..n].to_vec();
            let b = a.mul_vec(&x);
            let lu = a.clone().factor();
            prop_assume!(lu.is_ok());
            let mut y = b.clone();
            lu.unwrap().solve_in_place(&mut y);
            let back = a.mul_vec(&y);
            let err = back.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-6 * (1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max)), "err {}", err);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = BandedMatrix::zeros(16, 1, 1);
        assert!(matches!(a.factor(), Err(Error::SingularJacobian(0))));
    }

    #[test]
    fn pivoting_on_zero_diagonal() {
        // [[0,1],[1,0]] block pattern embedded in a banded matrix
        let n = 16;
        let mut a = BandedMatrix::zeros(n, 1, 1);
        for i in 0..n {
            if i % 2 == 0 {
                a.add(i, i as isize + 1, 1.0);
            } else {
                a.add(i, i as isize - 1, 1.0);
            }
        }
        let lu = a.clone().factor().unwrap();
        let mut b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let orig = b.clone();
        lu.solve_in_place(&mut b);
        assert_eq!(a.mul_vec(&b), orig);
    }
}
