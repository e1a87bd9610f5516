use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Storage
/// leaves room for the `kl` extra super-diagonals that row pivoting fills
/// in.
#[derive(Debug, Clone, PartialEq)]
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
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0, 0);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    pub fn in_band(&self, r: usize, c: usize) -> bool {
        r < self.n && c < self.n && c + self.kl >= r && c <= r + self.ku
    }

    #[inline]
    fn idx(&self, r: usize, c: usize) -> usize {
        r * self.width + (c + self.kl - r)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if self.in_band(r, c) {
            self.data[self.idx(r, c)]
        } else {
            0.0
        }
    }

    /// Panics outside the band.
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        assert!(self.in_band(r, c), "entry ({r}, {c}) outside the band");
        let i = self.idx(r, c);
        self.data[i] = v;
    }

    /// Panics outside the band.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(self.in_band(r, c), "entry ({r}, {c}) outside the band");
        let i = self.idx(r, c);
        self.data[i] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.data[self.idx(r, c)] * x[c]).sum()
            })
            .collect()
    }

    /// Row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|r| {
                let lo = r.saturating_sub(self.kl);
                let hi = (r + self.ku).min(self.n - 1);
                (lo..=hi).map(|c| self.data[self.idx(r, c)].abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// LU factorisation with partial pivoting inside the band.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.norm_inf();
        let tiny = scale * f64::EPSILON * n.max(1) as f64;
        let mut piv = vec![0usize; n];
        let mut mult = vec![0.0; n * kl];
        for j in 0..n {
            let last_row = (j + kl).min(n - 1);
            let last_col = (j + kl + ku).min(n - 1);
            let mut p = j;
            let mut best = self.data[self.idx(j, j)].abs();
            for r in j + 1..=last_row {
                let v = self.data[self.idx(r, j)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularPivot { dof: j });
            }
            piv[j] = p;
            if p != j {
                for c in j..=last_col {
                    let (a, b) = (self.idx(j, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.idx(j, j)];
            for r in j + 1..=last_row {
                let m = self.data[self.idx(r, j)] / d;
                mult[j * kl + (r - j - 1)] = m;
                let rj = self.idx(r, j);
                self.data[rj] = 0.0;
                if m != 0.0 {
                    for c in j + 1..=last_col {
                        let (a, b) = (self.idx(r, c), self.idx(j, c));
                        self.data[a] -= m * self.data[b];
                    }
                }
            }
        }
        Ok(BandedLu { u: self, piv, mult })
    }
}

/// Factors produced by [`BandedMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    u: BandedMatrix,
    piv: Vec<usize>,
    mult: Vec<f64>,
}

impl BandedLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let u = &self.u;
        let (n, kl, ku) = (u.n, u.kl, u.ku);
        for j in 0..n {
            b.swap(j, self.piv[j]);
            let bj = b[j];
            for r in j + 1..=(j + kl).min(n.saturating_sub(1)) {
                b[r] -= self.mult[j * kl + (r - j - 1)] * bj;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for c in i + 1..=(i + kl + ku).min(n - 1) {
                s -= u.data[u.idx(i, c)] * b[c];
            }
            b[i] = s / u.data[u.idx(i, i)];
        }
    }
}

/// A band matrix with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSystem {
    pub matrix: BandedMatrix,
    pub rhs: Vec<f64>,
}

impl BandedSystem {
    pub fn new(matrix: BandedMatrix, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != matrix.dim() {
            return Err(Error::Invalid(format!(
                "right-hand side of length {} for a {}x{} matrix",
                rhs.len(),
                matrix.dim(),
                matrix.dim()
            )));
        }
        Ok(BandedSystem { matrix, rhs })
    }

    /// `||A x - b||_inf`.
    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        self.matrix
            .mul_vec(x)
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Solves the system by banded LU with partial pivoting.
pub fn solve_banded(sys: &BandedSystem) -> Result<Vec<f64>> {
    let lu = sys.matrix.clone().factor()?;
    let mut x = sys.rhs.clone();
    lu.solve_in_place(&mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let sys = BandedSystem::new(BandedMatrix::identity(4), vec![1.0, -2.0, 3.5, 0.0]).unwrap();
        assert_eq!(solve_banded(&sys).unwrap(), sys.rhs);
    }

    #[test]
    fn pivoting_is_needed() {
        // [[0, 1], [1, 1]] x = [1, 2] -> x = [1, 1]
        let mut m = BandedMatrix::zeros(2, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 1.0);
        let sys = BandedSystem::new(m, vec![1.0, 2.0]).unwrap();
        let x = solve_banded(&sys).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_pivot_names_dof() {
        let mut m = BandedMatrix::zeros(3, 1, 1);
        m.set(0, 0, 1.0);
        m.set(2, 2, 1.0);
        let r = solve_banded(&BandedSystem::new(m, vec![1.0; 3]).unwrap());
        assert_eq!(r, Err(Error::SingularPivot { dof: 1 }));
    }
}
