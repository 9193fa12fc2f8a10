//! Banded direct solver for the reduced elliptic systems.
//!
//! The ring meshes number nodes ring by ring, so every stiffness matrix
//! couples indices at most a ring apart and fits in a fixed band.  The
//! factorization is Doolittle without pivoting: the assembled systems have
//! a positive definite symmetric part, which keeps the pivots away from
//! zero, and a fixed elimination order keeps repeated solves bit-identical.

use crate::error::{Error, Result};

/// Relative pivot floor: a factorization aborts when a pivot falls below
/// this multiple of the largest assembled entry.
const PIVOT_FLOOR: f64 = 1e-13;

/// Square matrix with entries confined to `|i - j| <= bandwidth`, stored
/// dense within the band.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        BandMatrix {
            n,
            bandwidth,
            data: vec![0.0; n * (2 * bandwidth + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = (i as isize, j as isize);
        let off = j - i + self.bandwidth as isize;
        if off < 0 || off > 2 * self.bandwidth as isize {
            return None;
        }
        Some((i as usize) * (2 * self.bandwidth + 1) + off as usize)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.data[s] += v;
    }

    /// Zero every stored entry of row `i`.
    pub fn clear_row(&mut self, i: usize) {
        let w = 2 * self.bandwidth + 1;
        for s in &mut self.data[i * w..(i + 1) * w] {
            *s = 0.0;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bandwidth);
            let hi = (i + self.bandwidth).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.get(i, j) * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// LU factorization in place, unit lower factor, no pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let n = self.n;
        let bw = self.bandwidth;
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot.abs() < PIVOT_FLOOR * scale {
                return Err(Error::Singular { row: k });
            }
            let hi = (k + bw).min(n - 1);
            for i in (k + 1)..=hi {
                let l = self.get(i, k) / pivot;
                self.set(i, k, l);
                if l != 0.0 {
                    for j in (k + 1)..=hi {
                        let u = self.get(k, j);
                        if u != 0.0 {
                            self.add(i, j, -l * u);
                        }
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            bandwidth: bw,
            data: self.data,
        })
    }
}

/// Factored band matrix; `solve` reuses the factorization.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    bandwidth: usize,
    data: Vec<f64>,
}

impl BandLu {
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        let off = (j as isize) - (i as isize) + self.bandwidth as isize;
        self.data[i * (2 * self.bandwidth + 1) + off as usize]
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), self.n);
        let mut x = rhs.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bandwidth);
            let mut acc = x[i];
            for j in lo..i {
                acc -= self.get(i, j) * x[j];
            }
            x[i] = acc;
        }
        for i in (0..self.n).rev() {
            let hi = (i + self.bandwidth).min(self.n - 1);
            let mut acc = x[i];
            for j in (i + 1)..=hi {
                acc -= self.get(i, j) * x[j];
            }
            x[i] = acc / self.get(i, i);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_dominant(n: usize, bw: usize, seed: u64) -> BandMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = BandMatrix::zeros(n, bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw).min(n - 1);
            let mut row_sum = 0.0;
            for j in lo..=hi {
                if j != i {
                    let v = rng.gen_range(-1.0..1.0);
                    m.set(i, j, v);
                    row_sum += v.abs();
                }
            }
            m.set(i, i, row_sum + rng.gen_range(0.5..1.5));
        }
        m
    }

    #[test]
    fn matches_a_dense_solve() {
        let n = 60;
        let bw = 5;
        let band = random_dominant(n, bw, 3);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                dense[(i, j)] = band.get(i, j);
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let x = band.clone().factor().unwrap().solve(&rhs);
        let dx = dense
            .lu()
            .solve(&nalgebra::DVector::from_vec(rhs.clone()))
            .unwrap();
        for i in 0..n {
            assert!((x[i] - dx[i]).abs() < 1e-10, "row {i}");
        }
    }

    #[test]
    fn residual_is_small() {
        let band = random_dominant(200, 12, 9);
        let rhs: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = band.clone().factor().unwrap().solve(&rhs);
        let back = band.mul_vec(&x);
        for (b, r) in back.iter().zip(&rhs) {
            assert!((b - r).abs() < 1e-10);
        }
    }

    #[test]
    fn tridiagonal_poisson_solves_exactly() {
        // -u'' = 2 on (0, 1), u(0) = u(1) = 0 discretizes to an exact
        // quadratic at the nodes.
        let n = 31;
        let h = 1.0 / (n as f64 + 1.0);
        let mut m = BandMatrix::zeros(n, 1);
        for i in 0..n {
            m.set(i, i, 2.0 / (h * h));
            if i > 0 {
                m.set(i, i - 1, -1.0 / (h * h));
            }
            if i + 1 < n {
                m.set(i, i + 1, -1.0 / (h * h));
            }
        }
        let rhs = vec![2.0; n];
        let x = m.factor().unwrap().solve(&rhs);
        for (i, &xi) in x.iter().enumerate() {
            let t = (i as f64 + 1.0) * h;
            assert!((xi - t * (1.0 - t)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_pivot_is_reported_with_its_row() {
        let mut m = BandMatrix::zeros(4, 1);
        m.set(0, 0, 1.0);
        m.set(1, 1, 0.0);
        m.set(2, 2, 1.0);
        m.set(3, 3, 1.0);
        match m.factor() {
            Err(Error::Singular { row }) => assert_eq!(row, 1),
            other => panic!("expected a singular error, got {other:?}"),
        }
    }

    #[test]
    fn factorization_is_deterministic() {
        let band = random_dominant(80, 7, 21);
        let f1 = band.clone().factor().unwrap();
        let f2 = band.factor().unwrap();
        assert_eq!(f1.data, f2.data);
    }

    #[test]
    fn out_of_band_reads_are_zero() {
        let m = BandMatrix::zeros(10, 2);
        assert_eq!(m.get(0, 5), 0.0);
        assert_eq!(m.get(9, 0), 0.0);
    }
}
