//! Symmetric positive-definite systems that are banded except for a few
//! dense trailing variables.

/// Lower triangle of a symmetric matrix over `n` variables where the first
/// `n - k` form a band of half-width `bw` and the last `k` couple to all.
#[derive(Debug, Clone)]
pub struct BorderedBand {
    n_band: usize,
    bw: usize,
    /// `band[i * (bw + 1) + d]` holds entry `(i, i - d)`.
    band: Vec<f64>,
    /// `border[i * k + c]` holds entry `(n_band + c, i)`.
    border: Vec<f64>,
    /// Dense `k × k` block, row-major.
    corner: Vec<f64>,
    k: usize,
}

impl BorderedBand {
    pub fn zeros(n_band: usize, bw: usize, k: usize) -> Self {
        Self {
            n_band,
            bw,
            band: vec![0.0; n_band * (bw + 1)],
            border: vec![0.0; n_band * k],
            corner: vec![0.0; k * k],
            k,
        }
    }

    pub fn dim(&self) -> usize {
        self.n_band + self.k
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)`; callers add each unordered
    /// pair once.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi >= self.n_band {
            let c = hi - self.n_band;
            if lo >= self.n_band {
                let r = lo - self.n_band;
                self.corner[c * self.k + r] += v;
                if r != c {
                    self.corner[r * self.k + c] += v;
                }
            } else {
                self.border[lo * self.k + c] += v;
            }
        } else {
            let d = hi - lo;
            assert!(d <= self.bw, "entry ({hi}, {lo}) outside band {}", self.bw);
            self.band[hi * (self.bw + 1) + d] += v;
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        if i < self.n_band {
            self.band[i * (self.bw + 1)]
        } else {
            let c = i - self.n_band;
            self.corner[c * self.k + c]
        }
    }

    /// Cholesky solve; `None` if the matrix is not numerically positive
    /// definite.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let (n, bw, k) = (self.n_band, self.bw, self.k);
        let w = bw + 1;
        // Band factor L, stored like `band`.
        let mut l = self.band.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut sum = l[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for m in k0..j {
                    sum -= l[i * w + (i - m)] * l[j * w + (j - m)];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        let forward = |b: &mut [f64]| {
            for i in 0..n {
                let mut sum = b[i];
                for m in i.saturating_sub(bw)..i {
                    sum -= l[i * w + (i - m)] * b[m];
                }
                b[i] = sum / l[i * w];
            }
        };
        let backward = |b: &mut [f64]| {
            for i in (0..n).rev() {
                let mut sum = b[i];
                for m in i + 1..(i + bw + 1).min(n) {
                    sum -= l[m * w + (m - i)] * b[m];
                }
                b[i] = sum / l[i * w];
            }
        };
        // Y = L⁻¹ C, column by column.
        let mut y = vec![vec![0.0; n]; k];
        for (c, col) in y.iter_mut().enumerate() {
            for i in 0..n {
                col[i] = self.border[i * k + c];
            }
            forward(col);
        }
        let mut s = self.corner.clone();
        for a in 0..k {
            for b in 0..k {
                s[a * k + b] -= y[a].iter().zip(&y[b]).map(|(p, q)| p * q).sum::<f64>();
            }
        }
        let ls = dense_cholesky(&s, k)?;
        let mut w1 = rhs[..n].to_vec();
        forward(&mut w1);
        let mut w2: Vec<f64> = (0..k)
            .map(|c| rhs[n + c] - y[c].iter().zip(&w1).map(|(p, q)| p * q).sum::<f64>())
            .collect();
        dense_forward(&ls, k, &mut w2);
        dense_backward(&ls, k, &mut w2);
        for (c, col) in y.iter().enumerate() {
            for i in 0..n {
                w1[i] -= col[i] * w2[c];
            }
        }
        backward(&mut w1);
        w1.extend(w2);
        Some(w1)
    }
}

fn dense_cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for m in 0..j {
                sum -= l[i * n + m] * l[j * n + m];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn dense_forward(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut sum = b[i];
        for m in 0..i {
            sum -= l[i * n + m] * b[m];
        }
        b[i] = sum / l[i * n + i];
    }
}

fn dense_backward(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut sum = b[i];
        for m in i + 1..n {
            sum -= l[m * n + i] * b[m];
        }
        b[i] = sum / l[i * n + i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check(n_band: usize, bw: usize, k: usize, seed: u64) {
        let n = n_band + k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // A = Gᵀ G + I with G respecting the sparsity pattern.
        let mut dense = vec![vec![0.0; n]; n];
        let mut m = BorderedBand::zeros(n_band, bw, k);
        for _ in 0..3 * n {
            let start = if n_band > 0 { rng.gen_range(0..n_band) } else { 0 };
            let mut cols: Vec<usize> = (start..(start + bw + 1).min(n_band)).collect();
            cols.extend(n_band..n);
            let vals: Vec<f64> = cols.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            for (a, &i) in cols.iter().enumerate() {
                for (b, &j) in cols.iter().enumerate() {
                    dense[i][j] += vals[a] * vals[b];
                    if b <= a {
                        m.add(i, j, vals[a] * vals[b]);
                    }
                }
            }
        }
        for (i, row) in dense.iter_mut().enumerate() {
            row[i] += 1.0;
            m.add(i, i, 1.0);
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = m.solve(&rhs).unwrap();
        for i in 0..n {
            let ax: f64 = (0..n).map(|j| dense[i][j] * x[j]).sum();
            assert!((ax - rhs[i]).abs() < 1e-9, "row {i}: {ax} vs {}", rhs[i]);
        }
    }

    #[test]
    fn solves_banded_systems() {
        check(40, 6, 0, 1);
        check(1, 0, 0, 2);
    }

    #[test]
    fn solves_bordered_systems() {
        check(30, 4, 1, 3);
        check(25, 3, 3, 4);
        check(0, 0, 4, 5);
    }

    #[test]
    fn rejects_indefinite() {
        let mut m = BorderedBand::zeros(2, 1, 0);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        m.add(1, 0, 2.0);
        assert!(m.solve(&[1.0, 1.0]).is_none());
    }
}
