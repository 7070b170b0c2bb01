//! Dense rank-4 tensors over orbital indices.

use nalgebra::DMatrix;
use rayon::prelude::*;

/// Dense `n × n × n × n` tensor stored row-major, last index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Option<Self> {
        (data.len() == n * n * n * n).then_some(Self { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.n + q) * self.n + r) * self.n + s
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[self.offset(p, q, r, s)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let o = self.offset(p, q, r, s);
        self.data[o] = v;
    }

    #[inline]
    pub fn add(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let o = self.offset(p, q, r, s);
        self.data[o] += v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_distance(&self, other: &Tensor4) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Applies `u` to every index: `t'_ijkl = Σ u_ia u_jb u_kc u_ld t_abcd`.
    ///
    /// Done as four one-index contractions, each `O(n^5)`.
    pub fn transform(&self, u: &DMatrix<f64>) -> Tensor4 {
        let n = self.n;
        assert_eq!(u.nrows(), n);
        assert_eq!(u.ncols(), n);
        let mut cur = self.data.clone();
        for _ in 0..4 {
            cur = contract_leading(&cur, u, n);
        }
        Tensor4 { n, data: cur }
    }
}

/// Contracts the leading index with `u` and cycles it to the back:
/// `out[b,c,d,i] = Σ_a u_ia t[a,b,c,d]`. Four applications restore the
/// original index order.
fn contract_leading(t: &[f64], u: &DMatrix<f64>, n: usize) -> Vec<f64> {
    let n3 = n * n * n;
    let mut out = vec![0.0; n3 * n];
    out.par_chunks_mut(n).enumerate().for_each(|(bcd, row)| {
        for (i, slot) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..n {
                let w = u[(i, a)];
                if w != 0.0 {
                    acc += w * t[a * n3 + bcd];
                }
            }
            *slot = acc;
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(t: &Tensor4, u: &DMatrix<f64>) -> Tensor4 {
        let n = t.dim();
        let mut out = Tensor4::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for a in 0..n {
                            for b in 0..n {
                                for c in 0..n {
                                    for d in 0..n {
                                        acc += u[(i, a)] * u[(j, b)] * u[(k, c)] * u[(l, d)] * t.get(a, b, c, d);
                                    }
                                }
                            }
                        }
                        out.set(i, j, k, l, acc);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn sequential_contraction_matches_naive_sum() {
        let n = 3;
        let data: Vec<f64> = (0..81).map(|x| ((x * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let t = Tensor4::from_vec(n, data).unwrap();
        let u = DMatrix::from_fn(n, n, |i, j| ((i * 3 + j * 5) % 7) as f64 / 3.0 - 1.0);
        assert!(t.transform(&u).max_abs_diff(&naive(&t, &u)) < 1e-12);
    }

    #[test]
    fn identity_is_exact() {
        let data: Vec<f64> = (0..16).map(|x| x as f64 * 0.1).collect();
        let t = Tensor4::from_vec(2, data).unwrap();
        assert_eq!(t.transform(&DMatrix::identity(2, 2)), t);
    }
}
