//! Square matrices with a known band and an LU factorization that only
//! touches the band (plus pivoting fill).

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
#[error("matrix is singular at pivot {0}")]
pub struct SingularMatrix(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix {
            n,
            kl: kl.min(n.saturating_sub(1)),
            ku: ku.min(n.saturating_sub(1)),
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.kl
    }

    pub fn upper(&self) -> usize {
        self.ku
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j + self.kl >= i && i + self.ku >= j, "entry ({i},{j}) outside band");
        self.data[i * self.n + j] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
    }

    /// `c * I - scale * self`, the iteration matrix of implicit methods.
    pub fn shifted(&self, c: f64, scale: f64) -> BandMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= -scale);
        for i in 0..self.n {
            out.data[i * self.n + i] += c;
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + 1).min(self.n);
            out[i] = (lo..hi).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    pub fn lu(mut self) -> Result<LuFactors, SingularMatrix> {
        let n = self.n;
        let kl = self.kl;
        let width = (self.kl + self.ku).min(n.saturating_sub(1));
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(SingularMatrix(k));
            }
            piv[k] = p;
            let last_col = (k + width).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    self.data.swap(k * n + j, p * n + j);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let factor = self.get(i, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.set(i, k, factor);
                for j in k + 1..=last_col {
                    let v = self.get(k, j);
                    if v != 0.0 {
                        self.data[i * n + j] -= factor * v;
                    }
                }
            }
        }
        Ok(LuFactors {
            n,
            kl,
            width,
            lu: self.data,
            piv,
        })
    }
}

#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    kl: usize,
    width: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl LuFactors {
    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    b[i] -= self.lu[i * n + k] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in k + 1..=(k + self.width).min(n - 1) {
                acc -= self.lu[k * n + j] * b[j];
            }
            b[k] = acc / self.lu[k * n + k];
        }
    }
}
