//! Orthogonal least-squares kernels.
//!
//! Two independent factorizations of the same problem: a dense Householder QR
//! for the (small) cell-level system and a streaming Givens update for the
//! ball-level system, which never materializes the full design.

/// Upper-triangular factor `R`, the rotated response `Qᵀy`, and the residual
/// sum of squares of a least-squares problem.
#[derive(Debug, Clone)]
pub(crate) struct Triangular {
    n: usize,
    r: Vec<f64>,
    qty: Vec<f64>,
    pub(crate) rss: f64,
}

impl Triangular {
    /// Back-substitution. Fails with the first column whose pivot is
    /// negligible relative to the largest pivot.
    pub(crate) fn solve(&self) -> Result<Vec<f64>, usize> {
        let n = self.n;
        let scale = (0..n).map(|k| self.r[k * n + k].abs()).fold(0.0, f64::max);
        if let Some(k) = (0..n).find(|&k| self.r[k * n + k].abs() <= 1e-10 * scale) {
            return Err(k);
        }
        let mut beta = vec![0.0; n];
        for k in (0..n).rev() {
            let tail: f64 = (k + 1..n).map(|j| self.r[k * n + j] * beta[j]).sum();
            beta[k] = (self.qty[k] - tail) / self.r[k * n + k];
        }
        Ok(beta)
    }

    /// Diagonal of `(RᵀR)⁻¹`, i.e. the row norms of `R⁻¹` squared.
    pub(crate) fn inverse_gram_diagonal(&self) -> Vec<f64> {
        let n = self.n;
        // Solve R X = I column by column; X is upper triangular.
        let mut inv = vec![0.0; n * n];
        for col in 0..n {
            for k in (0..=col).rev() {
                let rhs = if k == col { 1.0 } else { 0.0 };
                let tail: f64 = (k + 1..=col).map(|j| self.r[k * n + j] * inv[j * n + col]).sum();
                inv[k * n + col] = (rhs - tail) / self.r[k * n + k];
            }
        }
        (0..n).map(|k| (k..n).map(|j| inv[k * n + j].powi(2)).sum()).collect()
    }
}

/// Householder QR of a dense row-major `m × n` matrix `a` (m ≥ n) applied to `b`.
pub(crate) fn householder(mut a: Vec<f64>, m: usize, n: usize, mut b: Vec<f64>) -> Triangular {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), m);
    let mut v = vec![0.0; m];
    for k in 0..n.min(m) {
        let norm = (k..m).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let akk = a[k * n + k];
        let alpha = if akk > 0.0 { -norm } else { norm };
        for i in k..m {
            v[i] = a[i * n + k];
        }
        v[k] -= alpha;
        let vv: f64 = (k..m).map(|i| v[i] * v[i]).sum();
        if vv == 0.0 {
            continue;
        }
        for j in k..n {
            let s: f64 = (k..m).map(|i| v[i] * a[i * n + j]).sum();
            let f = 2.0 * s / vv;
            for i in k..m {
                a[i * n + j] -= f * v[i];
            }
        }
        let s: f64 = (k..m).map(|i| v[i] * b[i]).sum();
        let f = 2.0 * s / vv;
        for i in k..m {
            b[i] -= f * v[i];
        }
    }
    let mut r = vec![0.0; n * n];
    for i in 0..n.min(m) {
        for j in i..n {
            r[i * n + j] = a[i * n + j];
        }
    }
    let rss = b[n.min(m)..].iter().map(|x| x * x).sum();
    b.truncate(n);
    b.resize(n, 0.0);
    Triangular { n, r, qty: b, rss }
}

/// Row-at-a-time QR by Givens rotations.
#[derive(Debug, Clone)]
pub(crate) struct GivensAccumulator {
    n: usize,
    r: Vec<f64>,
    qty: Vec<f64>,
    rss: f64,
    row: Vec<f64>,
}

impl GivensAccumulator {
    pub(crate) fn new(n: usize) -> Self {
        GivensAccumulator { n, r: vec![0.0; n * n], qty: vec![0.0; n], rss: 0.0, row: vec![0.0; n] }
    }

    /// Folds the observation `(x, y)` into the factorization. `x` is given as
    /// sparse `(column, value)` pairs.
    pub(crate) fn push(&mut self, x: &[(usize, f64)], mut y: f64) {
        let n = self.n;
        let w = &mut self.row;
        w.iter_mut().for_each(|v| *v = 0.0);
        for &(j, v) in x {
            w[j] += v;
        }
        let first = x.iter().map(|&(j, _)| j).min().unwrap_or(n);
        for k in first..n {
            if w[k] == 0.0 {
                continue;
            }
            let rkk = self.r[k * n + k];
            let h = rkk.hypot(w[k]);
            let (c, s) = (rkk / h, w[k] / h);
            self.r[k * n + k] = h;
            w[k] = 0.0;
            let row = &mut self.r[k * n + k + 1..(k + 1) * n];
            for (rj, wj) in row.iter_mut().zip(&mut w[k + 1..]) {
                let t = *rj;
                *rj = c * t + s * *wj;
                *wj = c * *wj - s * t;
            }
            let t = self.qty[k];
            self.qty[k] = c * t + s * y;
            y = c * y - s * t;
        }
        self.rss += y * y;
    }

    pub(crate) fn finish(self) -> Triangular {
        Triangular { n: self.n, r: self.r, qty: self.qty, rss: self.rss }
    }
}
