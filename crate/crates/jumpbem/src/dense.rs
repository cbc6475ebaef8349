//! Dense column-major matrices and an LU solver tuned for the two access
//! patterns this crate actually uses:
//!
//! * one-shot factorizations (simple right-looking LU with partial pivoting,
//!   memory-bound and deliberately unblocked), and
//! * many-right-hand-side triangular sweeps (panel-blocked substitution with
//!   a register-blocked inner kernel, runtime-dispatched to an AVX2+FMA path
//!   on x86-64), which is what makes forming dual-to-dual maps by multi-RHS
//!   solves cheaper per flop than factoring a twice-bigger matrix.
//!
//! Both normal and transposed solves reuse one factorization.

/// Right-hand-side block width of the substitution kernel (rows of the block
/// are contiguous).
const NB: usize = 48;
/// Panel depth: how many pivot columns are applied per pass over the block.
const KB: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum DenseError {
    #[error("matrix must be square, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("matrix is singular: zero pivot at elimination step {step}")]
    Singular { step: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMat {
    nrows: usize,
    ncols: usize,
    a: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMat { nrows, ncols, a: vec![0.0; nrows * ncols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m.a[j * nrows + i] = f(i, j);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.a[j * self.nrows + i]
    }

    #[inline(always)]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.a[j * self.nrows + i] = v;
    }

    #[inline(always)]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.a[j * self.nrows + i] += v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.a[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.a[j * self.nrows..(j + 1) * self.nrows]
    }

    /// Column-major backing storage.
    pub fn data(&self) -> &[f64] {
        &self.a
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.a
    }

    pub fn transpose(&self) -> DenseMat {
        DenseMat::from_fn(self.ncols, self.nrows, |i, j| self.get(j, i))
    }

    /// `self += alpha * other`, entrywise.
    pub fn scaled_add(&mut self, alpha: f64, other: &DenseMat) {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += alpha * *y;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for x in self.a.iter_mut() {
            *x *= alpha;
        }
    }

    /// Replace a square matrix by `self + selfᵀ`.
    pub fn add_transpose_in_place(&mut self) {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        for j in 0..n {
            for i in 0..=j {
                let s = self.a[j * n + i] + self.a[i * n + j];
                self.a[j * n + i] = s;
                self.a[i * n + j] = s;
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj != 0.0 {
                let col = self.col(j);
                for i in 0..self.nrows {
                    y[i] += col[i] * xj;
                }
            }
        }
        y
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for j in 0..self.ncols {
            let col = self.col(j);
            let mut s = 0.0;
            for i in 0..self.nrows {
                s += col[i] * x[i];
            }
            y[j] = s;
        }
        y
    }

    /// Largest absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.ncols)
            .map(|j| self.col(j).iter().map(|v| v.abs()).sum())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `max |A − Aᵀ|` over all entries; zero for exactly symmetric matrices.
    pub fn symmetry_defect(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        let n = self.nrows;
        let mut d: f64 = 0.0;
        for j in 0..n {
            for i in 0..j {
                d = d.max((self.a[j * n + i] - self.a[i * n + j]).abs());
            }
        }
        d
    }
}

/// Plain triple-loop product, used by tests and small compositions; the
/// solver itself never multiplies two N×N matrices.
pub fn matmul(a: &DenseMat, b: &DenseMat) -> DenseMat {
    assert_eq!(a.ncols, b.nrows);
    let mut c = DenseMat::zeros(a.nrows, b.ncols);
    for j in 0..b.ncols {
        for k in 0..a.ncols {
            let bkj = b.get(k, j);
            if bkj != 0.0 {
                let acol = a.col(k);
                let ccol = c.col_mut(j);
                for i in 0..a.nrows {
                    ccol[i] += acol[i] * bkj;
                }
            }
        }
    }
    c
}

/// LU factorization with partial pivoting, reusable for repeated solves with
/// the matrix and its transpose.
#[derive(Debug, Clone)]
pub struct LuFactor {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    anorm: f64,
    rcond: f64,
}

impl LuFactor {
    /// Factor `m` (consumed). Fails only on an exactly zero pivot; near
    /// singularity shows up in [`LuFactor::rcond`].
    pub fn factor(m: DenseMat) -> Result<LuFactor, DenseError> {
        if m.nrows != m.ncols {
            return Err(DenseError::NotSquare { nrows: m.nrows, ncols: m.ncols });
        }
        let n = m.nrows;
        let anorm = m.one_norm();
        let mut a = m.a;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let (mut ip, mut mx) = (k, 0.0f64);
            for i in k..n {
                let v = a[k * n + i].abs();
                if v > mx {
                    mx = v;
                    ip = i;
                }
            }
            piv[k] = ip;
            if mx == 0.0 || !mx.is_finite() {
                return Err(DenseError::Singular { step: k });
            }
            if ip != k {
                for j in 0..n {
                    a.swap(j * n + k, j * n + ip);
                }
            }
            let inv = 1.0 / a[k * n + k];
            for i in k + 1..n {
                a[k * n + i] *= inv;
            }
            for j in k + 1..n {
                let ajk = a[j * n + k];
                if ajk != 0.0 {
                    let (head, tail) = a.split_at_mut(j * n);
                    let lk = &head[k * n + k + 1..k * n + n];
                    let cj = &mut tail[k + 1..n];
                    for i in 0..lk.len() {
                        cj[i] -= ajk * lk[i];
                    }
                }
            }
        }
        let mut f = LuFactor { n, lu: a, piv, anorm, rcond: 0.0 };
        f.rcond = f.estimate_rcond();
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Reciprocal condition estimate in the 1-norm (Hager-style).
    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    fn apply_piv(&self, b: &mut [f64]) {
        for k in 0..self.n {
            let ip = self.piv[k];
            if ip != k {
                b.swap(k, ip);
            }
        }
    }

    fn apply_piv_inverse(&self, b: &mut [f64]) {
        for k in (0..self.n).rev() {
            let ip = self.piv[k];
            if ip != k {
                b.swap(k, ip);
            }
        }
    }

    /// Solve `A x = b` in place (single right-hand side).
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        self.apply_piv(b);
        for k in 0..n {
            let xk = b[k];
            if xk != 0.0 {
                let col = &self.lu[k * n + k + 1..(k + 1) * n];
                for (i, &l) in col.iter().enumerate() {
                    b[k + 1 + i] -= l * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let xk = b[k] / self.lu[k * n + k];
            b[k] = xk;
            if xk != 0.0 {
                let col = &self.lu[k * n..k * n + k];
                for (i, &u) in col.iter().enumerate() {
                    b[i] -= u * xk;
                }
            }
        }
    }

    /// Solve `Aᵀ x = b` in place (single right-hand side).
    pub fn solve_transpose_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let col = &self.lu[k * n..k * n + k];
            let mut s = 0.0;
            for (i, &u) in col.iter().enumerate() {
                s += u * b[i];
            }
            b[k] = (b[k] - s) / self.lu[k * n + k];
        }
        for k in (0..n).rev() {
            let col = &self.lu[k * n + k + 1..(k + 1) * n];
            let mut s = 0.0;
            for (i, &l) in col.iter().enumerate() {
                s += l * b[k + 1 + i];
            }
            b[k] -= s;
        }
        self.apply_piv_inverse(b);
    }

    /// Solve `A X = B` in place for a dense block of right-hand sides.
    pub fn solve_multi_in_place(&self, b: &mut DenseMat) {
        assert_eq!(b.nrows, self.n, "right-hand-side rows must match the matrix dimension");
        self.sweep_multi(b, false);
    }

    /// Solve `Aᵀ X = B` in place for a dense block of right-hand sides.
    pub fn solve_transpose_multi_in_place(&self, b: &mut DenseMat) {
        assert_eq!(b.nrows, self.n, "right-hand-side rows must match the matrix dimension");
        self.sweep_multi(b, true);
    }

    fn sweep_multi(&self, b: &mut DenseMat, transpose: bool) {
        let n = self.n;
        let nrhs = b.ncols;
        let mut blk = vec![0.0f64; n * NB];
        let mut panel = vec![0.0f64; KB * n];
        let mut j0 = 0;
        while j0 < nrhs {
            let nb = NB.min(nrhs - j0);
            blk.fill(0.0);
            for j in 0..nb {
                let src = b.col(j0 + j);
                for i in 0..n {
                    blk[i * NB + j] = src[i];
                }
            }
            if transpose {
                fwd_ut_div(&self.lu, n, &mut blk, &mut panel);
                bwd_lt_unit(&self.lu, n, &mut blk, &mut panel);
            } else {
                for k in 0..n {
                    let ip = self.piv[k];
                    if ip != k {
                        for j in 0..nb {
                            blk.swap(k * NB + j, ip * NB + j);
                        }
                    }
                }
                fwd_l_unit(&self.lu, n, &mut blk, &mut panel);
                bwd_u_div(&self.lu, n, &mut blk, &mut panel);
            }
            for j in 0..nb {
                let dst = b.col_mut(j0 + j);
                for i in 0..n {
                    dst[i] = blk[i * NB + j];
                }
            }
            if transpose {
                for j in 0..nb {
                    self.apply_piv_inverse(b.col_mut(j0 + j));
                }
            }
            j0 += nb;
        }
    }

    /// Hager's 1-norm estimator for `‖A⁻¹‖₁`, giving `rcond = 1/(‖A‖₁‖A⁻¹‖₁)`.
    fn estimate_rcond(&self) -> f64 {
        let n = self.n;
        if n == 0 || self.anorm == 0.0 {
            return 0.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0f64;
        for _ in 0..5 {
            let mut y = x.clone();
            self.solve_in_place(&mut y);
            est = y.iter().map(|v| v.abs()).sum();
            let mut z: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            self.solve_transpose_in_place(&mut z);
            let (mut jmax, mut zmax) = (0usize, 0.0f64);
            for (j, v) in z.iter().enumerate() {
                if v.abs() > zmax {
                    zmax = v.abs();
                    jmax = j;
                }
            }
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx.abs() * (1.0 + 1e-12) {
                break;
            }
            x.fill(0.0);
            x[jmax] = 1.0;
        }
        if !est.is_finite() || est == 0.0 {
            return 0.0;
        }
        1.0 / (self.anorm * est)
    }
}

// ---------------------------------------------------------------------------
// Panel-blocked substitution on a row-major right-hand-side block.
//
// `x` holds an n×NB block with contiguous rows. Each routine applies one
// triangular factor: it walks pivot indices in panels of up to KB, solves the
// small triangle inside the panel directly, and applies the panel to the
// remaining rows through `rank_update`, which is where nearly all the flops
// are. The panel is first copied into a `[t*n + i]` layout so the kernel
// reads the multiplier for row `i`, pivot `k0+t` contiguously in `i`.
// ---------------------------------------------------------------------------

/// L (unit lower) forward substitution; panel columns are contiguous in `lu`.
fn fwd_l_unit(lu: &[f64], n: usize, x: &mut [f64], panel: &mut [f64]) {
    let mut k0 = 0;
    while k0 < n {
        let kb = KB.min(n - k0);
        for t in 0..kb {
            panel[t * n..t * n + n].copy_from_slice(&lu[(k0 + t) * n..(k0 + t) * n + n]);
        }
        for t in 0..kb {
            let (head, tail) = x.split_at_mut((k0 + t + 1) * NB);
            let xk = &head[(k0 + t) * NB..];
            for i in t + 1..kb {
                let c = panel[t * n + k0 + i];
                let row = &mut tail[(i - t - 1) * NB..(i - t - 1) * NB + NB];
                for j in 0..NB {
                    row[j] -= c * xk[j];
                }
            }
        }
        let k1 = k0 + kb;
        let (head, below) = x.split_at_mut(k1 * NB);
        let xk = &head[k0 * NB..];
        rank_update(below, k1, n - k1, panel, n, xk, kb);
        k0 = k1;
    }
}

/// U (upper, divides by the diagonal) backward substitution.
fn bwd_u_div(lu: &[f64], n: usize, x: &mut [f64], panel: &mut [f64]) {
    let mut k1 = n;
    while k1 > 0 {
        let kb = KB.min(k1);
        let k0 = k1 - kb;
        for t in 0..kb {
            panel[t * n..t * n + n].copy_from_slice(&lu[(k0 + t) * n..(k0 + t) * n + n]);
        }
        for t in (0..kb).rev() {
            let k = k0 + t;
            let inv = 1.0 / panel[t * n + k];
            let (head, tail) = x.split_at_mut(k * NB);
            let xk = &mut tail[..NB];
            for v in xk.iter_mut() {
                *v *= inv;
            }
            for i in k0..k {
                let c = panel[t * n + i];
                let row = &mut head[i * NB..i * NB + NB];
                for j in 0..NB {
                    row[j] -= c * xk[j];
                }
            }
        }
        let (above, rest) = x.split_at_mut(k0 * NB);
        rank_update(above, 0, k0, panel, n, &rest[..kb * NB], kb);
        k1 = k0;
    }
}

/// Uᵀ (lower, divides by the diagonal) forward substitution; panel entries
/// are gathered with stride `n` from the rows of U.
fn fwd_ut_div(lu: &[f64], n: usize, x: &mut [f64], panel: &mut [f64]) {
    let mut k0 = 0;
    while k0 < n {
        let kb = KB.min(n - k0);
        for t in 0..kb {
            let k = k0 + t;
            for i in k..n {
                panel[t * n + i] = lu[i * n + k];
            }
        }
        for t in 0..kb {
            let k = k0 + t;
            let inv = 1.0 / panel[t * n + k];
            let (head, tail) = x.split_at_mut((k + 1) * NB);
            let xk = &mut head[k * NB..];
            for v in xk.iter_mut() {
                *v *= inv;
            }
            for i in t + 1..kb {
                let c = panel[t * n + k0 + i];
                let row = &mut tail[(i - t - 1) * NB..(i - t - 1) * NB + NB];
                for j in 0..NB {
                    row[j] -= c * xk[j];
                }
            }
        }
        let k1 = k0 + kb;
        let (head, below) = x.split_at_mut(k1 * NB);
        let xk = &head[k0 * NB..];
        rank_update(below, k1, n - k1, panel, n, xk, kb);
        k0 = k1;
    }
}

/// Lᵀ (unit upper) backward substitution; strided gather like [`fwd_ut_div`].
fn bwd_lt_unit(lu: &[f64], n: usize, x: &mut [f64], panel: &mut [f64]) {
    let mut k1 = n;
    while k1 > 0 {
        let kb = KB.min(k1);
        let k0 = k1 - kb;
        for t in 0..kb {
            let k = k0 + t;
            for i in 0..k {
                panel[t * n + i] = lu[i * n + k];
            }
            panel[t * n + k] = 1.0;
        }
        for t in (0..kb).rev() {
            let k = k0 + t;
            let (head, tail) = x.split_at_mut(k * NB);
            let xk = &tail[..NB];
            for i in k0..k {
                let c = panel[t * n + i];
                let row = &mut head[i * NB..i * NB + NB];
                for j in 0..NB {
                    row[j] -= c * xk[j];
                }
            }
        }
        let (above, rest) = x.split_at_mut(k0 * NB);
        rank_update(above, 0, k0, panel, n, &rest[..kb * NB], kb);
        k1 = k0;
    }
}

/// `xrows[i,:] -= Σ_t panel[t*n + base_row + i] * xk[t,:]` for `nrows` rows
/// of NB lanes. Dispatches to the FMA kernel when the CPU supports it.
fn rank_update(xrows: &mut [f64], base_row: usize, nrows: usize, panel: &[f64], n: usize, xk: &[f64], kb: usize) {
    if nrows == 0 || kb == 0 {
        return;
    }
    debug_assert!(xrows.len() >= nrows * NB);
    debug_assert!(xk.len() >= kb * NB);
    #[cfg(target_arch = "x86_64")]
    {
        if fma_available() {
            // Safety: feature presence checked at runtime; slice bounds
            // asserted above.
            unsafe {
                rank_update_fma(xrows.as_mut_ptr(), nrows, base_row, panel.as_ptr(), n, xk.as_ptr(), kb);
            }
            return;
        }
    }
    rank_update_scalar(xrows, base_row, nrows, panel, n, xk, kb);
}

fn rank_update_scalar(xrows: &mut [f64], base_row: usize, nrows: usize, panel: &[f64], n: usize, xk: &[f64], kb: usize) {
    for r in 0..nrows {
        let i = base_row + r;
        let row = &mut xrows[r * NB..r * NB + NB];
        let mut t = 0;
        while t + 4 <= kb {
            let c0 = panel[t * n + i];
            let c1 = panel[(t + 1) * n + i];
            let c2 = panel[(t + 2) * n + i];
            let c3 = panel[(t + 3) * n + i];
            let x0 = &xk[t * NB..t * NB + NB];
            let x1 = &xk[(t + 1) * NB..(t + 1) * NB + NB];
            let x2 = &xk[(t + 2) * NB..(t + 2) * NB + NB];
            let x3 = &xk[(t + 3) * NB..(t + 3) * NB + NB];
            for j in 0..NB {
                row[j] -= c0 * x0[j] + c1 * x1[j] + c2 * x2[j] + c3 * x3[j];
            }
            t += 4;
        }
        while t < kb {
            let c = panel[t * n + i];
            let xt = &xk[t * NB..t * NB + NB];
            for j in 0..NB {
                row[j] -= c * xt[j];
            }
            t += 1;
        }
    }
}

#[cfg(target_arch = "x86_64")]
fn fma_available() -> bool {
    use std::sync::OnceLock;
    static FMA: OnceLock<bool> = OnceLock::new();
    *FMA.get_or_init(|| std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma"))
}

/// Row-stationary update: each output row is held in 12 ymm accumulators
/// while the panel's pivot rows stream through fused multiply-adds.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn rank_update_fma(
    xrows: *mut f64,
    nrows: usize,
    base_row: usize,
    panel: *const f64,
    n: usize,
    xk: *const f64,
    kb: usize,
) {
    use std::arch::x86_64::*;
    const V: usize = NB / 4;
    for r in 0..nrows {
        let row = xrows.add(r * NB);
        let i = base_row + r;
        let mut acc = [_mm256_setzero_pd(); V];
        for (v, a) in acc.iter_mut().enumerate() {
            *a = _mm256_loadu_pd(row.add(4 * v));
        }
        for t in 0..kb {
            let c = _mm256_set1_pd(*panel.add(t * n + i));
            let xkt = xk.add(t * NB);
            for (v, a) in acc.iter_mut().enumerate() {
                *a = _mm256_fnmadd_pd(c, _mm256_loadu_pd(xkt.add(4 * v)), *a);
            }
        }
        for (v, a) in acc.iter().enumerate() {
            _mm256_storeu_pd(row.add(4 * v), *a);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_mat(n: usize, nc: usize, seed: u64, diag_boost: f64) -> DenseMat {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut m = DenseMat::from_fn(n, nc, |_, _| next());
        if diag_boost > 0.0 {
            for i in 0..n.min(nc) {
                m.add_to(i, i, diag_boost);
            }
        }
        m
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn single_rhs_solve_recovers_known_solution() {
        let n = 57;
        let a = lcg_mat(n, n, 3, 4.0);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = a.matvec(&x_true);
        let f = LuFactor::factor(a).unwrap();
        f.solve_in_place(&mut b);
        assert!(max_abs_diff(&b, &x_true) < 1e-11);
    }

    #[test]
    fn transpose_solve_recovers_known_solution() {
        let n = 63;
        let a = lcg_mat(n, n, 11, 4.0);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut b = a.matvec_transpose(&x_true);
        let f = LuFactor::factor(a).unwrap();
        f.solve_transpose_in_place(&mut b);
        assert!(max_abs_diff(&b, &x_true) < 1e-11);
    }

    #[test]
    fn blocked_multi_rhs_matches_single_rhs_including_partial_blocks() {
        // 130 right-hand sides exercises two full 48-wide blocks plus a
        // 34-wide partial block; n=217 exercises partial pivot panels.
        let n = 217;
        let nrhs = 130;
        let a = lcg_mat(n, n, 5, 6.0);
        let b0 = lcg_mat(n, nrhs, 17, 0.0);
        let f = LuFactor::factor(a).unwrap();

        let mut multi = b0.clone();
        f.solve_multi_in_place(&mut multi);
        for j in [0usize, 47, 48, 95, 96, nrhs - 1] {
            let mut single = b0.col(j).to_vec();
            f.solve_in_place(&mut single);
            assert!(
                max_abs_diff(multi.col(j), &single) < 1e-12,
                "column {j} disagrees between blocked and single-RHS paths"
            );
        }
    }

    #[test]
    fn blocked_transpose_multi_rhs_matches_single() {
        let n = 190;
        let nrhs = 70;
        let a = lcg_mat(n, n, 7, 6.0);
        let b0 = lcg_mat(n, nrhs, 23, 0.0);
        let f = LuFactor::factor(a).unwrap();

        let mut multi = b0.clone();
        f.solve_transpose_multi_in_place(&mut multi);
        for j in [0usize, 47, 48, nrhs - 1] {
            let mut single = b0.col(j).to_vec();
            f.solve_transpose_in_place(&mut single);
            assert!(max_abs_diff(multi.col(j), &single) < 1e-12);
        }
    }

    #[test]
    fn residual_of_blocked_solve_is_small() {
        let n = 300;
        let a = lcg_mat(n, n, 29, 8.0);
        let b0 = lcg_mat(n, n, 31, 0.0);
        let f = LuFactor::factor(a.clone()).unwrap();
        let mut x = b0.clone();
        f.solve_multi_in_place(&mut x);
        let mut worst: f64 = 0.0;
        for j in (0..n).step_by(37) {
            let r = a.matvec(x.col(j));
            worst = worst.max(max_abs_diff(&r, b0.col(j)));
        }
        assert!(worst < 1e-10, "worst residual {worst}");
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut a = DenseMat::zeros(4, 4);
        a.set(0, 0, 1.0);
        a.set(1, 1, 1.0);
        // rows 2 and 3 identically zero
        match LuFactor::factor(a) {
            Err(DenseError::Singular { .. }) => {}
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn rcond_tracks_true_conditioning_order_of_magnitude() {
        // diag(1, 1e-6) has condition number 1e6 in any norm.
        let mut a = DenseMat::identity(40);
        a.set(39, 39, 1e-6);
        let f = LuFactor::factor(a).unwrap();
        let r = f.rcond();
        assert!(r > 1e-8 && r < 1e-4, "rcond {r} should be near 1e-6");

        let b = lcg_mat(30, 30, 41, 5.0);
        let fb = LuFactor::factor(b).unwrap();
        assert!(fb.rcond() > 1e-4, "well-conditioned matrix misreported: {}", fb.rcond());
    }

    #[test]
    fn solve_then_multiply_roundtrip_inside_1e8_for_well_conditioned() {
        let n = 120;
        let a = lcg_mat(n, n, 53, 6.0);
        let f = LuFactor::factor(a.clone()).unwrap();
        assert!(f.rcond() > 1e-10);
        let x: Vec<f64> = (0..n).map(|i| (0.05 * i as f64).sin() + 0.3).collect();
        let mut y = a.matvec(&x);
        f.solve_in_place(&mut y);
        let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(max_abs_diff(&y, &x) / scale < 1e-8);
    }

    #[test]
    fn matmul_and_transpose_agree_with_direct_sums() {
        let a = lcg_mat(13, 7, 61, 0.0);
        let b = lcg_mat(7, 9, 67, 0.0);
        let c = matmul(&a, &b);
        let mut worst: f64 = 0.0;
        for i in 0..13 {
            for j in 0..9 {
                let mut s = 0.0;
                for k in 0..7 {
                    s += a.get(i, k) * b.get(k, j);
                }
                worst = worst.max((c.get(i, j) - s).abs());
            }
        }
        assert!(worst < 1e-14);
        let at = a.transpose();
        assert_eq!(at.get(3, 8), a.get(8, 3));
    }
}
