//! Thin helpers over nalgebra for the dense complex linear algebra used
//! throughout the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Column-stacked entries of a matrix as a vector. Any fixed stacking order
/// works for Frobenius inner products; nalgebra is column-major.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Frobenius inner product tr(a^H b).
pub fn frob_inner(a: &CMat, b: &CMat) -> Complex64 {
    let mut acc = ZERO;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc
}

pub fn frob_norm(m: &CMat) -> f64 {
    m.norm()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized first so tiny Hermiticity violations from
/// accumulated arithmetic cannot poison the solver. Diagonal matrices are
/// short-circuited; Gram matrices of product states over matrix-unit bases
/// are diagonal and can be large.
pub fn herm_eigen(m: &CMat) -> (DVector<f64>, CMat) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "herm_eigen needs a square matrix");
    let scale = max_abs(m).max(1e-300);
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(m[(i, j)].norm());
            }
        }
    }
    if off <= 1e-14 * scale {
        // Diagonal: sort the (real parts of the) diagonal entries.
        let mut idx: Vec<usize> = (0..n).collect();
        let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
        idx.sort_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap());
        let vals = DVector::from_iterator(n, idx.iter().map(|&i| diag[i]));
        let mut vecs = CMat::zeros(n, n);
        for (col, &i) in idx.iter().enumerate() {
            vecs[(i, col)] = ONE;
        }
        return (vals, vecs);
    }
    let h = (m + m.adjoint()).scale(0.5);
    let se = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| se.eigenvalues[i]));
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Operator (spectral) norm. Hermitian inputs take the direct eigenvalue
/// route; everything else goes through m^H m.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == m.ncols() {
        let scale = max_abs(m).max(1e-300);
        let herm_defect = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_defect <= 1e-13 * scale {
            let (vals, _) = herm_eigen(m);
            return vals[0].abs().max(vals[vals.len() - 1].abs());
        }
    }
    let g = m.ad_mul(m);
    let (vals, _) = herm_eigen(&g);
    vals[vals.len() - 1].max(0.0).sqrt()
}

/// Pseudo-inverse application for a Hermitian PSD matrix, rank-cut at
/// `rel_tol` times the largest eigenvalue.
pub struct PsdPinv {
    pub vectors: CMat,
    pub eigenvalues: DVector<f64>,
    pub rank: usize,
    pub rel_tol: f64,
}

impl PsdPinv {
    pub fn new(g: &CMat, rel_tol: f64) -> Self {
        let (vals, vecs) = herm_eigen(g);
        let n = vals.len();
        let top = vals[n - 1].max(0.0);
        let rank = vals.iter().filter(|&&l| l > rel_tol * top).count();
        PsdPinv { vectors: vecs, eigenvalues: vals, rank, rel_tol }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// g^+ x
    pub fn apply(&self, x: &CVec) -> CVec {
        let n = self.eigenvalues.len();
        let mut out = CVec::zeros(n);
        let top = self.max_eigenvalue().max(0.0);
        for k in 0..n {
            let l = self.eigenvalues[k];
            if l > self.rel_tol * top {
                let u = self.vectors.column(k);
                let c = u.dotc(x) / cx(l, 0.0);
                out += CVec::from_iterator(n, u.iter().map(|z| z * c));
            }
        }
        out
    }
}

/// Log-log least-squares slope of magnitude against n; points at or below
/// `floor` are dropped. Returns 0.0 when fewer than two usable points remain.
pub fn loglog_slope(points: &[(usize, f64)], floor: f64) -> f64 {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, v)| v > floor)
        .map(|&(n, v)| ((n as f64).ln(), v.ln()))
        .collect();
    if usable.len() < 2 {
        return 0.0;
    }
    let m = usable.len() as f64;
    let sx: f64 = usable.iter().map(|p| p.0).sum();
    let sy: f64 = usable.iter().map(|p| p.1).sum();
    let sxx: f64 = usable.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = usable.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return 0.0;
    }
    (m * sxy - sx * sy) / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_herm(n: usize, seed: &mut u64) -> CMat {
        let mut next = || {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMat::from_fn(n, n, |_, _| cx(next(), next()));
        (&a + a.adjoint()).scale(0.5)
    }

    #[test]
    fn herm_eigen_reconstructs() {
        let mut seed = 7;
        let h = rand_herm(24, &mut seed);
        let (vals, vecs) = herm_eigen(&h);
        let lam = CMat::from_fn(24, 24, |i, j| if i == j { cx(vals[i], 0.0) } else { ZERO });
        let rec = &vecs * lam * vecs.adjoint();
        assert!(max_abs(&(&rec - &h)) < 1e-12 * max_abs(&h).max(1.0));
        for k in 1..vals.len() {
            assert!(vals[k] >= vals[k - 1]);
        }
    }

    #[test]
    fn diagonal_fast_path_sorts() {
        let d = CMat::from_fn(5, 5, |i, j| if i == j { cx(4.0 - i as f64, 0.0) } else { ZERO });
        let (vals, vecs) = herm_eigen(&d);
        assert_eq!(vals[0], 0.0);
        assert_eq!(vals[4], 4.0);
        let rec = &vecs * CMat::from_fn(5, 5, |i, j| if i == j { cx(vals[i], 0.0) } else { ZERO }) * vecs.adjoint();
        assert!(max_abs(&(&rec - &d)) < 1e-14);
    }

    #[test]
    fn op_norm_of_unitary_is_one() {
        let u = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) | (1, 0) => ONE,
            _ => ZERO,
        });
        assert!((op_norm(&u) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psd_pinv_inverts_on_range() {
        let mut seed = 13;
        let a = rand_herm(10, &mut seed);
        let g = &a * a.adjoint(); // PSD
        let p = PsdPinv::new(&g, 1e-12);
        let x = CVec::from_fn(10, |i, _| cx(i as f64 + 1.0, -0.5));
        let y = &g * &x;
        let back = &g * p.apply(&y);
        assert!(max_abs_vec(&(&back - &y)) < 1e-9 * max_abs_vec(&y).max(1.0));
    }

    #[test]
    fn loglog_slope_recovers_power_law() {
        let pts: Vec<(usize, f64)> = (2..9).map(|n| (n, 3.0 / (n as f64))).collect();
        let s = loglog_slope(&pts, 1e-300);
        assert!((s + 1.0).abs() < 1e-10);
    }
}
