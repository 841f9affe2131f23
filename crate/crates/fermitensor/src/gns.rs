//! GNS construction for states on matrix-realized algebras.
//!
//! The Gram matrix G of a state is eigendecomposed; eigenpairs above the
//! rank cutoff define an isometry T from basis coordinates (with the
//! G-semi-inner-product) onto C^rank with the standard inner product. Left
//! multiplication compressed through T realizes the representation, and the
//! unit's coefficient vector maps to the cyclic vector.

use crate::graded::Element;
use crate::linalg::{cx, op_norm, CMat, CVec};
use crate::state::{State, StateError};

/// Rank cutoff relative to the largest Gram eigenvalue, matching the state
/// positivity tolerance.
pub const RANK_TOL: f64 = 1e-10;

/// The GNS data of a state: quotient isometry, its pseudo-inverse, and the
/// cyclic vector.
pub struct GnsData {
    state: State,
    dim: usize,
    /// rank x N: maps basis coordinates to GNS coordinates.
    to_quotient: CMat,
    /// N x rank: right inverse of `to_quotient` modulo the null space.
    from_quotient: CMat,
    cyclic: CVec,
}

impl GnsData {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cyclic_vector(&self) -> &CVec {
        &self.cyclic
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn isometry(&self) -> &CMat {
        &self.to_quotient
    }

    /// pi(x) on the GNS space.
    pub fn represent(&self, x: &Element) -> CMat {
        assert!(
            self.state.algebra().same_algebra(x.algebra()),
            "element lives on a different algebra"
        );
        let alg = self.state.algebra();
        let n = alg.basis_len();
        let xm = x.matrix();
        let scale = crate::linalg::frob_norm(&xm).max(1.0);
        // Left multiplication in basis coordinates.
        let mut left = CMat::zeros(n, n);
        for j in 0..n {
            let prod = &xm * alg.basis_matrix(j);
            let col = alg
                .coeffs_of(&prod, scale * crate::linalg::frob_norm(alg.basis_matrix(j)))
                .expect("validated algebra is closed under products");
            left.set_column(j, &col);
        }
        &self.to_quotient * left * &self.from_quotient
    }

    pub fn represent_basis(&self, i: usize) -> CMat {
        self.represent(&self.state.algebra().basis_element(i))
    }

    /// <pi(x) xi, xi>, which reproduces the state.
    pub fn vector_value(&self, x: &Element) -> num_complex::Complex64 {
        let v = self.represent(x) * &self.cyclic;
        self.cyclic.dotc(&v)
    }

    /// Worst |<pi(b_i) xi, xi> - phi(b_i)| over the basis.
    pub fn reconstruction_defect(&self) -> f64 {
        let alg = self.state.algebra();
        (0..alg.basis_len())
            .map(|i| {
                let v = self.represent_basis(i) * &self.cyclic;
                (self.cyclic.dotc(&v) - self.state.value_at_basis(i)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Unitary on the GNS space implementing a state-preserving automorphism
    /// given by its basis-coordinate matrix (columns are images of basis
    /// elements).
    pub fn covariant_unitary(&self, basis_map: &CMat) -> Result<CMat, StateError> {
        let alg = self.state.algebra();
        let n = alg.basis_len();
        assert_eq!(basis_map.nrows(), n);
        assert_eq!(basis_map.ncols(), n);
        // Invariance: phi(theta(b_j)) = phi(b_j).
        let values = self.state.values();
        let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut defect = 0.0f64;
        for j in 0..n {
            let mapped: num_complex::Complex64 =
                (0..n).map(|i| basis_map[(i, j)] * values[i]).sum();
            defect = defect.max((mapped - values[j]).norm());
        }
        if defect > crate::state::STATE_TOL * scale {
            return Err(StateError::NotInvariant(defect / scale));
        }
        Ok(&self.to_quotient * basis_map * &self.from_quotient)
    }
}

/// Build the GNS representation of a state.
pub fn gns(state: &State) -> Result<GnsData, StateError> {
    let gram = state.gram();
    let n = gram.nrows();
    let (eigs, vecs) = crate::linalg::herm_eigen(gram);
    let top = eigs[n - 1].max(0.0);
    if eigs[0] < -RANK_TOL * top.max(1e-300) {
        return Err(StateError::DegenerateState);
    }
    let kept: Vec<usize> = (0..n).filter(|&k| eigs[k] > RANK_TOL * top).collect();
    let rank = kept.len();
    let mut to_quotient = CMat::zeros(rank, n);
    let mut from_quotient = CMat::zeros(n, rank);
    for (row, &k) in kept.iter().enumerate() {
        let sqrt_l = eigs[k].sqrt();
        let u = vecs.column(k);
        for j in 0..n {
            to_quotient[(row, j)] = u[j].conj() * cx(sqrt_l, 0.0);
            from_quotient[(j, row)] = u[j] / cx(sqrt_l, 0.0);
        }
    }
    let cyclic = &to_quotient * state.algebra().identity_coeffs();
    Ok(GnsData { state: state.clone(), dim: rank, to_quotient, from_quotient, cyclic })
}

/// Operator norm of pi(x) in the GNS representation of `state`.
pub fn gns_norm(x: &Element, state: &State) -> Result<f64, StateError> {
    let g = gns(state)?;
    Ok(op_norm(&g.represent(x)))
}
