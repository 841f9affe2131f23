//! States on matrix-realized *-algebras: positivity certification and
//! evenness tests.
//!
//! A state is stored by its values on the basis together with the Hermitian
//! Gram matrix G[i][j] = phi(b_i* b_j), whose positive semidefiniteness
//! certifies positivity of the functional. States built from an ambient
//! density matrix carry the density as their certificate and only compute
//! the Gram matrix when a consumer (GNS, typically) asks for it.

use crate::graded::{Element, GradedAlgebra};
use crate::json::{self, StateJson};
use crate::linalg::{frob_inner, frob_norm, max_abs, CMat, CVec};
use num_complex::Complex64;
use rand::Rng;
use std::fmt;
use std::sync::{Arc, OnceLock};
use thiserror::Error;

pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("functional is not positive (relative minimum Gram eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("functional is not normalized (value at the unit {0})")]
    NotNormalized(Complex64),
    #[error("functional is not hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("state is not invariant under the given automorphism (deviation {0:.3e})")]
    NotInvariant(f64),
    #[error("Gram matrix is numerically indefinite")]
    DegenerateState,
    #[error("density matrix is invalid: {0}")]
    InvalidDensity(String),
    #[error("value vector length differs from the basis size")]
    LengthMismatch,
}

#[derive(Debug, Clone)]
pub enum PositivityCert {
    /// Numerically verified minimum eigenvalue of the Gram matrix.
    GramEigenvalue(f64),
    /// The state is tr(rho .) for a verified PSD unit-trace ambient density.
    Density,
}

struct StateInner {
    algebra: GradedAlgebra,
    values: CVec,
    cert: PositivityCert,
    density: Option<CMat>,
    gram: OnceLock<CMat>,
}

/// A normalized positive linear functional, stored by basis values.
#[derive(Clone)]
pub struct State {
    inner: Arc<StateInner>,
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("State")
            .field("algebra", &self.inner.algebra.name())
            .field("values", &self.inner.values.as_slice())
            .finish()
    }
}

impl State {
    /// Build and fully validate a state from its basis values.
    pub fn from_values(algebra: &GradedAlgebra, values: CVec) -> Result<State, StateError> {
        if values.len() != algebra.basis_len() {
            return Err(StateError::LengthMismatch);
        }
        check_normalized(algebra, &values)?;
        check_hermitian(algebra, &values)?;
        let gram = gram_from_values(algebra, &values);
        let min_rel = psd_defect(&gram);
        if min_rel < -STATE_TOL {
            return Err(StateError::NotPositive(min_rel));
        }
        let inner = StateInner {
            algebra: algebra.clone(),
            values,
            cert: PositivityCert::GramEigenvalue(min_rel),
            density: None,
            gram: OnceLock::new(),
        };
        let _ = inner.gram.set(gram);
        Ok(State { inner: Arc::new(inner) })
    }

    /// Build a state from values plus an externally computed Gram matrix
    /// (product states factorize theirs per site). The Gram still goes
    /// through the PSD certificate; only its assembly is delegated.
    pub(crate) fn from_values_with_gram(
        algebra: &GradedAlgebra,
        values: CVec,
        gram: CMat,
    ) -> Result<State, StateError> {
        if values.len() != algebra.basis_len() {
            return Err(StateError::LengthMismatch);
        }
        check_normalized(algebra, &values)?;
        check_hermitian(algebra, &values)?;
        let min_rel = psd_defect(&gram);
        if min_rel < -STATE_TOL {
            return Err(StateError::NotPositive(min_rel));
        }
        let inner = StateInner {
            algebra: algebra.clone(),
            values,
            cert: PositivityCert::GramEigenvalue(min_rel),
            density: None,
            gram: OnceLock::new(),
        };
        let _ = inner.gram.set(gram);
        Ok(State { inner: Arc::new(inner) })
    }

    /// Build a state phi(x) = tr(rho x) from an ambient density matrix.
    pub fn from_density(algebra: &GradedAlgebra, rho: &CMat) -> Result<State, StateError> {
        let d = algebra.ambient_dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(StateError::InvalidDensity("density dimension mismatch".into()));
        }
        let scale = max_abs(rho).max(1e-300);
        if frob_norm(&(rho - rho.adjoint())) > 1e-10 * scale * (d as f64) {
            return Err(StateError::InvalidDensity("density is not hermitian".into()));
        }
        let (eigs, _) = crate::linalg::herm_eigen(rho);
        if eigs[0] < -1e-10 * eigs[eigs.len() - 1].max(1e-300) {
            return Err(StateError::InvalidDensity(format!(
                "density has a negative eigenvalue {:.3e}",
                eigs[0]
            )));
        }
        let n = algebra.basis_len();
        let values = CVec::from_fn(n, |i, _| frob_inner(rho, algebra.basis_matrix(i)));
        check_normalized(algebra, &values)?;
        check_hermitian(algebra, &values)?;
        // Positivity follows from the density representation; small algebras
        // get the numeric Gram check anyway.
        let inner = StateInner {
            algebra: algebra.clone(),
            values,
            cert: PositivityCert::Density,
            density: Some(rho.clone()),
            gram: OnceLock::new(),
        };
        let state = State { inner: Arc::new(inner) };
        if n <= 256 {
            let min_rel = psd_defect(state.gram());
            if min_rel < -STATE_TOL {
                return Err(StateError::NotPositive(min_rel));
            }
        }
        Ok(state)
    }

    /// The vector state of `xi` (normalized internally).
    pub fn vector_state(algebra: &GradedAlgebra, xi: &CVec) -> Result<State, StateError> {
        let d = algebra.ambient_dim();
        if xi.len() != d {
            return Err(StateError::InvalidDensity("vector dimension mismatch".into()));
        }
        let norm2 = xi.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if norm2 <= 0.0 {
            return Err(StateError::InvalidDensity("zero vector".into()));
        }
        let rho = CMat::from_fn(d, d, |i, j| xi[i] * xi[j].conj() / Complex64::from(norm2));
        State::from_density(algebra, &rho)
    }

    /// The normalized trace.
    pub fn trace_state(algebra: &GradedAlgebra) -> Result<State, StateError> {
        let d = algebra.ambient_dim();
        let rho = CMat::identity(d, d).map(|z| z / Complex64::from(d as f64));
        State::from_density(algebra, &rho)
    }

    pub fn algebra(&self) -> &GradedAlgebra {
        &self.inner.algebra
    }

    pub fn values(&self) -> &CVec {
        &self.inner.values
    }

    pub fn cert(&self) -> &PositivityCert {
        &self.inner.cert
    }

    pub fn density(&self) -> Option<&CMat> {
        self.inner.density.as_ref()
    }

    /// An ambient matrix P with phi(x) = tr(P x) for x in the basis span:
    /// the stored density when one exists, the adjoint of the Riesz
    /// representative otherwise.
    pub fn representing_matrix(&self) -> CMat {
        match &self.inner.density {
            Some(rho) => rho.clone(),
            None => self.inner.algebra.riesz_matrix(&self.inner.values).adjoint(),
        }
    }

    pub fn value_at_basis(&self, i: usize) -> Complex64 {
        self.inner.values[i]
    }

    /// phi(x) for an element of the same algebra.
    pub fn value_of(&self, x: &Element) -> Complex64 {
        assert!(
            self.inner.algebra.same_algebra(x.algebra()),
            "state and element live on different algebras"
        );
        x.coeffs().iter().zip(self.inner.values.iter()).map(|(c, v)| c * v).sum()
    }

    /// phi of an ambient matrix in the basis span.
    pub fn value_of_matrix(&self, m: &CMat) -> Result<Complex64, crate::graded::AlgebraError> {
        let coeffs = self.inner.algebra.coeffs_of(m, frob_norm(m).max(1.0))?;
        Ok(coeffs.iter().zip(self.inner.values.iter()).map(|(c, v)| c * v).sum())
    }

    /// The Gram matrix G[i][j] = phi(b_i* b_j), cached.
    pub fn gram(&self) -> &CMat {
        self.inner.gram.get_or_init(|| match &self.inner.density {
            Some(rho) => gram_from_density(&self.inner.algebra, rho),
            None => gram_from_values(&self.inner.algebra, &self.inner.values),
        })
    }

    /// Evenness: vanishing on the odd basis elements, cross-checked against
    /// invariance under the grading automorphism. The two criteria are
    /// equivalent for homogeneous bases and both are computed.
    pub fn is_even(&self) -> bool {
        let scale = self.values_scale();
        let by_values = self.odd_value_magnitude() <= STATE_TOL * scale;
        let by_invariance = self.grading_invariance_defect() <= 2.0 * STATE_TOL * scale;
        debug_assert_eq!(by_values, by_invariance, "evenness criteria disagree");
        by_values && by_invariance
    }

    pub fn odd_value_magnitude(&self) -> f64 {
        let alg = &self.inner.algebra;
        (0..alg.basis_len())
            .filter(|&i| alg.grade(i) == crate::graded::Grade::Odd)
            .map(|i| self.inner.values[i].norm())
            .fold(0.0, f64::max)
    }

    /// max_i |phi(theta(b_i)) - phi(b_i)|
    pub fn grading_invariance_defect(&self) -> f64 {
        let alg = &self.inner.algebra;
        (0..alg.basis_len())
            .map(|i| {
                let g = alg.grade(i).sign();
                (self.inner.values[i] * Complex64::from(g) - self.inner.values[i]).norm()
            })
            .fold(0.0, f64::max)
    }

    fn values_scale(&self) -> f64 {
        self.inner.values.iter().map(|z| z.norm()).fold(1.0, f64::max)
    }

    pub fn to_json(&self, algebra_label: &str) -> StateJson {
        StateJson {
            algebra: algebra_label.to_string(),
            values: Some(json::vector_to_json(&self.inner.values)),
            density: None,
        }
    }
}

fn check_normalized(algebra: &GradedAlgebra, values: &CVec) -> Result<(), StateError> {
    let at_unit: Complex64 = algebra
        .identity_coeffs()
        .iter()
        .zip(values.iter())
        .map(|(c, v)| c * v)
        .sum();
    if (at_unit - Complex64::from(1.0)).norm() > STATE_TOL {
        return Err(StateError::NotNormalized(at_unit));
    }
    Ok(())
}

/// phi(b_i^*) = conj(tr(b_i W)) through the Riesz representative W of the
/// functional, so the check is a trace per basis element rather than a
/// star-table expansion.
fn check_hermitian(algebra: &GradedAlgebra, values: &CVec) -> Result<(), StateError> {
    let w = algebra.riesz_matrix(values);
    let d = algebra.ambient_dim();
    let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut worst = 0.0f64;
    for i in 0..algebra.basis_len() {
        let b = algebra.basis_matrix(i);
        let mut tr = Complex64::from(0.0);
        for p in 0..d {
            for q in 0..d {
                tr += b[(p, q)] * w[(q, p)];
            }
        }
        // |phi(b_i^*) - conj(phi(b_i))| = |tr(b_i W) - values_i|
        worst = worst.max((tr - values[i]).norm());
    }
    if worst > STATE_TOL * scale {
        return Err(StateError::NotHermitian(worst / scale));
    }
    Ok(())
}

/// G[i][j] = phi(b_i* b_j) from basis values, through the Riesz
/// representative of phi in the basis span: G = (stack of b_i W)^H stack.
fn gram_from_values(algebra: &GradedAlgebra, values: &CVec) -> CMat {
    let w = algebra.riesz_matrix(values);
    let n = algebra.basis_len();
    let d = algebra.ambient_dim();
    let mut left_stack = CMat::zeros(d * d, n);
    for i in 0..n {
        let left = algebra.basis_matrix(i) * &w;
        left_stack.set_column(i, &crate::linalg::vec_of(&left));
    }
    left_stack.adjoint() * algebra.stack()
}

/// G = stack^H (stack of b_j rho).
fn gram_from_density(algebra: &GradedAlgebra, rho: &CMat) -> CMat {
    let n = algebra.basis_len();
    let d = algebra.ambient_dim();
    let mut right_stack = CMat::zeros(d * d, n);
    for j in 0..n {
        let col = algebra.basis_matrix(j) * rho;
        right_stack.set_column(j, &crate::linalg::vec_of(&col));
    }
    algebra.stack().adjoint() * right_stack
}

/// Relative minimum eigenvalue of a (nearly) Hermitian Gram matrix.
pub fn psd_defect(gram: &CMat) -> f64 {
    let (eigs, _) = crate::linalg::herm_eigen(gram);
    let top = eigs[eigs.len() - 1].max(1e-300);
    eigs[0] / top
}

/// A random full-rank density on the ambient space, for sampled suites.
pub fn random_density<R: Rng>(dim: usize, rng: &mut R) -> CMat {
    let a = CMat::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)
    });
    let mut rho = &a * a.adjoint();
    for i in 0..dim {
        rho[(i, i)] += Complex64::from(1e-3);
    }
    let tr: Complex64 = (0..dim).map(|i| rho[(i, i)]).sum();
    rho.map(|z| z / tr)
}

/// A random (generally non-even) state from a random density.
pub fn random_state<R: Rng>(algebra: &GradedAlgebra, rng: &mut R) -> State {
    let rho = random_density(algebra.ambient_dim(), rng);
    State::from_density(algebra, &rho).expect("random density gives a valid state")
}

/// A random even state: the random state composed with the even conditional
/// expectation, which preserves positivity.
pub fn random_even_state<R: Rng>(algebra: &GradedAlgebra, rng: &mut R) -> State {
    let base = random_state(algebra, rng);
    let n = algebra.basis_len();
    let values = CVec::from_fn(n, |i, _| {
        if algebra.grade(i) == crate::graded::Grade::Even {
            base.value_at_basis(i)
        } else {
            Complex64::from(0.0)
        }
    });
    State::from_values(algebra, values).expect("projected state stays positive")
}

/// diag(t, 1 - t) as a state on a two-dimensional ambient algebra.
pub fn interval_state(algebra: &GradedAlgebra, t: f64) -> Result<State, StateError> {
    if algebra.ambient_dim() != 2 {
        return Err(StateError::InvalidDensity("interval states need ambient dimension 2".into()));
    }
    let rho = CMat::from_fn(2, 2, |i, j| {
        if i == 0 && j == 0 {
            Complex64::from(t)
        } else if i == 1 && j == 1 {
            Complex64::from(1.0 - t)
        } else {
            Complex64::from(0.0)
        }
    });
    State::from_density(algebra, &rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{random_element, seeded_rng, GradedAlgebra};
    use crate::linalg::cx;

    fn car1() -> GradedAlgebra {
        GradedAlgebra::preset("car(1)").unwrap()
    }

    #[test]
    fn diagonal_density_state_values() {
        let a = car1();
        let phi = interval_state(&a, 0.3).unwrap();
        assert!((phi.value_at_basis(0) - cx(0.3, 0.0)).norm() < 1e-14);
        assert!(phi.value_at_basis(1).norm() < 1e-14);
        assert!(phi.value_at_basis(2).norm() < 1e-14);
        assert!((phi.value_at_basis(3) - cx(0.7, 0.0)).norm() < 1e-14);
        assert!(phi.is_even());
    }

    #[test]
    fn unnormalized_values_rejected() {
        let a = car1();
        let mut values = CVec::zeros(4);
        values[0] = cx(1.0, 0.0);
        values[3] = cx(1.0, 0.0); // phi(1I) = 2
        let err = State::from_values(&a, values).unwrap_err();
        assert!(matches!(err, StateError::NotNormalized(_)));
    }

    #[test]
    fn plus_vector_state_is_not_even() {
        let a = car1();
        let xi = CVec::from_column_slice(&[cx(1.0, 0.0), cx(1.0, 0.0)]);
        let psi = State::vector_state(&a, &xi).unwrap();
        assert!((psi.value_at_basis(1) - cx(0.5, 0.0)).norm() < 1e-14);
        assert!(!psi.is_even());
    }

    #[test]
    fn trivially_graded_states_are_even() {
        let a = GradedAlgebra::preset("m2_trivial").unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..10 {
            let phi = random_state(&a, &mut rng);
            assert!(phi.is_even());
        }
    }

    #[test]
    fn random_states_have_psd_gram() {
        let a = car1();
        let mut rng = seeded_rng(9);
        for _ in 0..25 {
            let phi = random_state(&a, &mut rng);
            assert!(psd_defect(phi.gram()) >= -STATE_TOL);
        }
    }

    #[test]
    fn evenness_criteria_agree_on_samples() {
        let a = car1();
        let mut rng = seeded_rng(21);
        for k in 0..40 {
            let phi = if k % 2 == 0 {
                random_state(&a, &mut rng)
            } else {
                random_even_state(&a, &mut rng)
            };
            let scale = phi.values().iter().map(|z| z.norm()).fold(1.0, f64::max);
            let by_values = phi.odd_value_magnitude() <= STATE_TOL * scale;
            let by_inv = phi.grading_invariance_defect() <= 2.0 * STATE_TOL * scale;
            assert_eq!(by_values, by_inv);
        }
    }

    #[test]
    fn non_hermitian_values_rejected() {
        let a = car1();
        // phi(e21) must be the conjugate of phi(e12).
        let mut values = CVec::zeros(4);
        values[0] = cx(0.5, 0.0);
        values[3] = cx(0.5, 0.0);
        values[1] = cx(0.0, 0.5);
        values[2] = cx(0.0, 0.5);
        let err = State::from_values(&a, values).unwrap_err();
        assert!(matches!(err, StateError::NotHermitian(_)));
    }

    #[test]
    fn nonpositive_values_rejected() {
        let a = car1();
        // phi(e11)=1, phi(e22)=0, phi(e12)=phi(e21)=0.9: hermitian and
        // normalized but the 2x2 block [[1, .9], [.9, 0]] is indefinite.
        let mut values = CVec::zeros(4);
        values[0] = cx(1.0, 0.0);
        values[1] = cx(0.9, 0.0);
        values[2] = cx(0.9, 0.0);
        let err = State::from_values(&a, values).unwrap_err();
        assert!(matches!(err, StateError::NotPositive(_)));
    }

    #[test]
    fn state_values_linear_on_elements() {
        let a = car1();
        let mut rng = seeded_rng(31);
        let phi = random_state(&a, &mut rng);
        let x = random_element(&a, &mut rng);
        let y = random_element(&a, &mut rng);
        let lhs = phi.value_of(&x.add(&y));
        let rhs = phi.value_of(&x) + phi.value_of(&y);
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
