//! Finite-dimensional Z2-graded *-algebras realized as matrix subalgebras.
//!
//! An algebra is described by a homogeneous basis of ambient matrices plus a
//! self-adjoint unitary implementing the grading automorphism by conjugation.
//! All element arithmetic happens in the ambient matrix algebra and is
//! projected back to basis coordinates through the pseudo-inverse of the
//! basis Gram matrix, so bases need not be orthonormal.

use crate::json::{self, AlgebraJson, BasisElementJson};
use crate::linalg::{self, cx, frob_norm, identity, vec_of, CMat, CVec, ONE, ZERO};
use num_complex::Complex64;
use rand::Rng;
use std::fmt;
use std::sync::{Arc, OnceLock};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grade {
    Even,
    Odd,
}

impl Grade {
    pub fn sign(self) -> f64 {
        match self {
            Grade::Even => 1.0,
            Grade::Odd => -1.0,
        }
    }

    pub fn from_sign(s: i8) -> Option<Grade> {
        match s {
            1 => Some(Grade::Even),
            -1 => Some(Grade::Odd),
            _ => None,
        }
    }

    pub fn product(self, other: Grade) -> Grade {
        if self == other {
            Grade::Even
        } else {
            Grade::Odd
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grade::Even => write!(f, "+1"),
            Grade::Odd => write!(f, "-1"),
        }
    }
}

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("grading matrix is not a self-adjoint involution (deviation {0:.3e})")]
    GradingNotInvolutive(f64),
    #[error("basis element {index} is not homogeneous of its tagged grade (residual {residual:.3e})")]
    NotHomogeneous { index: usize, residual: f64 },
    #[error("operation leaves the basis span (relative residual {0:.3e})")]
    NotClosed(f64),
    #[error("identity coefficients do not reconstruct a two-sided unit (deviation {0:.3e})")]
    NoUnit(f64),
    #[error("basis is not linearly independent (Gram condition {0:.3e})")]
    DependentBasis(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("elements belong to different algebras")]
    AlgebraMismatch,
}

/// How thoroughly `build` verifies the span-closure axioms. Iterated tensor
/// products are closed by construction and get a seeded spot check once the
/// full pairwise sweep stops being affordable.
#[derive(Debug, Clone, Copy)]
pub enum ClosureCheck {
    Full,
    Sampled { pairs: usize, seed: u64 },
}

struct AlgebraInner {
    name: String,
    ambient_dim: usize,
    basis: Vec<CMat>,
    grades: Vec<Grade>,
    grading_unitary: CMat,
    identity_coeffs: CVec,
    identity_matrix: CMat,
    /// Columns are the stacked basis matrices; extraction solves against it.
    stack: CMat,
    extractor: Extractor,
    closure_tol: f64,
    star_table: OnceLock<Vec<CVec>>,
    mult_table: OnceLock<Vec<Vec<CVec>>>,
}

enum Extractor {
    /// Basis orthogonal under the Frobenius inner product: the Gram matrix is
    /// diagonal and extraction is a scaled adjoint application.
    Diagonal(Vec<f64>),
    Pinv(linalg::PsdPinv),
}

/// A matrix-realized Z2-graded *-algebra. Cheap to clone; all data is shared.
#[derive(Clone)]
pub struct GradedAlgebra {
    inner: Arc<AlgebraInner>,
}

impl fmt::Debug for GradedAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradedAlgebra")
            .field("name", &self.inner.name)
            .field("ambient_dim", &self.inner.ambient_dim)
            .field("basis_len", &self.inner.basis.len())
            .finish()
    }
}

pub const DEFAULT_CLOSURE_TOL: f64 = 1e-12;

impl GradedAlgebra {
    /// Validate and build an algebra from its raw description.
    pub fn build(
        name: impl Into<String>,
        basis: Vec<(CMat, Grade)>,
        grading_unitary: CMat,
        identity_coeffs: CVec,
        closure_tol: f64,
        check: ClosureCheck,
    ) -> Result<GradedAlgebra, AlgebraError> {
        Self::build_impl(name, basis, grading_unitary, identity_coeffs, closure_tol, check, None)
    }

    /// Like `build`, with the Frobenius Gram matrix of the basis supplied by
    /// the caller (tensor-product constructions assemble it from factor
    /// tables instead of one large matrix product). The Gram feeds the same
    /// independence checks either way.
    pub(crate) fn build_with_gram(
        name: impl Into<String>,
        basis: Vec<(CMat, Grade)>,
        grading_unitary: CMat,
        identity_coeffs: CVec,
        closure_tol: f64,
        check: ClosureCheck,
        gram: CMat,
    ) -> Result<GradedAlgebra, AlgebraError> {
        Self::build_impl(
            name,
            basis,
            grading_unitary,
            identity_coeffs,
            closure_tol,
            check,
            Some(gram),
        )
    }

    fn build_impl(
        name: impl Into<String>,
        basis: Vec<(CMat, Grade)>,
        grading_unitary: CMat,
        identity_coeffs: CVec,
        closure_tol: f64,
        check: ClosureCheck,
        gram: Option<CMat>,
    ) -> Result<GradedAlgebra, AlgebraError> {
        let name = name.into();
        if basis.is_empty() {
            return Err(AlgebraError::DimensionMismatch("empty basis".into()));
        }
        let d = basis[0].0.nrows();
        if d == 0 {
            return Err(AlgebraError::DimensionMismatch("zero ambient dimension".into()));
        }
        for (m, _) in &basis {
            if m.nrows() != d || m.ncols() != d {
                return Err(AlgebraError::DimensionMismatch(
                    "basis matrices must be square of a common dimension".into(),
                ));
            }
        }
        if grading_unitary.nrows() != d || grading_unitary.ncols() != d {
            return Err(AlgebraError::DimensionMismatch(
                "grading unitary dimension differs from the basis".into(),
            ));
        }
        let n = basis.len();
        if identity_coeffs.len() != n {
            return Err(AlgebraError::DimensionMismatch(
                "identity coefficient vector length differs from the basis size".into(),
            ));
        }

        // Self-adjoint involution.
        let v = &grading_unitary;
        let v_scale = frob_norm(v).max(1e-300);
        let sa = frob_norm(&(v - v.adjoint())) / v_scale;
        let invol = frob_norm(&(v * v - identity(d))) / v_scale.powi(2).max(1.0);
        if sa > 1e-12 || invol > 1e-12 {
            return Err(AlgebraError::GradingNotInvolutive(sa.max(invol)));
        }

        // Homogeneity of every basis element.
        for (i, (m, g)) in basis.iter().enumerate() {
            let conj = v * m * v;
            let expect = m.scale(g.sign());
            let resid = frob_norm(&(&conj - &expect)) / frob_norm(m).max(1e-300);
            if resid > 1e-12 {
                return Err(AlgebraError::NotHomogeneous { index: i, residual: resid });
            }
        }

        // Extraction machinery: stacked basis and its Gram matrix.
        let mats: Vec<CMat> = basis.iter().map(|(m, _)| m.clone()).collect();
        let grades: Vec<Grade> = basis.iter().map(|(_, g)| *g).collect();
        let mut stack = CMat::zeros(d * d, n);
        for (j, m) in mats.iter().enumerate() {
            stack.set_column(j, &vec_of(m));
        }
        let gram = gram.unwrap_or_else(|| stack.ad_mul(&stack));
        let extractor = build_extractor(n, &gram)?;

        let inner = AlgebraInner {
            name,
            ambient_dim: d,
            basis: mats,
            grades,
            grading_unitary,
            identity_matrix: CMat::zeros(d, d), // placeholder, fixed below
            identity_coeffs,
            stack,
            extractor,
            closure_tol,
            star_table: OnceLock::new(),
            mult_table: OnceLock::new(),
        };
        let mut inner = inner;
        let id_mat = reconstruct(&inner.basis, &inner.identity_coeffs);
        // Two-sided unit on all basis elements.
        let mut unit_dev = 0.0f64;
        for m in &inner.basis {
            let scale = frob_norm(m).max(1e-300);
            unit_dev = unit_dev.max(frob_norm(&(&id_mat * m - m)) / scale);
            unit_dev = unit_dev.max(frob_norm(&(m * &id_mat - m)) / scale);
        }
        if unit_dev > 1e-10 {
            return Err(AlgebraError::NoUnit(unit_dev));
        }
        inner.identity_matrix = id_mat;

        let alg = GradedAlgebra { inner: Arc::new(inner) };
        alg.check_closure(check)?;
        Ok(alg)
    }

    fn check_closure(&self, check: ClosureCheck) -> Result<(), AlgebraError> {
        let n = self.basis_len();
        let pairs: Vec<(usize, usize)> = match check {
            ClosureCheck::Full => (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect(),
            ClosureCheck::Sampled { pairs, seed } => {
                let mut rng = seeded_rng(seed);
                (0..pairs).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect()
            }
        };
        for &(i, j) in &pairs {
            let prod = self.basis_matrix(i) * self.basis_matrix(j);
            let scale = frob_norm(self.basis_matrix(i)) * frob_norm(self.basis_matrix(j));
            self.coeffs_of(&prod, scale)?;
        }
        let stars: Vec<usize> = match check {
            ClosureCheck::Full => (0..n).collect(),
            ClosureCheck::Sampled { pairs, seed } => {
                let mut rng = seeded_rng(seed ^ 0x5354_4152);
                (0..pairs.min(n)).map(|_| rng.gen_range(0..n)).collect()
            }
        };
        for &i in &stars {
            let adj = self.basis_matrix(i).adjoint();
            self.coeffs_of(&adj, frob_norm(self.basis_matrix(i)))?;
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn ambient_dim(&self) -> usize {
        self.inner.ambient_dim
    }

    pub fn basis_len(&self) -> usize {
        self.inner.basis.len()
    }

    pub fn basis_matrix(&self, i: usize) -> &CMat {
        &self.inner.basis[i]
    }

    pub fn grade(&self, i: usize) -> Grade {
        self.inner.grades[i]
    }

    pub fn grades(&self) -> &[Grade] {
        &self.inner.grades
    }

    pub fn grading_unitary(&self) -> &CMat {
        &self.inner.grading_unitary
    }

    pub fn identity_coeffs(&self) -> &CVec {
        &self.inner.identity_coeffs
    }

    pub fn identity_matrix(&self) -> &CMat {
        &self.inner.identity_matrix
    }

    pub fn closure_tol(&self) -> f64 {
        self.inner.closure_tol
    }

    /// Column-stacked basis matrices (ambient_dim^2 x basis_len).
    pub(crate) fn stack(&self) -> &CMat {
        &self.inner.stack
    }

    pub fn same_algebra(&self, other: &GradedAlgebra) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }

    /// Coefficients of `m` in the basis; `scale` sets the relative residual
    /// budget (typically a product of operand norms).
    pub fn coeffs_of(&self, m: &CMat, scale: f64) -> Result<CVec, AlgebraError> {
        let v = vec_of(m);
        let rhs = self.inner.stack.ad_mul(&v);
        let coeffs = match &self.inner.extractor {
            Extractor::Diagonal(inv) => CVec::from_iterator(
                inv.len(),
                rhs.iter().zip(inv.iter()).map(|(z, s)| z * cx(*s, 0.0)),
            ),
            Extractor::Pinv(p) => p.apply(&rhs),
        };
        let resid = (&self.inner.stack * &coeffs - &v).norm();
        let budget = self.inner.closure_tol * scale.max(1e-300);
        if resid > budget.max(1e-300) {
            return Err(AlgebraError::NotClosed(resid / scale.max(1e-300)));
        }
        Ok(coeffs)
    }

    pub fn matrix_of(&self, coeffs: &CVec) -> CMat {
        reconstruct(&self.inner.basis, coeffs)
    }

    pub fn element(&self, coeffs: CVec) -> Result<Element, AlgebraError> {
        if coeffs.len() != self.basis_len() {
            return Err(AlgebraError::DimensionMismatch(
                "coefficient vector length differs from the basis size".into(),
            ));
        }
        Ok(Element { algebra: self.clone(), coeffs })
    }

    /// Project an ambient matrix into the algebra, failing if it is not in
    /// the basis span.
    pub fn element_from_matrix(&self, m: &CMat) -> Result<Element, AlgebraError> {
        let coeffs = self.coeffs_of(m, frob_norm(m).max(1.0))?;
        self.element(coeffs)
    }

    pub fn basis_element(&self, i: usize) -> Element {
        let mut c = CVec::zeros(self.basis_len());
        c[i] = ONE;
        Element { algebra: self.clone(), coeffs: c }
    }

    pub fn identity_element(&self) -> Element {
        Element { algebra: self.clone(), coeffs: self.inner.identity_coeffs.clone() }
    }

    pub fn zero_element(&self) -> Element {
        Element { algebra: self.clone(), coeffs: CVec::zeros(self.basis_len()) }
    }

    /// Expansion of each adjoint basis element in the basis, cached.
    pub fn star_table(&self) -> &Vec<CVec> {
        self.inner.star_table.get_or_init(|| {
            (0..self.basis_len())
                .map(|i| {
                    let adj = self.basis_matrix(i).adjoint();
                    self.coeffs_of(&adj, frob_norm(self.basis_matrix(i)))
                        .expect("validated algebra is star-closed")
                })
                .collect()
        })
    }

    /// Expansion of the product b_i b_j in the basis. Cached as a full table
    /// for small bases; computed on demand above that.
    pub fn mul_coeffs(&self, i: usize, j: usize) -> CVec {
        let n = self.basis_len();
        if n <= 64 {
            let table = self.inner.mult_table.get_or_init(|| {
                (0..n)
                    .map(|a| {
                        (0..n)
                            .map(|b| {
                                let prod = self.basis_matrix(a) * self.basis_matrix(b);
                                let scale = frob_norm(self.basis_matrix(a))
                                    * frob_norm(self.basis_matrix(b));
                                self.coeffs_of(&prod, scale.max(1e-300))
                                    .expect("validated algebra is closed under products")
                            })
                            .collect()
                    })
                    .collect()
            });
            table[i][j].clone()
        } else {
            let prod = self.basis_matrix(i) * self.basis_matrix(j);
            let scale = frob_norm(self.basis_matrix(i)) * frob_norm(self.basis_matrix(j));
            self.coeffs_of(&prod, scale.max(1e-300))
                .expect("validated algebra is closed under products")
        }
    }

    /// Matrix of the grading automorphism in basis coordinates. Homogeneous
    /// bases make this diagonal.
    pub fn grading_basis_matrix(&self) -> CMat {
        let n = self.basis_len();
        CMat::from_fn(n, n, |i, j| if i == j { cx(self.grade(i).sign(), 0.0) } else { ZERO })
    }

    /// Riesz representative in the basis span of a values functional:
    /// phi(m) = tr(W^H m) for m in the span, with phi(b_i) = values[i].
    pub fn riesz_matrix(&self, values: &CVec) -> CMat {
        let rhs = CVec::from_iterator(values.len(), values.iter().map(|z| z.conj()));
        let coeffs = match &self.inner.extractor {
            Extractor::Diagonal(inv) => CVec::from_iterator(
                inv.len(),
                rhs.iter().zip(inv.iter()).map(|(z, s)| z * cx(*s, 0.0)),
            ),
            Extractor::Pinv(p) => p.apply(&rhs),
        };
        let v = &self.inner.stack * &coeffs;
        unvec(&v, self.ambient_dim())
    }

    pub fn count_grades(&self) -> (usize, usize) {
        let odd = self.inner.grades.iter().filter(|g| **g == Grade::Odd).count();
        (self.basis_len() - odd, odd)
    }

    /// True when the algebra looks like a single fermion mode in its
    /// standard form: ambient dimension two with a diagonal grading. The
    /// even states of such an algebra form an interval.
    pub fn has_interval_even_state_space(&self) -> bool {
        if self.ambient_dim() != 2 || self.basis_len() != 4 {
            return false;
        }
        let v = self.grading_unitary();
        let off = v[(0, 1)].norm().max(v[(1, 0)].norm());
        let (even, odd) = self.count_grades();
        off < 1e-12 && even == 2 && odd == 2
    }

    pub fn to_json(&self) -> AlgebraJson {
        AlgebraJson {
            name: self.inner.name.clone(),
            ambient_dim: self.ambient_dim(),
            basis: (0..self.basis_len())
                .map(|i| BasisElementJson {
                    grade: if self.grade(i) == Grade::Even { 1 } else { -1 },
                    matrix: json::matrix_to_json(self.basis_matrix(i)),
                })
                .collect(),
            grading_unitary: json::matrix_to_json(self.grading_unitary()),
            identity_coeffs: json::vector_to_json(self.identity_coeffs()),
        }
    }

    pub fn from_json(spec: &AlgebraJson, closure_tol: f64) -> Result<GradedAlgebra, AlgebraError> {
        let mut basis = Vec::with_capacity(spec.basis.len());
        for (i, b) in spec.basis.iter().enumerate() {
            let grade = Grade::from_sign(b.grade).ok_or_else(|| {
                AlgebraError::DimensionMismatch(format!("basis element {i} has grade {}", b.grade))
            })?;
            let m = json::matrix_from_json(&b.matrix).map_err(AlgebraError::DimensionMismatch)?;
            if m.nrows() != spec.ambient_dim {
                return Err(AlgebraError::DimensionMismatch(format!(
                    "basis element {i} does not match ambient_dim {}",
                    spec.ambient_dim
                )));
            }
            basis.push((m, grade));
        }
        let v = json::matrix_from_json(&spec.grading_unitary).map_err(AlgebraError::DimensionMismatch)?;
        let id = json::vector_from_json(&spec.identity_coeffs);
        GradedAlgebra::build(spec.name.clone(), basis, v, id, closure_tol, ClosureCheck::Full)
    }

    /// Named presets: `car(k)` for k <= 4, `m2_trivial`, `c2_swap`.
    ///
    /// Preset instances are cached, so repeated lookups hand back the same
    /// shared algebra and their elements interoperate.
    pub fn preset(name: &str) -> Result<GradedAlgebra, AlgebraError> {
        use std::collections::HashMap;
        use std::sync::Mutex;
        static CACHE: OnceLock<Mutex<HashMap<String, GradedAlgebra>>> = OnceLock::new();

        let trimmed = name.trim().to_string();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(found) = cache.lock().unwrap().get(&trimmed) {
            return Ok(found.clone());
        }
        let built = build_preset(&trimmed)?;
        cache.lock().unwrap().entry(trimmed).or_insert_with(|| built.clone());
        Ok(built)
    }
}

fn build_preset(trimmed: &str) -> Result<GradedAlgebra, AlgebraError> {
    if let Some(rest) = trimmed.strip_prefix("car(").and_then(|r| r.strip_suffix(')')) {
        let k: usize = rest
            .trim()
            .parse()
            .map_err(|_| AlgebraError::UnknownPreset(trimmed.to_string()))?;
        if k == 0 || k > 4 {
            return Err(AlgebraError::UnknownPreset(trimmed.to_string()));
        }
        return car_modes(k);
    }
    match trimmed {
        "m2_trivial" => m2_trivial(),
        "c2_swap" => c2_swap(),
        _ => Err(AlgebraError::UnknownPreset(trimmed.to_string())),
    }
}

fn build_extractor(n: usize, gram: &CMat) -> Result<Extractor, AlgebraError> {
    let mut off = 0.0f64;
    let mut diag_ok = true;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(gram[(i, j)].norm());
            }
        }
    }
    let scale = linalg::max_abs(gram).max(1e-300);
    if off > 1e-13 * scale {
        diag_ok = false;
    }
    if diag_ok {
        let mut inv = Vec::with_capacity(n);
        for i in 0..n {
            let d = gram[(i, i)].re;
            if d <= 1e-13 * scale {
                return Err(AlgebraError::DependentBasis(d / scale));
            }
            inv.push(1.0 / d);
        }
        Ok(Extractor::Diagonal(inv))
    } else {
        let pinv = linalg::PsdPinv::new(gram, 1e-13);
        if pinv.rank < n {
            return Err(AlgebraError::DependentBasis(
                pinv.min_eigenvalue() / pinv.max_eigenvalue().max(1e-300),
            ));
        }
        Ok(Extractor::Pinv(pinv))
    }
}

fn reconstruct(basis: &[CMat], coeffs: &CVec) -> CMat {
    let d = basis[0].nrows();
    let mut out = CMat::zeros(d, d);
    for (m, c) in basis.iter().zip(coeffs.iter()) {
        if c.norm() != 0.0 {
            out += m.scale_complex(*c);
        }
    }
    out
}

fn unvec(v: &CVec, d: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| v[j * d + i])
}

trait ScaleComplex {
    fn scale_complex(&self, c: Complex64) -> CMat;
}

impl ScaleComplex for CMat {
    fn scale_complex(&self, c: Complex64) -> CMat {
        self.map(|z| z * c)
    }
}

pub(crate) fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// An element of a graded algebra: a coefficient vector over its basis.
#[derive(Clone)]
pub struct Element {
    algebra: GradedAlgebra,
    coeffs: CVec,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Element[{}]{:?}", self.algebra.name(), self.coeffs.as_slice())
    }
}

impl Element {
    pub fn algebra(&self) -> &GradedAlgebra {
        &self.algebra
    }

    pub fn coeffs(&self) -> &CVec {
        &self.coeffs
    }

    pub fn matrix(&self) -> CMat {
        self.algebra.matrix_of(&self.coeffs)
    }

    pub fn frobenius_norm(&self) -> f64 {
        frob_norm(&self.matrix())
    }

    pub fn operator_norm(&self) -> f64 {
        linalg::op_norm(&self.matrix())
    }

    pub fn scale(&self, c: Complex64) -> Element {
        Element {
            algebra: self.algebra.clone(),
            coeffs: CVec::from_iterator(self.coeffs.len(), self.coeffs.iter().map(|z| z * c)),
        }
    }

    pub fn add(&self, other: &Element) -> Element {
        assert!(self.algebra.same_algebra(&other.algebra), "elements from different algebras");
        Element { algebra: self.algebra.clone(), coeffs: &self.coeffs + &other.coeffs }
    }

    pub fn sub(&self, other: &Element) -> Element {
        assert!(self.algebra.same_algebra(&other.algebra), "elements from different algebras");
        Element { algebra: self.algebra.clone(), coeffs: &self.coeffs - &other.coeffs }
    }

    /// Ambient product projected back to basis coordinates.
    pub fn multiply(&self, other: &Element) -> Result<Element, AlgebraError> {
        if !self.algebra.same_algebra(&other.algebra) {
            return Err(AlgebraError::AlgebraMismatch);
        }
        let prod = self.matrix() * other.matrix();
        let scale = self.frobenius_norm() * other.frobenius_norm();
        let coeffs = self.algebra.coeffs_of(&prod, scale.max(1e-300))?;
        Ok(Element { algebra: self.algebra.clone(), coeffs })
    }

    pub fn star(&self) -> Result<Element, AlgebraError> {
        let adj = self.matrix().adjoint();
        let coeffs = self.algebra.coeffs_of(&adj, self.frobenius_norm().max(1e-300))?;
        Ok(Element { algebra: self.algebra.clone(), coeffs })
    }

    /// The grading automorphism Ad(v). Exact on coefficients because the
    /// basis is homogeneous.
    pub fn grading_apply(&self) -> Element {
        let coeffs = CVec::from_iterator(
            self.coeffs.len(),
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, z)| z * cx(self.algebra.grade(i).sign(), 0.0)),
        );
        Element { algebra: self.algebra.clone(), coeffs }
    }

    /// Decomposition x = x_+ + x_- into grading eigenvectors.
    pub fn grade_split(&self) -> (Element, Element) {
        let n = self.coeffs.len();
        let mut even = CVec::zeros(n);
        let mut odd = CVec::zeros(n);
        for i in 0..n {
            match self.algebra.grade(i) {
                Grade::Even => even[i] = self.coeffs[i],
                Grade::Odd => odd[i] = self.coeffs[i],
            }
        }
        (
            Element { algebra: self.algebra.clone(), coeffs: even },
            Element { algebra: self.algebra.clone(), coeffs: odd },
        )
    }

    /// Conditional expectation onto the even part, (id + theta)/2.
    pub fn even_expectation(&self) -> Element {
        self.grade_split().0
    }

    /// Grade of a homogeneous element; `None` when both parts are present.
    /// The zero element reports even.
    pub fn homogeneous_grade(&self) -> Option<Grade> {
        let (even, odd) = self.grade_split();
        let scale = frob_norm(&self.matrix());
        let e = frob_norm(&even.matrix());
        let o = frob_norm(&odd.matrix());
        if scale == 0.0 {
            return Some(Grade::Even);
        }
        if o <= 1e-12 * scale {
            Some(Grade::Even)
        } else if e <= 1e-12 * scale {
            Some(Grade::Odd)
        } else {
            None
        }
    }
}

/// A random element with coefficients uniform in the complex unit square,
/// for property suites.
pub fn random_element<R: Rng>(algebra: &GradedAlgebra, rng: &mut R) -> Element {
    let n = algebra.basis_len();
    let coeffs = CVec::from_iterator(
        n,
        (0..n).map(|_| cx(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0)),
    );
    Element { algebra: algebra.clone(), coeffs }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

fn matrix_unit(d: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, j)] = ONE;
    m
}

fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, cx(-1.0, 0.0)])
}

/// Single-mode letters: e11, e12, e21, e22 with grades +, -, -, +.
fn mode_letters() -> Vec<(CMat, Grade)> {
    vec![
        (matrix_unit(2, 0, 0), Grade::Even),
        (matrix_unit(2, 0, 1), Grade::Odd),
        (matrix_unit(2, 1, 0), Grade::Odd),
        (matrix_unit(2, 1, 1), Grade::Even),
    ]
}

/// k fermion modes realized by Jordan–Wigner strings in M_{2^k}: the basis
/// element of a letter word carries a Z string on each site for the parity of
/// the odd letters to its right, and the grading unitary is Z^{tensor k}.
fn car_modes(k: usize) -> Result<GradedAlgebra, AlgebraError> {
    let letters = mode_letters();
    let z = pauli_z();
    let n = 4usize.pow(k as u32);
    let mut basis = Vec::with_capacity(n);
    for word_idx in 0..n {
        let word = digits(word_idx, 4, k);
        let mut grade = Grade::Even;
        for &l in &word {
            grade = grade.product(letters[l].1);
        }
        // Parity of odd letters strictly to the right of each site.
        let mut mat: Option<CMat> = None;
        for (s, &l) in word.iter().enumerate() {
            let mut tail_odd = false;
            for &t in &word[s + 1..] {
                if letters[t].1 == Grade::Odd {
                    tail_odd = !tail_odd;
                }
            }
            let site = if tail_odd { &letters[l].0 * &z } else { letters[l].0.clone() };
            mat = Some(match mat {
                None => site,
                Some(acc) => acc.kronecker(&site),
            });
        }
        basis.push((mat.unwrap(), grade));
    }
    let mut v = pauli_z();
    for _ in 1..k {
        v = v.kronecker(&pauli_z());
    }
    // Identity = tensor power of e11 + e22: coefficient one on words whose
    // letters are all e11 or e22.
    let mut id = CVec::zeros(n);
    for word_idx in 0..n {
        let word = digits(word_idx, 4, k);
        if word.iter().all(|&l| l == 0 || l == 3) {
            id[word_idx] = ONE;
        }
    }
    let check = if n <= 64 {
        ClosureCheck::Full
    } else {
        ClosureCheck::Sampled { pairs: 256, seed: 0x4a57 }
    };
    GradedAlgebra::build(format!("car({k})"), basis, v, id, DEFAULT_CLOSURE_TOL, check)
}

fn digits(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for s in (0..len).rev() {
        out[s] = idx % base;
        idx /= base;
    }
    out
}

fn m2_trivial() -> Result<GradedAlgebra, AlgebraError> {
    let basis = vec![
        (matrix_unit(2, 0, 0), Grade::Even),
        (matrix_unit(2, 0, 1), Grade::Even),
        (matrix_unit(2, 1, 0), Grade::Even),
        (matrix_unit(2, 1, 1), Grade::Even),
    ];
    let mut id = CVec::zeros(4);
    id[0] = ONE;
    id[3] = ONE;
    GradedAlgebra::build("m2_trivial", basis, identity(2), id, DEFAULT_CLOSURE_TOL, ClosureCheck::Full)
}

/// The diagonal algebra in M_2 with the grading that swaps the two summands.
/// The homogeneous basis is {1, diag(1, -1)} and the implementing unitary is
/// the symmetric antidiagonal flip, which lies outside the algebra.
fn c2_swap() -> Result<GradedAlgebra, AlgebraError> {
    let one = identity(2);
    let sigma3 = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, cx(-1.0, 0.0)]);
    let flip = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let basis = vec![(one, Grade::Even), (sigma3, Grade::Odd)];
    let mut id = CVec::zeros(2);
    id[0] = ONE;
    GradedAlgebra::build("c2_swap", basis, flip, id, DEFAULT_CLOSURE_TOL, ClosureCheck::Full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_vec;

    fn car1() -> GradedAlgebra {
        GradedAlgebra::preset("car(1)").unwrap()
    }

    #[test]
    fn car1_preset_is_valid_and_graded() {
        let a = car1();
        assert_eq!(a.ambient_dim(), 2);
        assert_eq!(a.basis_len(), 4);
        assert_eq!(a.grades(), &[Grade::Even, Grade::Odd, Grade::Odd, Grade::Even]);
        let (even, odd) = a.count_grades();
        assert_eq!((even, odd), (2, 2));
    }

    #[test]
    fn trivially_graded_m2_is_valid() {
        let a = GradedAlgebra::preset("m2_trivial").unwrap();
        assert!(a.grades().iter().all(|g| *g == Grade::Even));
    }

    #[test]
    fn single_offdiagonal_basis_is_not_closed() {
        let basis = vec![(matrix_unit(2, 0, 1), Grade::Odd)];
        let mut id = CVec::zeros(1);
        id[0] = ONE;
        let err = GradedAlgebra::build(
            "bad",
            basis,
            pauli_z(),
            id,
            DEFAULT_CLOSURE_TOL,
            ClosureCheck::Full,
        )
        .unwrap_err();
        // e12 alone has no unit, and e12 * e12^H leaves the span.
        assert!(matches!(err, AlgebraError::NotClosed(_) | AlgebraError::NoUnit(_)));
    }

    #[test]
    fn missing_unit_rejected() {
        // e11 is only a left unit for e12, so this span has no two-sided
        // unit reachable from the declared coefficients.
        let basis = vec![(matrix_unit(2, 0, 0), Grade::Even), (matrix_unit(2, 0, 1), Grade::Odd)];
        let mut id = CVec::zeros(2);
        id[0] = ONE;
        let err = GradedAlgebra::build(
            "bad",
            basis,
            pauli_z(),
            id,
            DEFAULT_CLOSURE_TOL,
            ClosureCheck::Full,
        )
        .unwrap_err();
        assert!(matches!(err, AlgebraError::NoUnit(_)));
    }

    #[test]
    fn non_unitary_grading_rejected() {
        let basis = mode_letters();
        let mut id = CVec::zeros(4);
        id[0] = ONE;
        id[3] = ONE;
        let v = CMat::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        let err =
            GradedAlgebra::build("bad", basis, v, id, DEFAULT_CLOSURE_TOL, ClosureCheck::Full)
                .unwrap_err();
        assert!(matches!(err, AlgebraError::GradingNotInvolutive(_)));
    }

    #[test]
    fn grade_split_on_general_matrix() {
        let a = car1();
        let m = CMat::from_row_slice(2, 2, &[cx(1.0, 0.0), cx(2.0, -1.0), cx(0.5, 0.5), cx(3.0, 0.0)]);
        let x = a.element_from_matrix(&m).unwrap();
        let (even, odd) = x.grade_split();
        let e = even.matrix();
        let o = odd.matrix();
        assert!((e[(0, 0)] - cx(1.0, 0.0)).norm() < 1e-14);
        assert!((e[(1, 1)] - cx(3.0, 0.0)).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-14 && e[(1, 0)].norm() < 1e-14);
        assert!((o[(0, 1)] - cx(2.0, -1.0)).norm() < 1e-14);
        assert!((o[(1, 0)] - cx(0.5, 0.5)).norm() < 1e-14);
        let back = even.add(&odd);
        assert!(max_abs_vec(&(back.coeffs() - x.coeffs())) < 1e-14);
    }

    #[test]
    fn even_element_splits_trivially() {
        let a = car1();
        let x = a.basis_element(0); // e11
        let (even, odd) = x.grade_split();
        assert!(max_abs_vec(&(even.coeffs() - x.coeffs())) < 1e-15);
        assert!(max_abs_vec(odd.coeffs()) < 1e-15);
    }

    #[test]
    fn expectation_kills_odd_and_fixes_even() {
        let a = car1();
        assert!(max_abs_vec(a.basis_element(1).even_expectation().coeffs()) < 1e-15);
        let e11 = a.basis_element(0);
        assert!(max_abs_vec(&(e11.even_expectation().coeffs() - e11.coeffs())) < 1e-15);
    }

    #[test]
    fn expectation_is_idempotent_on_random_elements() {
        let a = car1();
        let mut rng = seeded_rng(11);
        for _ in 0..100 {
            let x = random_element(&a, &mut rng);
            let once = x.even_expectation();
            let twice = once.even_expectation();
            assert!(max_abs_vec(&(once.coeffs() - twice.coeffs())) < 1e-14);
            // E circ theta = E = theta circ E
            let via_theta = x.grading_apply().even_expectation();
            assert!(max_abs_vec(&(once.coeffs() - via_theta.coeffs())) < 1e-14);
            let theta_after = once.grading_apply();
            assert!(max_abs_vec(&(once.coeffs() - theta_after.coeffs())) < 1e-14);
        }
    }

    #[test]
    fn multiplication_and_star_on_matrix_units() {
        let a = car1();
        let e12 = a.basis_element(1);
        let e21 = a.basis_element(2);
        let prod = e12.multiply(&e21).unwrap();
        let e11 = a.basis_element(0);
        assert!(max_abs_vec(&(prod.coeffs() - e11.coeffs())) < 1e-13);
        let star = e12.star().unwrap();
        assert!(max_abs_vec(&(star.coeffs() - e21.coeffs())) < 1e-13);
        let flipped = e12.grading_apply();
        assert!(max_abs_vec(&(flipped.coeffs() + e12.coeffs())) < 1e-15);
    }

    #[test]
    fn homogeneity_detection() {
        let a = car1();
        assert_eq!(a.basis_element(1).homogeneous_grade(), Some(Grade::Odd));
        assert_eq!(a.basis_element(0).homogeneous_grade(), Some(Grade::Even));
        let mixed = a.basis_element(0).add(&a.basis_element(1));
        assert_eq!(mixed.homogeneous_grade(), None);
        assert_eq!(a.zero_element().homogeneous_grade(), Some(Grade::Even));
    }

    #[test]
    fn grading_is_star_automorphism_on_random_pairs() {
        let a = car1();
        let mut rng = seeded_rng(5);
        for _ in 0..50 {
            let x = random_element(&a, &mut rng);
            let y = random_element(&a, &mut rng);
            let lhs = x.multiply(&y).unwrap().grading_apply();
            let rhs = x.grading_apply().multiply(&y.grading_apply()).unwrap();
            assert!(max_abs_vec(&(lhs.coeffs() - rhs.coeffs())) < 1e-12);
            let ls = x.star().unwrap().grading_apply();
            let rs = x.grading_apply().star().unwrap();
            assert!(max_abs_vec(&(ls.coeffs() - rs.coeffs())) < 1e-12);
            let twice = x.grading_apply().grading_apply();
            assert!(max_abs_vec(&(twice.coeffs() - x.coeffs())) < 1e-15);
        }
    }

    #[test]
    fn expectation_bimodule_property() {
        let a = car1();
        let mut rng = seeded_rng(17);
        for _ in 0..50 {
            let x = random_element(&a, &mut rng);
            let ae = random_element(&a, &mut rng).even_expectation();
            let be = random_element(&a, &mut rng).even_expectation();
            let lhs = ae.multiply(&x).unwrap().multiply(&be).unwrap().even_expectation();
            let rhs = ae.multiply(&x.even_expectation()).unwrap().multiply(&be).unwrap();
            assert!(max_abs_vec(&(lhs.coeffs() - rhs.coeffs())) < 1e-12);
        }
    }

    #[test]
    fn associativity_and_involution_on_random_elements() {
        let a = car1();
        let mut rng = seeded_rng(23);
        for _ in 0..50 {
            let x = random_element(&a, &mut rng);
            let y = random_element(&a, &mut rng);
            let z = random_element(&a, &mut rng);
            let l = x.multiply(&y).unwrap().multiply(&z).unwrap();
            let r = x.multiply(&y.multiply(&z).unwrap()).unwrap();
            assert!(max_abs_vec(&(l.coeffs() - r.coeffs())) < 1e-11);
            let anti = x.multiply(&y).unwrap().star().unwrap();
            let anti2 = y.star().unwrap().multiply(&x.star().unwrap()).unwrap();
            assert!(max_abs_vec(&(anti.coeffs() - anti2.coeffs())) < 1e-11);
            let dd = x.star().unwrap().star().unwrap();
            assert!(max_abs_vec(&(dd.coeffs() - x.coeffs())) < 1e-12);
        }
    }

    #[test]
    fn c2_swap_grades() {
        let a = GradedAlgebra::preset("c2_swap").unwrap();
        assert_eq!(a.basis_len(), 2);
        assert_eq!(a.grade(1), Grade::Odd);
        // diag(1,-1) anticommutes with the flip.
        let x = a.basis_element(1);
        assert_eq!(x.homogeneous_grade(), Some(Grade::Odd));
    }

    #[test]
    fn car2_word_count_and_info() {
        let a = GradedAlgebra::preset("car(2)").unwrap();
        assert_eq!(a.ambient_dim(), 4);
        assert_eq!(a.basis_len(), 16);
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!(matches!(
            GradedAlgebra::preset("car(9)"),
            Err(AlgebraError::UnknownPreset(_))
        ));
        assert!(matches!(GradedAlgebra::preset("nope"), Err(AlgebraError::UnknownPreset(_))));
    }

    #[test]
    fn json_round_trip() {
        let a = car1();
        let spec = a.to_json();
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let parsed: AlgebraJson = serde_json::from_str(&text).unwrap();
        let b = GradedAlgebra::from_json(&parsed, DEFAULT_CLOSURE_TOL).unwrap();
        assert_eq!(b.basis_len(), 4);
        for i in 0..4 {
            assert_eq!(a.grade(i), b.grade(i));
            assert!(max_abs_vec(&(vec_of(a.basis_matrix(i)) - vec_of(b.basis_matrix(i)))) < 1e-15);
        }
    }
}
