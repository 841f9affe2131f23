//! Finite truncations of the infinite Fermi tensor power of a single graded
//! algebra: word-indexed arithmetic, site embeddings, the signed action of
//! the finite symmetric group, block-swap mixing permutations, and lazily
//! evaluated states on the power.
//!
//! Elements are sparse formal sums over letter words. The Koszul sign of a
//! word operation is the parity of the odd-odd crossings it performs, which
//! is what the adjacent flip (a (F) b -> -(b (F) a) for odd a, b) extends to.
//! A dense Klein-model algebra is materialized alongside while the ambient
//! storage stays small, and the word arithmetic is cross-checked against it
//! in the test suites.

use crate::fermi::FermiProduct;
use crate::graded::{Element, Grade, GradedAlgebra};
use crate::linalg::{cx, CMat, CVec, ONE, ZERO};
use crate::state::State;
use num_complex::Complex64;
use rand::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

/// Default cap on the number of product basis words.
pub const DEFAULT_WORD_BUDGET: usize = 65536;
/// Ambient matrices are materialized while basis_count * ambient_dim^2 stays
/// below this many complex entries.
const DENSE_ENTRY_CAP: usize = 1 << 21;
/// Exact S_n enumeration cutoff; sampling takes over above it.
pub const EXACT_GROUP_CUTOFF: usize = 8;

#[derive(Debug, Error)]
pub enum PowerError {
    #[error("site index {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("requested power needs {needed} basis words, over the budget {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("mixing step {step} needs at least {needed} sites, have {sites}")]
    InsufficientSites { step: usize, needed: usize, sites: usize },
    #[error("product state factors must all be even")]
    NotEvenFactor,
    #[error("images do not form a bijection of the sites")]
    NotBijective,
    #[error("dense ambient realization unavailable at this size")]
    DenseUnavailable,
    #[error(transparent)]
    Algebra(#[from] crate::graded::AlgebraError),
    #[error(transparent)]
    State(#[from] crate::state::StateError),
    #[error(transparent)]
    Product(#[from] crate::fermi::ProductError),
}

/// A finite permutation given by its image vector. Serializes as the plain
/// image array.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
#[serde(transparent)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Permutation, PowerError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(PowerError::NotBijective);
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Permutation {
        Permutation { images: (0..n).collect() }
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Permutation {
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(a, b);
        Permutation { images }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, s: usize) -> usize {
        self.images[s]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// (self o other)(s) = self(other(s))
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len());
        Permutation { images: other.images.iter().map(|&s| self.images[s]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.len()];
        for (s, &t) in self.images.iter().enumerate() {
            images[t] = s;
        }
        Permutation { images }
    }

    /// A decomposition g = s_{j_r} o ... o s_{j_1} into adjacent
    /// transpositions, returned in application order j_1, ..., j_r.
    /// Bubble-sorting the image vector performs g^{-1} as a product of
    /// adjacent swaps, so the swaps in sort order build up g when the
    /// corresponding flips act one after another.
    pub fn adjacent_decomposition(&self) -> Vec<usize> {
        let mut work = self.images.clone();
        let mut flips = Vec::new();
        let n = work.len();
        for i in 0..n {
            for j in 0..n.saturating_sub(i + 1) {
                if work[j] > work[j + 1] {
                    work.swap(j, j + 1);
                    flips.push(j);
                }
            }
        }
        flips
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Permutation {
        let mut images: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            images.swap(i, j);
        }
        Permutation { images }
    }
}

/// Visit every permutation of n sites (Heap's algorithm).
pub fn for_each_permutation<F: FnMut(&Permutation)>(n: usize, mut f: F) {
    let mut images: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&Permutation { images: images.clone() });
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                images.swap(0, i);
            } else {
                images.swap(c[i], i);
            }
            f(&Permutation { images: images.clone() });
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

pub fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

/// The block-swap mixing permutation: exchanges [0, 2^m) with [2^m, 2^{m+1})
/// and fixes everything else. Half-open blocks keep the map bijective.
pub fn mixing_permutation(m: u32, sites: usize) -> Result<Permutation, PowerError> {
    let block = 1usize << m;
    let needed = 2 * block;
    if needed > sites {
        return Err(PowerError::InsufficientSites { step: m as usize, needed, sites });
    }
    let images = (0..sites)
        .map(|k| {
            if k < block {
                k + block
            } else if k < 2 * block {
                k - block
            } else {
                k
            }
        })
        .collect();
    Permutation::new(images)
}

/// A sparse formal sum of basis words of a fixed number of sites.
#[derive(Debug, Clone)]
pub struct PowerElement {
    sites: usize,
    terms: BTreeMap<Vec<usize>, Complex64>,
}

impl PowerElement {
    pub fn zero(sites: usize) -> PowerElement {
        PowerElement { sites, terms: BTreeMap::new() }
    }

    pub fn word(sites: usize, word: Vec<usize>, coeff: Complex64) -> PowerElement {
        assert_eq!(word.len(), sites);
        let mut terms = BTreeMap::new();
        if coeff.norm() != 0.0 {
            terms.insert(word, coeff);
        }
        PowerElement { sites, terms }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Complex64)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    fn push(&mut self, word: Vec<usize>, coeff: Complex64) {
        if coeff.norm() == 0.0 {
            return;
        }
        let entry = self.terms.entry(word).or_insert(Complex64::from(0.0));
        *entry += coeff;
    }

    fn prune(mut self, floor: f64) -> PowerElement {
        self.terms.retain(|_, c| c.norm() > floor);
        self
    }

    pub fn add(&self, other: &PowerElement) -> PowerElement {
        assert_eq!(self.sites, other.sites);
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.push(w.clone(), *c);
        }
        out.prune(0.0)
    }

    pub fn sub(&self, other: &PowerElement) -> PowerElement {
        self.add(&other.scale(cx(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> PowerElement {
        let mut out = PowerElement::zero(self.sites);
        for (w, x) in &self.terms {
            out.push(w.clone(), x * c);
        }
        out
    }

    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// A finite Fermi tensor power of a site algebra.
///
/// The dense Klein-model algebra is materialized lazily on first use and
/// only while the ambient storage stays small; the word-level operations
/// never need it.
#[derive(Clone)]
pub struct FermiPower {
    site: GradedAlgebra,
    sites: usize,
    dense: std::sync::Arc<std::sync::OnceLock<Option<GradedAlgebra>>>,
}

impl std::fmt::Debug for FermiPower {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FermiPower")
            .field("site", &self.site.name())
            .field("sites", &self.sites)
            .finish()
    }
}

impl FermiPower {
    pub fn new(site: &GradedAlgebra, sites: usize) -> Result<FermiPower, PowerError> {
        FermiPower::with_budget(site, sites, DEFAULT_WORD_BUDGET)
    }

    pub fn with_budget(
        site: &GradedAlgebra,
        sites: usize,
        budget: usize,
    ) -> Result<FermiPower, PowerError> {
        if sites == 0 {
            return Err(PowerError::SiteOutOfRange { site: 0, sites: 0 });
        }
        let n = site.basis_len();
        let mut words: usize = 1;
        for _ in 0..sites {
            words = words.saturating_mul(n);
            if words > budget {
                return Err(PowerError::BudgetExceeded { needed: words, budget });
            }
        }
        Ok(FermiPower {
            site: site.clone(),
            sites,
            dense: std::sync::Arc::new(std::sync::OnceLock::new()),
        })
    }

    pub fn site(&self) -> &GradedAlgebra {
        &self.site
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn word_count(&self) -> usize {
        self.site.basis_len().pow(self.sites as u32)
    }

    /// The Klein-model ambient algebra, when small enough to exist.
    pub fn dense(&self) -> Option<&GradedAlgebra> {
        self.dense
            .get_or_init(|| {
                let d = self.site.ambient_dim();
                let mut ambient: usize = 1;
                for _ in 0..self.sites {
                    ambient = ambient.saturating_mul(d);
                }
                let entries = self
                    .word_count()
                    .saturating_mul(ambient)
                    .saturating_mul(ambient);
                if entries > DENSE_ENTRY_CAP {
                    return None;
                }
                let mut acc = self.site.clone();
                for _ in 1..self.sites {
                    match FermiProduct::new(&acc, &self.site) {
                        Ok(fp) => acc = fp.algebra().clone(),
                        Err(_) => return None,
                    }
                }
                Some(acc)
            })
            .as_ref()
    }

    pub fn require_dense(&self) -> Result<&GradedAlgebra, PowerError> {
        self.dense().ok_or(PowerError::DenseUnavailable)
    }

    /// Left-nested (big-endian) word index in the dense basis.
    pub fn word_index(&self, word: &[usize]) -> usize {
        let n = self.site.basis_len();
        word.iter().fold(0, |acc, &l| acc * n + l)
    }

    pub fn index_word(&self, mut idx: usize) -> Vec<usize> {
        let n = self.site.basis_len();
        let mut word = vec![0; self.sites];
        for s in (0..self.sites).rev() {
            word[s] = idx % n;
            idx /= n;
        }
        word
    }

    pub fn word_grade(&self, word: &[usize]) -> Grade {
        let mut g = Grade::Even;
        for &l in word {
            g = g.product(self.site.grade(l));
        }
        g
    }

    fn odd_letter(&self, l: usize) -> bool {
        self.site.grade(l) == Grade::Odd
    }

    /// The unit as a formal sum (identity expansion at every site).
    pub fn identity_element(&self) -> PowerElement {
        let id = self.site.identity_coeffs();
        let mut out = PowerElement::zero(self.sites);
        let mut stack: Vec<(Vec<usize>, Complex64)> = vec![(Vec::new(), ONE)];
        for _ in 0..self.sites {
            let mut next = Vec::new();
            for (w, c) in &stack {
                for (l, idc) in id.iter().enumerate() {
                    if idc.norm() == 0.0 {
                        continue;
                    }
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.push((w2, c * idc));
                }
            }
            stack = next;
        }
        for (w, c) in stack {
            out.push(w, c);
        }
        out
    }

    /// a at slot j, units elsewhere.
    pub fn embed_site(&self, a: &Element, j: usize) -> Result<PowerElement, PowerError> {
        if j >= self.sites {
            return Err(PowerError::SiteOutOfRange { site: j, sites: self.sites });
        }
        assert!(a.algebra().same_algebra(&self.site), "element lives on a different site algebra");
        let id = self.site.identity_coeffs();
        let mut stack: Vec<(Vec<usize>, Complex64)> = vec![(Vec::new(), ONE)];
        for s in 0..self.sites {
            let letter_coeffs: Vec<(usize, Complex64)> = if s == j {
                a.coeffs().iter().enumerate().filter(|(_, c)| c.norm() != 0.0).map(|(l, c)| (l, *c)).collect()
            } else {
                id.iter().enumerate().filter(|(_, c)| c.norm() != 0.0).map(|(l, c)| (l, *c)).collect()
            };
            let mut next = Vec::with_capacity(stack.len() * letter_coeffs.len());
            for (w, c) in &stack {
                for (l, lc) in &letter_coeffs {
                    let mut w2 = w.clone();
                    w2.push(*l);
                    next.push((w2, c * lc));
                }
            }
            stack = next;
        }
        let mut out = PowerElement::zero(self.sites);
        for (w, c) in stack {
            out.push(w, c);
        }
        Ok(out)
    }

    /// The elementary word a_0 (F) ... (F) a_{n-1} from site elements.
    pub fn elementary(&self, factors: &[Element]) -> PowerElement {
        assert_eq!(factors.len(), self.sites);
        let mut stack: Vec<(Vec<usize>, Complex64)> = vec![(Vec::new(), ONE)];
        for a in factors {
            assert!(a.algebra().same_algebra(&self.site));
            let mut next = Vec::new();
            for (w, c) in &stack {
                for (l, lc) in a.coeffs().iter().enumerate() {
                    if lc.norm() == 0.0 {
                        continue;
                    }
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.push((w2, c * lc));
                }
            }
            stack = next;
        }
        let mut out = PowerElement::zero(self.sites);
        for (w, c) in stack {
            out.push(w, c);
        }
        out
    }

    /// Koszul sign of multiplying basis words u * w: one crossing for every
    /// pair (t < s) with w_t odd and u_s odd.
    fn product_sign(&self, u: &[usize], w: &[usize]) -> f64 {
        let mut crossings = 0usize;
        let mut odd_u_suffix = vec![0usize; self.sites + 1];
        for s in (0..self.sites).rev() {
            odd_u_suffix[s] = odd_u_suffix[s + 1] + usize::from(self.odd_letter(u[s]));
        }
        for t in 0..self.sites {
            if self.odd_letter(w[t]) {
                crossings += odd_u_suffix[t + 1];
            }
        }
        if crossings.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Formal product through per-site structure constants and the crossing
    /// sign. Independent of the dense ambient model.
    pub fn multiply(&self, x: &PowerElement, y: &PowerElement) -> PowerElement {
        assert_eq!(x.sites, self.sites);
        assert_eq!(y.sites, self.sites);
        let mut out = PowerElement::zero(self.sites);
        for (u, cu) in &x.terms {
            for (w, cw) in &y.terms {
                let sign = self.product_sign(u, w);
                let base = cu * cw * cx(sign, 0.0);
                // Cartesian expansion of the per-site products.
                let mut stack: Vec<(Vec<usize>, Complex64)> = vec![(Vec::new(), base)];
                for s in 0..self.sites {
                    let expansion = self.site.mul_coeffs(u[s], w[s]);
                    let mut next = Vec::new();
                    for (wp, c) in &stack {
                        for (l, lc) in expansion.iter().enumerate() {
                            if lc.norm() == 0.0 {
                                continue;
                            }
                            let mut w2 = wp.clone();
                            w2.push(l);
                            next.push((w2, c * lc));
                        }
                    }
                    stack = next;
                    if stack.is_empty() {
                        break;
                    }
                }
                for (w2, c) in stack {
                    out.push(w2, c);
                }
            }
        }
        out.prune(0.0)
    }

    /// Formal star: one sign per odd-odd pair inside the word, then
    /// letterwise adjoints.
    pub fn star(&self, x: &PowerElement) -> PowerElement {
        let stars = self.site.star_table();
        let mut out = PowerElement::zero(self.sites);
        for (w, c) in &x.terms {
            let odd = w.iter().filter(|&&l| self.odd_letter(l)).count();
            let sign = if (odd * odd.saturating_sub(1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let mut stack: Vec<(Vec<usize>, Complex64)> = vec![(Vec::new(), c.conj() * cx(sign, 0.0))];
            for s in 0..self.sites {
                let expansion = &stars[w[s]];
                let mut next = Vec::new();
                for (wp, cc) in &stack {
                    for (l, lc) in expansion.iter().enumerate() {
                        if lc.norm() == 0.0 {
                            continue;
                        }
                        let mut w2 = wp.clone();
                        w2.push(l);
                        next.push((w2, cc * lc));
                    }
                }
                stack = next;
            }
            for (w2, cc) in stack {
                out.push(w2, cc);
            }
        }
        out.prune(0.0)
    }

    /// The product grading: letterwise grade signs.
    pub fn grading_apply(&self, x: &PowerElement) -> PowerElement {
        let mut out = PowerElement::zero(self.sites);
        for (w, c) in &x.terms {
            out.push(w.clone(), c * cx(self.word_grade(w).sign(), 0.0));
        }
        out
    }

    /// The signed permutation action: letters move to their image slots and
    /// each odd-odd inversion contributes a factor -1. This is the unique
    /// extension of the adjacent signed flip along any decomposition.
    #[allow(clippy::needless_range_loop)]
    pub fn permute(&self, g: &Permutation, x: &PowerElement) -> Result<PowerElement, PowerError> {
        if g.len() != self.sites {
            return Err(PowerError::SiteOutOfRange { site: g.len(), sites: self.sites });
        }
        let mut out = PowerElement::zero(self.sites);
        for (w, c) in &x.terms {
            let mut inversions = 0usize;
            for s in 0..self.sites {
                if !self.odd_letter(w[s]) {
                    continue;
                }
                for t in s + 1..self.sites {
                    if self.odd_letter(w[t]) && g.image(s) > g.image(t) {
                        inversions += 1;
                    }
                }
            }
            let sign = if inversions.is_multiple_of(2) { 1.0 } else { -1.0 };
            let mut new_word = vec![0usize; self.sites];
            for s in 0..self.sites {
                new_word[g.image(s)] = w[s];
            }
            out.push(new_word, c * cx(sign, 0.0));
        }
        Ok(out)
    }

    /// Oracle route for the action: apply the adjacent signed flips of a
    /// decomposition one at a time.
    pub fn permute_via_adjacent(
        &self,
        g: &Permutation,
        x: &PowerElement,
    ) -> Result<PowerElement, PowerError> {
        let mut acc = x.clone();
        for j in g.adjacent_decomposition() {
            let mut next = PowerElement::zero(self.sites);
            for (w, c) in &acc.terms {
                let sign = if self.odd_letter(w[j]) && self.odd_letter(w[j + 1]) { -1.0 } else { 1.0 };
                let mut w2 = w.clone();
                w2.swap(j, j + 1);
                next.push(w2, c * cx(sign, 0.0));
            }
            acc = next;
        }
        Ok(acc)
    }

    /// Convert a formal sum to an element of the dense ambient algebra.
    pub fn to_dense_element(&self, x: &PowerElement) -> Result<Element, PowerError> {
        let dense = self.require_dense()?;
        let mut coeffs = CVec::zeros(dense.basis_len());
        for (w, c) in &x.terms {
            coeffs[self.word_index(w)] += *c;
        }
        Ok(dense.element(coeffs)?)
    }

    pub fn from_dense_coeffs(&self, coeffs: &CVec) -> PowerElement {
        let mut out = PowerElement::zero(self.sites);
        for (idx, c) in coeffs.iter().enumerate() {
            if c.norm() != 0.0 {
                out.push(self.index_word(idx), *c);
            }
        }
        out
    }

    /// Signed permutation matrix of the action on the dense word basis;
    /// feeds covariant unitaries.
    pub fn permutation_basis_matrix(&self, g: &Permutation) -> Result<CMat, PowerError> {
        let dense = self.require_dense()?;
        let n = dense.basis_len();
        let mut m = CMat::zeros(n, n);
        for idx in 0..n {
            let word = self.index_word(idx);
            let moved = self.permute(g, &PowerElement::word(self.sites, word, ONE))?;
            for (w2, c) in moved.terms() {
                m[(self.word_index(w2), idx)] = *c;
            }
        }
        Ok(m)
    }

    /// The minimal C*-norm of a power element: the operator norm of its
    /// dense Klein realization (the dense ambient model must exist).
    pub fn minimal_norm(&self, x: &PowerElement) -> Result<f64, PowerError> {
        Ok(self.to_dense_element(x)?.operator_norm())
    }

    /// Gram matrix of the word basis under a product functional given by
    /// per-site representing matrices: entries factor through per-site
    /// traces of string-dressed letter pairs.
    pub(crate) fn string_dressed_gram(&self, densities: &[CMat]) -> CMat {
        let nb = self.site.basis_len();
        let v = self.site.grading_unitary();
        // table[s][ri][rj][(i, j)] = tr(rho_s v^ri a_i^H a_j v^rj)
        let mut tables = Vec::with_capacity(self.sites);
        for rho in densities {
            let mut t = vec![vec![vec![ZERO; nb * nb]; 2]; 2];
            for (ri, row) in t.iter_mut().enumerate() {
                for (rj, cell) in row.iter_mut().enumerate() {
                    for i in 0..nb {
                        for j in 0..nb {
                            let mut m = self.site.basis_matrix(i).adjoint()
                                * self.site.basis_matrix(j);
                            if rj == 1 {
                                m *= v;
                            }
                            if ri == 1 {
                                m = v * m;
                            }
                            // tr(rho m)
                            let mut acc = ZERO;
                            for p in 0..m.nrows() {
                                for q in 0..m.ncols() {
                                    acc += rho[(q, p)] * m[(p, q)];
                                }
                            }
                            cell[i * nb + j] = acc;
                        }
                    }
                }
            }
            tables.push(t);
        }
        let count = self.word_count();
        let mut g = CMat::zeros(count, count);
        for a in 0..count {
            let wa = self.index_word(a);
            for b in 0..count {
                let wb = self.index_word(b);
                let mut acc = ONE;
                let mut ra = 0usize;
                let mut rb = 0usize;
                for s in (0..self.sites).rev() {
                    acc *= tables[s][ra][rb][wa[s] * nb + wb[s]];
                    if acc.norm() == 0.0 {
                        break;
                    }
                    if self.odd_letter(wa[s]) {
                        ra ^= 1;
                    }
                    if self.odd_letter(wb[s]) {
                        rb ^= 1;
                    }
                }
                g[(a, b)] = acc;
            }
        }
        g
    }

    /// Restriction of an element of a shorter power onto this one by
    /// padding with units.
    pub fn pad_element(&self, x: &PowerElement) -> PowerElement {
        assert!(x.sites <= self.sites);
        if x.sites == self.sites {
            return x.clone();
        }
        let id = self.site.identity_coeffs();
        let mut out = PowerElement::zero(self.sites);
        for (w, c) in &x.terms {
            let mut stack: Vec<(Vec<usize>, Complex64)> = vec![(w.clone(), *c)];
            for _ in x.sites..self.sites {
                let mut next = Vec::new();
                for (wp, cc) in &stack {
                    for (l, lc) in id.iter().enumerate() {
                        if lc.norm() == 0.0 {
                            continue;
                        }
                        let mut w2 = wp.clone();
                        w2.push(l);
                        next.push((w2, cc * lc));
                    }
                }
                stack = next;
            }
            for (w2, cc) in stack {
                out.push(w2, cc);
            }
        }
        out
    }
}

/// How group means are taken: exact enumeration or seeded sampling.
#[derive(Debug, Clone, Copy)]
pub enum MeanMethod {
    Exact,
    Sampled { seed: u64, draws: usize },
}

impl MeanMethod {
    pub fn auto(sites: usize, seed: u64, draws: usize) -> MeanMethod {
        if sites <= EXACT_GROUP_CUTOFF {
            MeanMethod::Exact
        } else {
            MeanMethod::Sampled { seed, draws }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MeanEstimate {
    pub value: Complex64,
    pub std_error: Option<f64>,
    pub exact: bool,
}

/// Mean of f over the symmetric group on `sites` letters.
pub fn ergodic_mean<F: FnMut(&Permutation) -> Complex64>(
    sites: usize,
    method: MeanMethod,
    mut f: F,
) -> MeanEstimate {
    match method {
        MeanMethod::Exact => {
            let mut sum = Complex64::from(0.0);
            let mut count = 0usize;
            for_each_permutation(sites, |g| {
                sum += f(g);
                count += 1;
            });
            MeanEstimate { value: sum / Complex64::from(count as f64), std_error: None, exact: true }
        }
        MeanMethod::Sampled { seed, draws } => {
            let mut rng = crate::graded::seeded_rng(seed);
            let mut sum = Complex64::from(0.0);
            let mut sum_sq = 0.0f64;
            let mut values = Vec::with_capacity(draws);
            for _ in 0..draws {
                let g = Permutation::random(sites, &mut rng);
                let v = f(&g);
                sum += v;
                values.push(v);
            }
            let mean = sum / Complex64::from(draws as f64);
            for v in &values {
                sum_sq += (v - mean).norm_sqr();
            }
            let variance = sum_sq / (draws.saturating_sub(1) as f64).max(1.0);
            MeanEstimate {
                value: mean,
                std_error: Some((variance / draws as f64).sqrt()),
                exact: false,
            }
        }
    }
}

/// A state on a finite Fermi power, evaluated lazily so large site counts
/// stay affordable.
#[derive(Clone)]
pub struct PowerState {
    power: FermiPower,
    kind: StateKind,
}

#[derive(Clone)]
enum StateKind {
    /// Product of (even) site states.
    Product { factors: Vec<State> },
    /// tr((rho_0 (x) ... (x) rho_{n-1}) . ) applied through the Klein
    /// strings. Not positive on the twisted pair algebra in general when
    /// the densities fail to be even.
    AmbientProduct { densities: Vec<CMat> },
    Mixture { weights: Vec<f64>, parts: Vec<PowerState> },
    Symmetrized { inner: Box<PowerState>, method: MeanMethod },
    Dense { state: State },
    /// Marginal onto the first k sites of a longer state; evaluations are
    /// padded with units and sent through the outer state.
    Restricted { outer: Box<PowerState> },
}

impl std::fmt::Debug for PowerState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let label = match &self.kind {
            StateKind::Product { .. } => "product",
            StateKind::AmbientProduct { .. } => "ambient-product",
            StateKind::Mixture { .. } => "mixture",
            StateKind::Symmetrized { .. } => "symmetrized",
            StateKind::Dense { .. } => "dense",
            StateKind::Restricted { .. } => "restricted",
        };
        write!(f, "PowerState[{} sites, {}]", self.power.sites(), label)
    }
}

impl PowerState {
    /// The n-fold product of a single even state.
    pub fn product_power(power: &FermiPower, phi: &State) -> Result<PowerState, PowerError> {
        Self::mixed_product(power, vec![phi.clone(); power.sites()])
    }

    /// A product of (possibly different) even states, one per site.
    pub fn mixed_product(power: &FermiPower, factors: Vec<State>) -> Result<PowerState, PowerError> {
        if factors.len() != power.sites() {
            return Err(PowerError::SiteOutOfRange { site: factors.len(), sites: power.sites() });
        }
        for phi in &factors {
            assert!(phi.algebra().same_algebra(power.site()), "factor on a different site algebra");
            if !phi.is_even() {
                return Err(PowerError::NotEvenFactor);
            }
        }
        Ok(PowerState { power: power.clone(), kind: StateKind::Product { factors } })
    }

    /// The ambient vector/density product state of the Klein model: value on
    /// a word is the product of per-site traces against the string-dressed
    /// letters. The seed need not be even and the functional need not be
    /// positive on the twisted algebra.
    pub fn ambient_product(power: &FermiPower, densities: Vec<CMat>) -> Result<PowerState, PowerError> {
        if densities.len() != power.sites() {
            return Err(PowerError::SiteOutOfRange { site: densities.len(), sites: power.sites() });
        }
        let d = power.site().ambient_dim();
        for rho in &densities {
            if rho.nrows() != d || rho.ncols() != d {
                return Err(PowerError::State(crate::state::StateError::InvalidDensity(
                    "site density dimension mismatch".into(),
                )));
            }
        }
        Ok(PowerState { power: power.clone(), kind: StateKind::AmbientProduct { densities } })
    }

    /// The same per-site density at every site.
    pub fn ambient_power(power: &FermiPower, rho: &CMat) -> Result<PowerState, PowerError> {
        Self::ambient_product(power, vec![rho.clone(); power.sites()])
    }

    pub fn mixture(parts: Vec<(f64, PowerState)>) -> PowerState {
        assert!(!parts.is_empty());
        let power = parts[0].1.power.clone();
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        let weights = parts.iter().map(|(w, _)| w / total).collect();
        let states = parts.into_iter().map(|(_, s)| s).collect();
        PowerState { power, kind: StateKind::Mixture { weights, parts: states } }
    }

    pub fn dense(state: State, power: &FermiPower) -> PowerState {
        assert!(state
            .algebra()
            .same_algebra(power.dense().expect("dense power algebra required")));
        PowerState { power: power.clone(), kind: StateKind::Dense { state } }
    }

    /// Group-average of the state; evaluation enumerates S_n exactly up to
    /// the cutoff and falls back to seeded sampling above it.
    pub fn symmetrized(self, seed: u64, draws: usize) -> PowerState {
        let method = MeanMethod::auto(self.power.sites(), seed, draws);
        let power = self.power.clone();
        PowerState { power, kind: StateKind::Symmetrized { inner: Box::new(self), method } }
    }

    pub fn power(&self) -> &FermiPower {
        &self.power
    }

    pub fn value_word(&self, word: &[usize]) -> Complex64 {
        match &self.kind {
            StateKind::Product { factors } => {
                let mut acc = ONE;
                for (s, &l) in word.iter().enumerate() {
                    acc *= factors[s].value_at_basis(l);
                    if acc.norm() == 0.0 {
                        return acc;
                    }
                }
                acc
            }
            StateKind::AmbientProduct { densities } => {
                // Parity of odd letters strictly to the right dresses each
                // letter with a power of the grading unitary.
                let site = self.power.site();
                let v = site.grading_unitary();
                let mut acc = ONE;
                let mut parity = false;
                for s in (0..word.len()).rev() {
                    let m = site.basis_matrix(word[s]);
                    let dressed = if parity { m * v } else { m.clone() };
                    acc *= crate::linalg::frob_inner(&densities[s].adjoint(), &dressed);
                    if site.grade(word[s]) == Grade::Odd {
                        parity = !parity;
                    }
                    if acc.norm() == 0.0 {
                        return acc;
                    }
                }
                acc
            }
            StateKind::Mixture { weights, parts } => weights
                .iter()
                .zip(parts.iter())
                .map(|(w, p)| p.value_word(word) * cx(*w, 0.0))
                .sum(),
            StateKind::Symmetrized { inner, method } => {
                let x = PowerElement::word(self.power.sites(), word.to_vec(), ONE);
                let est = ergodic_mean(self.power.sites(), *method, |g| {
                    let moved = self.power.permute(g, &x).expect("sizes match");
                    inner.value(&moved)
                });
                est.value
            }
            StateKind::Dense { state } => state.value_at_basis(self.power.word_index(word)),
            StateKind::Restricted { outer } => {
                let x = PowerElement::word(self.power.sites(), word.to_vec(), ONE);
                let padded = outer.power.pad_element(&x);
                outer.value(&padded)
            }
        }
    }

    pub fn value(&self, x: &PowerElement) -> Complex64 {
        match &self.kind {
            // Mean over the group once for the whole sum, not per word.
            StateKind::Symmetrized { inner, method } => {
                let est = ergodic_mean(self.power.sites(), *method, |g| {
                    let moved = self.power.permute(g, x).expect("sizes match");
                    inner.value(&moved)
                });
                est.value
            }
            _ => x.terms().map(|(w, c)| self.value_word(w) * c).sum(),
        }
    }

    /// Restriction to the first `k` sites (pad evaluations with units).
    pub fn restrict(&self, k: usize) -> Result<PowerState, PowerError> {
        if k == 0 || k > self.power.sites() {
            return Err(PowerError::SiteOutOfRange { site: k, sites: self.power.sites() });
        }
        let sub = FermiPower::new(self.power.site(), k)?;
        match &self.kind {
            StateKind::Product { factors } => {
                PowerState::mixed_product(&sub, factors[..k].to_vec())
            }
            StateKind::AmbientProduct { densities } => {
                PowerState::ambient_product(&sub, densities[..k].to_vec())
            }
            StateKind::Mixture { weights, parts } => {
                let mut out = Vec::new();
                for (w, p) in weights.iter().zip(parts.iter()) {
                    out.push((*w, p.restrict(k)?));
                }
                Ok(PowerState::mixture(out))
            }
            _ => Ok(PowerState { power: sub, kind: StateKind::Restricted { outer: Box::new(self.clone()) } }),
        }
    }

    /// Worst deviation from permutation invariance over the adjacent
    /// transpositions, probed on seeded random words.
    pub fn symmetry_defect(&self, word_samples: usize, seed: u64) -> f64 {
        let n = self.power.sites();
        let mut rng = crate::graded::seeded_rng(seed);
        let letters = self.power.site().basis_len();
        let mut worst = 0.0f64;
        for _ in 0..word_samples {
            let word: Vec<usize> = (0..n).map(|_| rng.gen_range(0..letters)).collect();
            let x = PowerElement::word(n, word, ONE);
            let base = self.value(&x);
            for j in 0..n - 1 {
                let g = Permutation::transposition(n, j, j + 1);
                let moved = self.power.permute(&g, &x).expect("sizes match");
                worst = worst.max((self.value(&moved) - base).norm());
            }
        }
        worst
    }

    /// Materialize as a validated dense state (small powers only). Product
    /// structure factorizes the Gram matrix per site, which keeps the
    /// positivity certificate cheap at the larger dense sizes.
    pub fn densify(&self) -> Result<State, PowerError> {
        let dense = self.power.require_dense()?.clone();
        let count = self.power.word_count();
        let mut values = CVec::zeros(count);
        for idx in 0..count {
            let word = self.power.index_word(idx);
            values[idx] = self.value_word(&word);
        }
        match self.factorized_gram() {
            Some(gram) => Ok(State::from_values_with_gram(&dense, values, gram)?),
            None => Ok(State::from_values(&dense, values)?),
        }
    }

    /// The Gram matrix of a product-structured state, one site at a time:
    /// G[I][J] = prod_s tr(rho_s v^{rI_s} a_{I_s}^H a_{J_s} v^{rJ_s}),
    /// with r the right-tail odd parities of the words.
    fn factorized_gram(&self) -> Option<CMat> {
        match &self.kind {
            StateKind::Product { factors } => {
                let densities: Vec<CMat> =
                    factors.iter().map(|phi| phi.representing_matrix()).collect();
                Some(self.power.string_dressed_gram(&densities))
            }
            StateKind::AmbientProduct { densities } => {
                Some(self.power.string_dressed_gram(densities))
            }
            StateKind::Mixture { weights, parts } => {
                let mut acc: Option<CMat> = None;
                for (w, part) in weights.iter().zip(parts.iter()) {
                    let g = part.factorized_gram()?;
                    let scaled = g.map(|z| z * cx(*w, 0.0));
                    acc = Some(match acc {
                        None => scaled,
                        Some(a) => a + scaled,
                    });
                }
                acc
            }
            _ => None,
        }
    }
}
