//! Desk-scale diagnostics for symmetric states on finite Fermi powers:
//! clustering deviations, evenness decay under symmetrization, invariant
//! projections, ergodic operator means, and the decomposition of symmetric
//! states into mixtures of even product states.

use crate::gns::{gns, GnsData};
use crate::graded::{Element, Grade, GradedAlgebra};
use crate::json::{DecayReportJson, FitResultJson};
use crate::linalg::{cx, identity, loglog_slope, op_norm, CMat};
use crate::nnls::{simplex_constrained_lsq, FitError};
use crate::power::{
    ergodic_mean, mixing_permutation, FermiPower, MeanMethod, Permutation, PowerError, PowerState,
};
use crate::state::{State, StateError};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("state is not permutation invariant (defect {0:.3e})")]
    NotSymmetric(f64),
    #[error("element is not homogeneous odd")]
    NotOdd,
    #[error("the grid of even states is empty")]
    EmptyGrid,
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Algebra(#[from] crate::graded::AlgebraError),
}

pub const SYMMETRY_TOL: f64 = 1e-8;

/// Sampling configuration for the group means and symmetry probes.
#[derive(Debug, Clone, Copy)]
pub struct MeanConfig {
    pub seed: u64,
    pub samples: usize,
}

impl Default for MeanConfig {
    fn default() -> Self {
        MeanConfig { seed: 7, samples: 20000 }
    }
}

/// Magnitudes of a quantity across site counts, with a fitted log-log rate
/// and a declared-envelope verdict.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub quantity: String,
    pub points: Vec<(usize, f64)>,
    pub fitted_rate: f64,
    pub passed: bool,
}

impl DecayReport {
    /// Envelope K * n^exponent with K calibrated at the first point.
    fn against_envelope(quantity: String, points: Vec<(usize, f64)>, exponent: f64, shift: f64) -> DecayReport {
        let fitted_rate = loglog_slope(&points, 1e-14);
        let passed = match points.first() {
            None => false,
            Some(&(n0, v0)) => {
                let k = v0 / (n0 as f64 + shift).powf(exponent);
                points
                    .iter()
                    .all(|&(n, v)| v <= k * (n as f64 + shift).powf(exponent) + 1e-12)
            }
        };
        DecayReport { quantity, points, fitted_rate, passed }
    }

    pub fn to_json(&self) -> DecayReportJson {
        DecayReportJson {
            quantity: self.quantity.clone(),
            points: self.points.clone(),
            fitted_rate: self.fitted_rate,
            passed: self.passed,
        }
    }
}

/// Discrete mixture weights over a grid of even states.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub grid_params: Vec<f64>,
    pub weights: Vec<f64>,
    pub residual: f64,
    pub restricted_sites: usize,
}

impl FitResult {
    pub fn to_json(&self) -> FitResultJson {
        FitResultJson {
            grid_params: self.grid_params.clone(),
            weights: self.weights.clone(),
            residual: self.residual,
            sites: self.restricted_sites,
        }
    }
}

fn ensure_symmetric(omega: &PowerState, cfg: MeanConfig) -> Result<(), AnalysisError> {
    let defect = omega.symmetry_defect(24.min(cfg.samples.max(4)), cfg.seed ^ 0x53d);
    if defect > SYMMETRY_TOL {
        return Err(AnalysisError::NotSymmetric(defect));
    }
    Ok(())
}

/// Deviation of the permutation mean of omega(iota_0(a) alpha_g(iota_0(b)))
/// from omega(a)omega(b), per site count (restrictions of the given state).
///
/// alpha_g(iota_0(b)) = iota_{g(0)}(b), so the mean only needs the per-site
/// two-point values; the group enumeration runs over that table.
pub fn check_weak_clustering(
    omega: &PowerState,
    a: &Element,
    b: &Element,
    cfg: MeanConfig,
) -> Result<DecayReport, AnalysisError> {
    ensure_symmetric(omega, cfg)?;
    let n_max = omega.power().sites();
    let mut points = Vec::new();
    for n in 2..=n_max {
        let omega_n = omega.restrict(n)?;
        let p = omega_n.power().clone();
        let left = p.embed_site(a, 0)?;
        let mut table = Vec::with_capacity(n);
        for j in 0..n {
            let right = p.embed_site(b, j)?;
            table.push(omega_n.value(&p.multiply(&left, &right)));
        }
        let method = MeanMethod::auto(n, cfg.seed, cfg.samples);
        let est = ergodic_mean(n, method, |g| table[g.image(0)]);
        let target = omega_n.value(&left) * omega_n.value(&p.embed_site(b, 0)?);
        points.push((n, (est.value - target).norm()));
    }
    Ok(DecayReport::against_envelope("weak-clustering deviation".into(), points, -1.0, 0.0))
}

/// Deviation of omega(alpha_{g_m}(iota_0(a)) iota_0(b)) from
/// omega(a)omega(b) along the block-swap mixing sequence.
pub fn check_strong_clustering(
    omega: &PowerState,
    a: &Element,
    b: &Element,
    max_m: u32,
    cfg: MeanConfig,
) -> Result<Vec<(u32, f64)>, AnalysisError> {
    let p = omega.power().clone();
    let a_emb = p.embed_site(a, 0)?;
    let b_emb = p.embed_site(b, 0)?;
    check_strong_clustering_localized(omega, &a_emb, &b_emb, 0, max_m, cfg)
}

/// The same deviation for operands localized in the leading sites: `a` and
/// `b` live (as padded power elements) in the first 2^localized_m sites, and
/// the mixing steps start where the swap block covers their support.
pub fn check_strong_clustering_localized(
    omega: &PowerState,
    a: &crate::power::PowerElement,
    b: &crate::power::PowerElement,
    localized_m: u32,
    max_m: u32,
    cfg: MeanConfig,
) -> Result<Vec<(u32, f64)>, AnalysisError> {
    ensure_symmetric(omega, cfg)?;
    let p = omega.power().clone();
    let n = p.sites();
    let mut out = Vec::new();
    for m in localized_m..=max_m {
        let g = mixing_permutation(m, n)?;
        let moved = p.permute(&g, a)?;
        let value = omega.value(&p.multiply(&moved, b));
        let target = omega.value(a) * omega.value(b);
        out.push((m, (value - target).norm()));
    }
    Ok(out)
}

/// Magnitude of the S_n mean of omega(c [alpha_g(a), b] d), all operands
/// embedded at site 0, against the K/(n+1) envelope calibrated at the
/// smallest n.
pub fn check_asymptotic_abelianness(
    omega: &PowerState,
    a: &Element,
    b: &Element,
    c: &Element,
    d: &Element,
    cfg: MeanConfig,
) -> Result<DecayReport, AnalysisError> {
    ensure_symmetric(omega, cfg)?;
    let n_max = omega.power().sites();
    let mut points = Vec::new();
    for n in 2..=n_max {
        let omega_n = omega.restrict(n)?;
        let p = omega_n.power().clone();
        let b0 = p.embed_site(b, 0)?;
        let c0 = p.embed_site(c, 0)?;
        let d0 = p.embed_site(d, 0)?;
        let mut table = Vec::with_capacity(n);
        for j in 0..n {
            let aj = p.embed_site(a, j)?;
            let comm = p.multiply(&aj, &b0).sub(&p.multiply(&b0, &aj));
            let full = p.multiply(&p.multiply(&c0, &comm), &d0);
            table.push(omega_n.value(&full));
        }
        let method = MeanMethod::auto(n, cfg.seed, cfg.samples);
        let est = ergodic_mean(n, method, |g| table[g.image(0)]);
        points.push((n, est.value.norm()));
    }
    Ok(DecayReport::against_envelope(
        "mean commutator magnitude".into(),
        points,
        -1.0,
        1.0,
    ))
}

/// |omega_n(iota_0(a_odd))| for a family of symmetric states, against the
/// K * n^(-1/2) envelope calibrated at the smallest n.
pub fn oddness_decay(
    family: &dyn Fn(usize) -> Result<PowerState, PowerError>,
    a_odd: &Element,
    site_range: std::ops::RangeInclusive<usize>,
    cfg: MeanConfig,
) -> Result<DecayReport, AnalysisError> {
    if a_odd.homogeneous_grade() != Some(Grade::Odd) {
        return Err(AnalysisError::NotOdd);
    }
    let mut points = Vec::new();
    for n in site_range {
        let omega_n = family(n)?;
        ensure_symmetric(&omega_n, cfg)?;
        let x = omega_n.power().embed_site(a_odd, 0)?;
        points.push((n, omega_n.value(&x).norm()));
    }
    Ok(DecayReport::against_envelope(
        "odd one-point magnitude".into(),
        points,
        -0.5,
        0.0,
    ))
}

/// GNS data of a symmetric state together with the projection onto the
/// jointly invariant subspace and a sampled worst compressed-commutator
/// norm.
pub struct InvariantProjection {
    pub gns: GnsData,
    pub projection: CMat,
    pub fixed_dim: usize,
    pub worst_commutator: f64,
    pub unitaries: Vec<CMat>,
}

pub fn invariant_projection(
    omega: &PowerState,
    commutator_samples: usize,
    seed: u64,
) -> Result<InvariantProjection, AnalysisError> {
    let power = omega.power().clone();
    let dense_state = omega.densify()?;
    let gns_data = gns(&dense_state)?;
    let n = power.sites();
    let mut unitaries = Vec::new();
    for j in 0..n - 1 {
        let g = Permutation::transposition(n, j, j + 1);
        let map = power.permutation_basis_matrix(&g)?;
        let u = gns_data.covariant_unitary(&map).map_err(|e| match e {
            StateError::NotInvariant(d) => AnalysisError::NotSymmetric(d),
            other => AnalysisError::State(other),
        })?;
        unitaries.push(u);
    }
    // Joint fixed space: null space of sum (U_j - 1)^H (U_j - 1).
    let dim = gns_data.dim();
    let mut m = CMat::zeros(dim, dim);
    for u in &unitaries {
        let diff = u - identity(dim);
        m += diff.adjoint() * diff;
    }
    let (eigs, vecs) = crate::linalg::herm_eigen(&m);
    let top = eigs[eigs.len() - 1].max(1e-300);
    let fixed: Vec<usize> = (0..dim).filter(|&k| eigs[k] <= 1e-10 * top.max(1e-10)).collect();
    let fixed_dim = fixed.len();
    let mut q = CMat::zeros(dim, fixed_dim);
    for (col, &k) in fixed.iter().enumerate() {
        q.set_column(col, &vecs.column(k));
    }
    let projection = &q * q.adjoint();

    let dense_algebra = power.require_dense()?;
    let mut rng = crate::graded::seeded_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..commutator_samples {
        // Normalized samples so the magnitude is comparable across site
        // counts.
        let x = crate::graded::random_element(dense_algebra, &mut rng);
        let x = x.scale(cx(1.0 / x.operator_norm().max(1e-300), 0.0));
        let y = crate::graded::random_element(dense_algebra, &mut rng);
        let y = y.scale(cx(1.0 / y.operator_norm().max(1e-300), 0.0));
        let cx_ = &projection * gns_data.represent(&x) * &projection;
        let cy = &projection * gns_data.represent(&y) * &projection;
        worst = worst.max(op_norm(&(&cx_ * &cy - &cy * &cx_)));
    }
    Ok(InvariantProjection { gns: gns_data, projection, fixed_dim, worst_commutator: worst, unitaries })
}

/// Distances of the group mean of pi(alpha_g(iota_0(a))) from omega(a) 1I
/// in the GNS space of the product state. alpha_g(iota_0(a)) depends on g
/// through g(0) alone, so the group mean is the site mean.
///
/// The operator norm of the difference does not decay for faithful product
/// states: the site mean of commuting copies keeps its aligned-spectrum
/// corner, so ||mean - omega(a)|| stays at the one-site deviation. The mean
/// ergodic decay shows up on the cyclic vector, reported alongside.
#[derive(Debug, Clone, Copy)]
pub struct OperatorMeanReport {
    pub operator_distance: f64,
    pub cyclic_vector_distance: f64,
}

pub fn ergodic_operator_mean(
    phi: &State,
    power: &FermiPower,
    a: &Element,
) -> Result<OperatorMeanReport, AnalysisError> {
    let omega = PowerState::product_power(power, phi)?;
    let dense_state = omega.densify()?;
    let g = gns(&dense_state)?;
    let n = power.sites();
    // Average in the algebra first: one compression instead of n.
    let mut site_mean = power.embed_site(a, 0)?;
    for j in 1..n {
        site_mean = site_mean.add(&power.embed_site(a, j)?);
    }
    site_mean = site_mean.scale(cx(1.0 / n as f64, 0.0));
    let dense_algebra = power.require_dense()?;
    let centered = power
        .to_dense_element(&site_mean)?
        .sub(&dense_algebra.identity_element().scale(phi.value_of(a)));
    // pi(m) xi is the quotient class of m, so the vector distance is a
    // single application of the isometry.
    let on_cyclic = (g.isometry() * centered.coeffs()).norm();
    // A full-rank Gram matrix means the state is faithful and the GNS
    // representation is isometric; the compressed norm is then the ambient
    // norm, without forming the compression.
    let operator_distance = if g.dim() == dense_algebra.basis_len() {
        centered.operator_norm()
    } else {
        op_norm(&g.represent(&centered))
    };
    Ok(OperatorMeanReport { operator_distance, cyclic_vector_distance: on_cyclic })
}

/// A deterministic family of even states on the site algebra. Algebras
/// whose even state space is an interval get the uniform diag(t, 1-t)
/// family including both endpoints; anything else gets a seeded family of
/// even-projected densities.
pub fn even_state_grid(algebra: &GradedAlgebra, resolution: usize) -> Vec<State> {
    assert!(resolution >= 2, "grid needs at least two nodes");
    if algebra.has_interval_even_state_space() {
        (0..resolution)
            .map(|k| {
                let t = k as f64 / (resolution - 1) as f64;
                crate::state::interval_state(algebra, t).expect("diagonal density is a state")
            })
            .collect()
    } else {
        let mut rng = crate::graded::seeded_rng(0xe5e7);
        (0..resolution).map(|_| crate::state::random_even_state(algebra, &mut rng)).collect()
    }
}

/// Natural scalar label for a grid state: the interval parameter when one
/// exists, the grid index otherwise.
fn grid_params(algebra: &GradedAlgebra, grid: &[State]) -> Vec<f64> {
    if algebra.has_interval_even_state_space() {
        grid.iter().map(|phi| phi.value_at_basis(0).re).collect()
    } else {
        (0..grid.len()).map(|k| k as f64).collect()
    }
}

/// Least-squares mixture of product powers of grid states approximating a
/// symmetric state, solved over the probability simplex.
///
/// Among equally good fits the solver prefers mixtures concentrated on few
/// grid nodes (a strictly convex node energy is minimized over the optimal
/// face), which is what makes constructed mixtures recoverable exactly.
pub fn definetti_fit(
    omega: &PowerState,
    grid: &[State],
    cfg: MeanConfig,
) -> Result<FitResult, AnalysisError> {
    if grid.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    ensure_symmetric(omega, cfg)?;
    let power = omega.power().clone();
    let site = power.site().clone();
    let n = power.sites();
    let words = power.word_count();
    let k = grid.len();

    // Real-stacked dictionary: columns are product-power values on all words.
    let mut a = DMatrix::zeros(2 * words, k);
    for (col, phi) in grid.iter().enumerate() {
        assert!(phi.algebra().same_algebra(&site), "grid state on a different algebra");
        for idx in 0..words {
            let word = power.index_word(idx);
            let mut v = cx(1.0, 0.0);
            for &l in &word {
                v *= phi.value_at_basis(l);
                if v.norm() == 0.0 {
                    break;
                }
            }
            a[(idx, col)] = v.re;
            a[(words + idx, col)] = v.im;
        }
    }
    let mut b = DVector::zeros(2 * words);
    for idx in 0..words {
        let v = omega.value_word(&power.index_word(idx));
        b[idx] = v.re;
        b[words + idx] = v.im;
    }
    let tiebreak: Vec<f64> = grid
        .iter()
        .map(|phi| phi.values().iter().map(|z| z.norm().powi(4)).sum())
        .collect();
    let fit = simplex_constrained_lsq(&a, &b, Some(&tiebreak))?;
    Ok(FitResult {
        grid_params: grid_params(&site, grid),
        weights: fit.weights,
        residual: fit.residual,
        restricted_sites: n,
    })
}

/// Convenience: the n-fold product power of each grid state mixed with the
/// given weights, as a lazily evaluated symmetric state.
pub fn grid_mixture(
    power: &FermiPower,
    grid: &[State],
    weights: &[f64],
) -> Result<PowerState, AnalysisError> {
    assert_eq!(grid.len(), weights.len());
    let mut parts = Vec::new();
    for (phi, &w) in grid.iter().zip(weights.iter()) {
        if w > 0.0 {
            parts.push((w, PowerState::product_power(power, phi)?));
        }
    }
    if parts.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    Ok(PowerState::mixture(parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::state::interval_state;

    fn car1() -> GradedAlgebra {
        GradedAlgebra::preset("car(1)").unwrap()
    }

    fn plus_density() -> CMat {
        CMat::from_fn(2, 2, |_, _| cx(0.5, 0.0))
    }

    fn cfg() -> MeanConfig {
        MeanConfig { seed: 11, samples: 4000 }
    }

    #[test]
    fn weak_clustering_decays_for_product_states() {
        let a = car1();
        let p = FermiPower::new(&a, 6).unwrap();
        let phi = interval_state(&a, 0.3).unwrap();
        let omega = PowerState::product_power(&p, &phi).unwrap();
        let e11 = a.basis_element(0);
        let report = check_weak_clustering(&omega, &e11, &e11, cfg()).unwrap();
        assert!(report.passed, "{report:?}");
        for w in report.points.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        // Roughly 1/n.
        assert!((report.fitted_rate + 1.0).abs() < 0.35, "rate {}", report.fitted_rate);
    }

    #[test]
    fn weak_clustering_with_unit_operand_vanishes() {
        let a = car1();
        let p = FermiPower::new(&a, 5).unwrap();
        let phi = interval_state(&a, 0.4).unwrap();
        let omega = PowerState::product_power(&p, &phi).unwrap();
        let unit = a.identity_element();
        let e11 = a.basis_element(0);
        let report = check_weak_clustering(&omega, &unit, &e11, cfg()).unwrap();
        for &(_, v) in &report.points {
            assert!(v < 1e-12);
        }
    }

    #[test]
    fn weak_clustering_plateaus_for_proper_mixtures() {
        let a = car1();
        let p = FermiPower::new(&a, 6).unwrap();
        let phi1 = interval_state(&a, 0.2).unwrap();
        let phi2 = interval_state(&a, 0.9).unwrap();
        let omega = PowerState::mixture(vec![
            (0.5, PowerState::product_power(&p, &phi1).unwrap()),
            (0.5, PowerState::product_power(&p, &phi2).unwrap()),
        ]);
        let e11 = a.basis_element(0);
        let report = check_weak_clustering(&omega, &e11, &e11, cfg()).unwrap();
        // Deviation tends to the mixture covariance, not zero.
        let gap: f64 = 0.5 * 0.2 * 0.2 + 0.5 * 0.9 * 0.9
            - (0.5 * 0.2 + 0.5 * 0.9) * (0.5 * 0.2 + 0.5 * 0.9);
        let last = report.points.last().unwrap().1;
        assert!(last > 0.5 * gap, "deviation {last} should stay near {gap}");
    }

    #[test]
    fn non_symmetric_state_rejected() {
        let a = car1();
        let p = FermiPower::new(&a, 3).unwrap();
        let phi1 = interval_state(&a, 0.1).unwrap();
        let phi2 = interval_state(&a, 0.8).unwrap();
        let omega =
            PowerState::mixed_product(&p, vec![phi1.clone(), phi1, phi2]).unwrap();
        let e11 = a.basis_element(0);
        let err = check_weak_clustering(&omega, &e11, &e11, cfg()).unwrap_err();
        assert!(matches!(err, AnalysisError::NotSymmetric(_)));
    }

    #[test]
    fn strong_clustering_exact_for_product_states() {
        let a = car1();
        let p = FermiPower::new(&a, 4).unwrap();
        let phi = interval_state(&a, 0.3).unwrap();
        let omega = PowerState::product_power(&p, &phi).unwrap();
        for (i, j) in [(0usize, 0usize), (0, 1), (1, 2), (3, 3)] {
            let devs = check_strong_clustering(
                &omega,
                &a.basis_element(i),
                &a.basis_element(j),
                1,
                cfg(),
            )
            .unwrap();
            for &(_, d) in &devs {
                assert!(d <= 1e-12, "deviation {d}");
            }
        }
    }

    #[test]
    fn strong_clustering_with_unit_operand_vanishes() {
        let a = car1();
        let p = FermiPower::new(&a, 4).unwrap();
        let phi = interval_state(&a, 0.45).unwrap();
        let omega = PowerState::product_power(&p, &phi).unwrap();
        let devs =
            check_strong_clustering(&omega, &a.identity_element(), &a.basis_element(0), 1, cfg())
                .unwrap();
        for &(_, d) in &devs {
            assert!(d < 1e-13);
        }
    }

    #[test]
    fn strong_clustering_for_two_site_localized_operands() {
        // Operands spanning the first block, including words of odd letters:
        // once the swap moves the block away, product states factorize
        // exactly.
        let a = car1();
        let p = FermiPower::new(&a, 4).unwrap();
        let phi = interval_state(&a, 0.3).unwrap();
        let omega = PowerState::product_power(&p, &phi).unwrap();
        let pairs = [
            (1usize, 2usize), // e12 (F) e21: even with odd letters
            (0, 3),           // e11 (F) e22: even letters
            (1, 0),           // e12 (F) e11: odd
        ];
        for (i, j) in pairs {
            for (k, l) in pairs {
                let x2 = p
                    .multiply(
                        &p.embed_site(&a.basis_element(i), 0).unwrap(),
                        &p.embed_site(&a.basis_element(j), 1).unwrap(),
                    );
                let y2 = p
                    .multiply(
                        &p.embed_site(&a.basis_element(k), 0).unwrap(),
                        &p.embed_site(&a.basis_element(l), 1).unwrap(),
                    );
                let devs =
                    check_strong_clustering_localized(&omega, &x2, &y2, 1, 1, cfg()).unwrap();
                for &(_, d) in &devs {
                    assert!(d <= 1e-12, "({i},{j}) x ({k},{l}): deviation {d}");
                }
            }
        }
    }

    #[test]
    fn strong_clustering_gap_for_mixture_matches_covariance() {
        let a = car1();
        let p = FermiPower::new(&a, 4).unwrap();
        let phi1 = interval_state(&a, 0.2).unwrap();
        let phi2 = interval_state(&a, 0.9).unwrap();
        let omega = PowerState::mixture(vec![
            (0.3, PowerState::product_power(&p, &phi1).unwrap()),
            (0.7, PowerState::product_power(&p, &phi2).unwrap()),
        ]);
        let e11 = a.basis_element(0);
        let devs = check_strong_clustering(&omega, &e11, &e11, 1, cfg()).unwrap();
        let gap = 0.3 * 0.2 * 0.2 + 0.7 * 0.9 * 0.9
            - (0.3 * 0.2 + 0.7 * 0.9) * (0.3 * 0.2 + 0.7 * 0.9);
        for &(_, d) in &devs {
            assert!((d - gap).abs() < 1e-10, "deviation {d} vs gap {gap}");
        }
    }

    #[test]
    fn abelianness_mean_decays_with_envelope() {
        let a = car1();
        let p = FermiPower::new(&a, 6).unwrap();
        let phi = interval_state(&a, 0.3).unwrap();
        let omega = PowerState::product_power(&p, &phi).unwrap();
        let e11 = a.basis_element(0);
        let e12 = a.basis_element(1);
        let e21 = a.basis_element(2);
        let unit = a.identity_element();
        // Even a: only the same-site term survives, giving an exact C/n
        // decay. phi(e21 [e11, e12 + e21]) = phi(e22) = 0.7.
        let b_op = e12.add(&e21);
        let report = check_asymptotic_abelianness(&omega, &e11, &b_op, &e21, &unit, cfg()).unwrap();
        assert!(report.passed, "{report:?}");
        for &(n, v) in &report.points {
            assert!((v - 0.7 / n as f64).abs() < 1e-12, "n={n} v={v}");
        }
        // Odd a, b: the even state kills the cross-site anticommutators.
        let report = check_asymptotic_abelianness(&omega, &e12, &e21, &unit, &unit, cfg()).unwrap();
        assert!(report.passed, "{report:?}");
        for &(n, v) in &report.points {
            assert!((v - 0.4 / n as f64).abs() < 1e-12, "n={n} v={v}");
        }
        // Commutator of a with itself at the same site vanishes identically.
        let self_report =
            check_asymptotic_abelianness(&omega, &e11, &e11, &e11, &e11, cfg()).unwrap();
        for &(_, v) in &self_report.points {
            assert!(v < 1e-13);
        }
    }

    #[test]
    fn oddness_decay_of_symmetrized_vector_seed() {
        let a = car1();
        let family = |n: usize| -> Result<PowerState, PowerError> {
            let p = FermiPower::new(&a, n)?;
            let seed = PowerState::ambient_power(&p, &plus_density())?;
            Ok(seed.symmetrized(5, 2000))
        };
        let e12 = a.basis_element(1);
        let report = oddness_decay(&family, &e12, 2..=6, cfg()).unwrap();
        assert!(report.passed, "{report:?}");
        for w in report.points.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        // The string structure gives exactly 1/(2n).
        for &(n, v) in &report.points {
            assert!((v - 0.5 / n as f64).abs() < 1e-12, "n={n} v={v}");
        }
    }

    #[test]
    fn oddness_zero_for_even_seeds_and_products() {
        let a = car1();
        let even_density = CMat::from_fn(2, 2, |i, j| {
            if i == j {
                cx(0.5, 0.0)
            } else {
                cx(0.0, 0.0)
            }
        });
        let family = |n: usize| -> Result<PowerState, PowerError> {
            let p = FermiPower::new(&a, n)?;
            let seed = PowerState::ambient_power(&p, &even_density)?;
            Ok(seed.symmetrized(5, 2000))
        };
        let e12 = a.basis_element(1);
        let report = oddness_decay(&family, &e12, 2..=5, cfg()).unwrap();
        for &(_, v) in &report.points {
            assert!(v < 1e-12);
        }
        let err = oddness_decay(&family, &a.basis_element(0), 2..=3, cfg()).unwrap_err();
        assert!(matches!(err, AnalysisError::NotOdd));
        // Product powers of even states are even outright.
        let phi = interval_state(&a, 0.3).unwrap();
        let product_family = |n: usize| -> Result<PowerState, PowerError> {
            let p = FermiPower::new(&a, n)?;
            PowerState::product_power(&p, &phi)
        };
        let report = oddness_decay(&product_family, &e12, 2..=5, cfg()).unwrap();
        for &(_, v) in &report.points {
            assert!(v < 1e-14);
        }
    }

    #[test]
    fn invariant_projection_properties() {
        let a = car1();
        let p = FermiPower::new(&a, 2).unwrap();
        let phi = interval_state(&a, 0.35).unwrap();
        let omega = PowerState::product_power(&p, &phi).unwrap();
        let proj = invariant_projection(&omega, 6, 17).unwrap();
        let e = &proj.projection;
        assert!(max_abs(&(e * e - e.clone())) < 1e-9);
        assert!(max_abs(&(e.adjoint() - e.clone())) < 1e-10);
        for u in &proj.unitaries {
            assert!(max_abs(&(u * e - e.clone())) < 1e-9);
        }
        // The cyclic vector of an invariant state is invariant, so the
        // compression through E reproduces the state on the cyclic vector.
        let xi = proj.gns.cyclic_vector();
        let pxi = e * xi;
        assert!((&pxi - xi).norm() < 1e-9);
        let dense = p.require_dense().unwrap();
        let mut rng = crate::graded::seeded_rng(29);
        for _ in 0..5 {
            let x = crate::graded::random_element(dense, &mut rng);
            let compressed = e * proj.gns.represent(&x) * e;
            let through_e = xi.dotc(&(compressed * xi));
            let direct = omega.value(&p.from_dense_coeffs(x.coeffs()));
            assert!((through_e - direct).norm() < 1e-9);
        }
    }

    #[test]
    fn compressed_commutators_shrink_with_sites() {
        let a = car1();
        // Symmetrized non-even vector seed, dense at n = 2 and 3.
        let mut worsts = Vec::new();
        for n in [2usize, 3] {
            let p = FermiPower::new(&a, n).unwrap();
            let seed = PowerState::ambient_power(&p, &plus_density()).unwrap();
            let omega = seed.symmetrized(5, 2000);
            let proj = invariant_projection(&omega, 8, 23).unwrap();
            worsts.push(proj.worst_commutator);
        }
        assert!(
            worsts[1] < worsts[0],
            "commutator norms should shrink: {worsts:?}"
        );
    }

    #[test]
    fn ergodic_operator_mean_decays_on_the_cyclic_vector() {
        let a = car1();
        let phi = State::trace_state(&a).unwrap();
        let centered = a
            .basis_element(0)
            .sub(&a.identity_element().scale(phi.value_of(&a.basis_element(0))));
        // omega(a^2) for the centered observable, driving the exact
        // sqrt(variance / n) rate of the mean ergodic decay.
        let variance = phi
            .value_of(&centered.star().unwrap().multiply(&centered).unwrap())
            .re;
        let mut reports = Vec::new();
        for n in 2..=5 {
            let p = FermiPower::new(&a, n).unwrap();
            reports.push((n, ergodic_operator_mean(&phi, &p, &centered).unwrap()));
        }
        for w in reports.windows(2) {
            // Vector distance strictly decays; operator distance never grows.
            assert!(w[1].1.cyclic_vector_distance < w[0].1.cyclic_vector_distance);
            assert!(w[1].1.operator_distance <= w[0].1.operator_distance + 1e-12);
        }
        for &(n, r) in &reports {
            let expected = (variance / n as f64).sqrt();
            assert!(
                (r.cyclic_vector_distance - expected).abs() < 1e-10,
                "n={n}: {} vs {}",
                r.cyclic_vector_distance,
                expected
            );
        }
        // a = 1I gives distance zero in both metrics.
        let p = FermiPower::new(&a, 2).unwrap();
        let r = ergodic_operator_mean(&phi, &p, &a.identity_element()).unwrap();
        assert!(r.operator_distance < 1e-10 && r.cyclic_vector_distance < 1e-10);
    }

    #[test]
    fn grid_contains_endpoints_and_even_states() {
        let a = car1();
        let grid = even_state_grid(&a, 3);
        assert_eq!(grid.len(), 3);
        assert!((grid[0].value_at_basis(0) - cx(0.0, 0.0)).norm() < 1e-14);
        assert!((grid[1].value_at_basis(0) - cx(0.5, 0.0)).norm() < 1e-14);
        assert!((grid[2].value_at_basis(0) - cx(1.0, 0.0)).norm() < 1e-14);
        for phi in &grid {
            assert!(phi.is_even());
        }
        let c2 = GradedAlgebra::preset("c2_swap").unwrap();
        for phi in even_state_grid(&c2, 4) {
            assert!(phi.is_even());
        }
    }

    #[test]
    fn definetti_recovers_constructed_mixture() {
        let a = car1();
        let p = FermiPower::new(&a, 3).unwrap();
        let grid = even_state_grid(&a, 101);
        let omega = grid_mixture(&p, &[grid[20].clone(), grid[90].clone()], &[0.3, 0.7]).unwrap();
        let fit = definetti_fit(&omega, &grid, cfg()).unwrap();
        assert!(fit.residual <= 1e-8, "residual {}", fit.residual);
        assert!((fit.weights[20] - 0.3).abs() < 1e-6, "w20 = {}", fit.weights[20]);
        assert!((fit.weights[90] - 0.7).abs() < 1e-6, "w90 = {}", fit.weights[90]);
        let sum: f64 = fit.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8);
        assert!(fit.weights.iter().all(|&w| w >= -1e-12));
    }

    #[test]
    fn definetti_single_product_state_gets_weight_one() {
        let a = car1();
        let p = FermiPower::new(&a, 3).unwrap();
        let grid = even_state_grid(&a, 11);
        let omega = PowerState::product_power(&p, &grid[4]).unwrap();
        let fit = definetti_fit(&omega, &grid, cfg()).unwrap();
        assert!(fit.residual <= 1e-9);
        assert!((fit.weights[4] - 1.0).abs() < 1e-6, "{:?}", fit.weights);
    }

    #[test]
    fn definetti_coarse_grid_reports_residual() {
        let a = car1();
        let p = FermiPower::new(&a, 3).unwrap();
        let target = interval_state(&a, 0.37).unwrap();
        let omega = PowerState::product_power(&p, &target).unwrap();
        let coarse = even_state_grid(&a, 3); // t in {0, 1/2, 1}
        let fit = definetti_fit(&omega, &coarse, cfg()).unwrap();
        assert!(fit.residual > 1e-6);
        let sum: f64 = fit.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8);
        // Refining the grid cannot make the fit worse.
        let finer = even_state_grid(&a, 5); // superset {0, 1/4, 1/2, 3/4, 1}
        let fit2 = definetti_fit(&omega, &finer, cfg()).unwrap();
        assert!(fit2.residual <= fit.residual + 1e-9);
    }

    #[test]
    fn definetti_restriction_consistency() {
        let a = car1();
        let p = FermiPower::new(&a, 3).unwrap();
        let grid = even_state_grid(&a, 9);
        let omega = grid_mixture(&p, &[grid[2].clone(), grid[7].clone()], &[0.4, 0.6]).unwrap();
        let fit3 = definetti_fit(&omega, &grid, cfg()).unwrap();
        let fit2 = definetti_fit(&omega.restrict(2).unwrap(), &grid, cfg()).unwrap();
        assert!(fit2.residual <= fit3.residual + 1e-9);
    }

    #[test]
    fn empty_grid_rejected() {
        let a = car1();
        let p = FermiPower::new(&a, 2).unwrap();
        let phi = interval_state(&a, 0.5).unwrap();
        let omega = PowerState::product_power(&p, &phi).unwrap();
        let err = definetti_fit(&omega, &[], cfg()).unwrap_err();
        assert!(matches!(err, AnalysisError::EmptyGrid));
    }
}
