//! Clustering diagnostics for symmetric states: the permutation mean of
//! two-point functions factorizes for product states (weak clustering), the
//! block-swap sequence factorizes them exactly (strong clustering), proper
//! mixtures plateau at their covariance gap, and symmetrization washes out
//! odd expectations.
//!
//! ```bash
//! cargo run --example clustering_decay
//! ```

use fermitensor::analysis::{
    check_asymptotic_abelianness, check_strong_clustering, check_weak_clustering, oddness_decay,
    MeanConfig,
};
use fermitensor::linalg::{cx, CMat};
use fermitensor::power::{FermiPower, PowerState};
use fermitensor::state::interval_state;
use fermitensor::GradedAlgebra;

fn main() {
    let a = GradedAlgebra::preset("car(1)").unwrap();
    let cfg = MeanConfig { seed: 7, samples: 5000 };
    let e11 = a.basis_element(0);

    // Weak clustering of a product state: the deviation decays like 1/n.
    let p = FermiPower::new(&a, 7).unwrap();
    let phi = interval_state(&a, 0.3).unwrap();
    let omega = PowerState::product_power(&p, &phi).unwrap();
    let report = check_weak_clustering(&omega, &e11, &e11, cfg).unwrap();
    println!("weak clustering deviation (product state, fitted rate {:.2}):", report.fitted_rate);
    for (n, v) in &report.points {
        println!("  n = {n}: {v:.6e}");
    }

    // A proper mixture does not cluster: the deviation stays near the
    // covariance of the mixed one-site values.
    let phi1 = interval_state(&a, 0.2).unwrap();
    let phi2 = interval_state(&a, 0.9).unwrap();
    let mixture = PowerState::mixture(vec![
        (0.5, PowerState::product_power(&p, &phi1).unwrap()),
        (0.5, PowerState::product_power(&p, &phi2).unwrap()),
    ]);
    let report = check_weak_clustering(&mixture, &e11, &e11, cfg).unwrap();
    println!("\nweak clustering deviation (half/half mixture):");
    for (n, v) in &report.points {
        println!("  n = {n}: {v:.6e}");
    }

    // Strong clustering via the block swap is exact for product states.
    let p4 = FermiPower::new(&a, 4).unwrap();
    let omega4 = PowerState::product_power(&p4, &phi).unwrap();
    let devs = check_strong_clustering(&omega4, &e11, &e11, 1, cfg).unwrap();
    println!("\nstrong clustering deviations (product state on 4 sites):");
    for (m, d) in &devs {
        println!("  step {m}: {d:.3e}");
    }

    // Asymptotic abelianness in average: the commutator mean decays inside
    // a K/(n+1) envelope.
    let b_op = a.basis_element(1).add(&a.basis_element(2));
    let report = check_asymptotic_abelianness(
        &omega,
        &e11,
        &b_op,
        &a.basis_element(2),
        &a.identity_element(),
        cfg,
    )
    .unwrap();
    println!("\nmean commutator magnitude (fitted rate {:.2}, passed {}):", report.fitted_rate, report.passed);
    for (n, v) in &report.points {
        println!("  n = {n}: {v:.6e}");
    }

    // Evenness in the limit: symmetrizing a non-even seed sends odd
    // expectations to zero at the square-root envelope or faster.
    let plus = CMat::from_fn(2, 2, |_, _| cx(0.5, 0.0));
    let family = |n: usize| {
        let pn = FermiPower::new(&a, n)?;
        Ok(PowerState::ambient_power(&pn, &plus)?.symmetrized(7, 5000))
    };
    let report = oddness_decay(&family, &a.basis_element(1), 2..=7, cfg).unwrap();
    println!("\n|symmetrized seed at iota_0(e12)| (fitted rate {:.2}):", report.fitted_rate);
    for (n, v) in &report.points {
        println!("  n = {n}: {v:.6e}");
    }
}
