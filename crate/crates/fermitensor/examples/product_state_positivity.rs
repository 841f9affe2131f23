//! The product functional of two states on the twisted product is positive
//! exactly when at least one factor is even. This example constructs the
//! failing case and watches an eigenvalue go negative.
//!
//! ```bash
//! cargo run --example product_state_positivity
//! ```

use fermitensor::linalg::{CVec, ONE};
use fermitensor::{FermiProduct, GradedAlgebra, State};

fn main() {
    let a = GradedAlgebra::preset("car(1)").unwrap();
    let fp = FermiProduct::new(&a, &a).unwrap();

    // The vector state of (1,1)/sqrt(2) is not even: it sees e12.
    let xi = CVec::from_column_slice(&[ONE, ONE]);
    let psi = State::vector_state(&a, &xi).unwrap();
    println!("psi(e12) = {} (non-even state)", psi.value_at_basis(1));

    // Both factors non-even: the functional exists but is not positive.
    let raw = fp.raw_product_functional(&psi, &psi);
    let diag = raw.gram_diagnostics();
    println!(
        "psi x psi Gram (hermitian part): min eigenvalue {:.4}, max {:.4}, hermiticity defect {:.3e}",
        diag.min_eigenvalue, diag.max_eigenvalue, diag.hermiticity_defect
    );
    assert!(diag.min_eigenvalue < -0.01);
    println!("-> not a state; the validated constructor refuses this pair:");
    match fp.product_functional(&psi, &psi) {
        Err(e) => println!("   {e}"),
        Ok(_) => unreachable!(),
    }

    // Replacing either factor by an even state restores positivity.
    let tau = State::trace_state(&a).unwrap();
    let raw = fp.raw_product_functional(&psi, &tau);
    let diag = raw.gram_diagnostics();
    println!(
        "\npsi x trace Gram: min eigenvalue {:.3e} (PSD within tolerance)",
        diag.min_eigenvalue
    );
    let state = fp.product_functional(&psi, &tau).unwrap();
    println!("validated product state built; even: {}", state.is_even());

    // Two even factors give an even product state with the expected values.
    let phi = fermitensor::state::interval_state(&a, 0.3).unwrap();
    let prod = fp.product_functional(&phi, &phi).unwrap();
    let idx = fp.pair_index(0, 3);
    println!(
        "\n(phi x phi)(e11 (F) e22) = {} (= 0.3 * 0.7)",
        prod.value_at_basis(idx)
    );
}
