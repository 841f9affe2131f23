//! GNS representations of states: dimensions, reconstruction, covariance
//! unitaries for the grading, and representation norms.
//!
//! ```bash
//! cargo run --example gns_representation
//! ```

use fermitensor::gns::{gns, gns_norm};
use fermitensor::state::interval_state;
use fermitensor::{GradedAlgebra, State};

fn main() {
    let a = GradedAlgebra::preset("car(1)").unwrap();

    // The normalized trace is faithful: the GNS space has the full basis
    // dimension and norms are preserved exactly.
    let tau = State::trace_state(&a).unwrap();
    let g = gns(&tau).unwrap();
    println!("trace state: GNS dimension {}", g.dim());
    println!("reconstruction defect {:.3e}", g.reconstruction_defect());

    // A pure even state quotients out a null space.
    let pure = interval_state(&a, 1.0).unwrap();
    let gp = gns(&pure).unwrap();
    println!("pure state diag(1,0): GNS dimension {}", gp.dim());

    // The grading automorphism of an even state lifts to a self-inverse
    // unitary fixing the cyclic vector.
    let phi = interval_state(&a, 0.25).unwrap();
    let gc = gns(&phi).unwrap();
    let v = gc.covariant_unitary(&a.grading_basis_matrix()).unwrap();
    let v2 = &v * &v;
    println!(
        "\ncovariant grading unitary: ||V^2 - 1|| = {:.3e}, ||V xi - xi|| = {:.3e}",
        fermitensor::linalg::max_abs(&(v2 - fermitensor::linalg::identity(gc.dim()))),
        (&v * gc.cyclic_vector() - gc.cyclic_vector()).norm()
    );

    // Representation norms never exceed the ambient operator norm, with
    // equality for faithful states.
    let e12 = a.basis_element(1);
    println!("\n||pi_tau(e12)|| = {}", gns_norm(&e12, &tau).unwrap());
    println!("||pi_pure(e12)|| = {}", gns_norm(&e12, &pure).unwrap());
    println!("ambient ||e12|| = {}", e12.operator_norm());
}
