//! Build graded algebras, split elements by parity, and apply the even
//! conditional expectation.
//!
//! ```bash
//! cargo run --example algebra_basics
//! ```

use fermitensor::linalg::cx;
use fermitensor::linalg::CMat;
use fermitensor::{Grade, GradedAlgebra};

fn main() {
    // One fermion mode: matrix units of M_2 graded by conjugation with
    // diag(1, -1). Off-diagonal units are odd.
    let car1 = GradedAlgebra::preset("car(1)").unwrap();
    println!("{}: ambient dim {}, basis {}", car1.name(), car1.ambient_dim(), car1.basis_len());
    for i in 0..car1.basis_len() {
        println!("  basis[{i}] grade {}", car1.grade(i));
    }

    // A generic matrix decomposes into its even and odd parts.
    let m = CMat::from_row_slice(2, 2, &[cx(1.0, 0.0), cx(2.0, -1.0), cx(0.5, 0.5), cx(3.0, 0.0)]);
    let x = car1.element_from_matrix(&m).unwrap();
    let (even, odd) = x.grade_split();
    println!("\nx = {:?}", x.coeffs().as_slice());
    println!("x_+ = {:?}", even.coeffs().as_slice());
    println!("x_- = {:?}", odd.coeffs().as_slice());
    println!("E(x) = x_+ (conditional expectation onto the even part)");
    assert_eq!(x.homogeneous_grade(), None);
    assert_eq!(even.homogeneous_grade(), Some(Grade::Even));
    assert_eq!(odd.homogeneous_grade(), Some(Grade::Odd));

    // Product and star happen in the ambient matrix algebra:
    let e12 = car1.basis_element(1);
    let e21 = car1.basis_element(2);
    let prod = e12.multiply(&e21).unwrap();
    println!("\ne12 * e21 = {:?} (= e11)", prod.coeffs().as_slice());
    println!("e12^* = {:?} (= e21)", e12.star().unwrap().coeffs().as_slice());
    println!("theta(e12) = {:?} (odd: flips sign)", e12.grading_apply().coeffs().as_slice());

    // A grading that is not inner in the algebra: the diagonal subalgebra of
    // M_2 with the swap of the two summands, implemented by the flip matrix.
    let c2 = GradedAlgebra::preset("c2_swap").unwrap();
    println!("\n{}: diag(1,-1) has grade {}", c2.name(), c2.grade(1));

    // Multi-mode algebras come from Jordan-Wigner strings.
    let car3 = GradedAlgebra::preset("car(3)").unwrap();
    let (even_count, odd_count) = car3.count_grades();
    println!("{}: basis {} ({} even, {} odd)", car3.name(), car3.basis_len(), even_count, odd_count);

    // Round trip through the JSON schema.
    let text = serde_json::to_string_pretty(&car1.to_json()).unwrap();
    let parsed = serde_json::from_str(&text).unwrap();
    let back = GradedAlgebra::from_json(&parsed, 1e-12).unwrap();
    println!("\nJSON round trip ok: {} ({} basis elements)", back.name(), back.basis_len());
}
