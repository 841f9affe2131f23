//! The signed action of the finite symmetric group on tensor powers: odd
//! letters anticommute when they cross, and the block-swap mixing sequence
//! pushes local elements away.
//!
//! ```bash
//! cargo run --example permutation_action
//! ```

use fermitensor::power::{for_each_permutation, mixing_permutation, FermiPower, Permutation, PowerState};
use fermitensor::state::interval_state;
use fermitensor::{GradedAlgebra, PowerElement};
use fermitensor::linalg::ONE;

fn main() {
    let a = GradedAlgebra::preset("car(1)").unwrap();
    let p = FermiPower::new(&a, 2).unwrap();

    // Swapping two odd letters costs a sign.
    let x = p.elementary(&[a.basis_element(1), a.basis_element(2)]); // e12 (F) e21
    let swap = Permutation::transposition(2, 0, 1);
    let moved = p.permute(&swap, &x).unwrap();
    println!("alpha_swap(e12 (F) e21) coefficients:");
    for (w, c) in moved.terms() {
        println!("  word {w:?}: {c}");
    }

    // Even letters cross for free.
    let y = p.elementary(&[a.basis_element(0), a.basis_element(1)]); // e11 (F) e12
    let moved = p.permute(&swap, &y).unwrap();
    println!("alpha_swap(e11 (F) e12) coefficients:");
    for (w, c) in moved.terms() {
        println!("  word {w:?}: {c}");
    }

    // The action is a representation: composing permutations composes the
    // automorphisms, independent of how each is cut into adjacent flips.
    let p4 = FermiPower::new(&a, 4).unwrap();
    let g = Permutation::new(vec![2, 0, 3, 1]).unwrap();
    let h = Permutation::new(vec![1, 3, 0, 2]).unwrap();
    let z = PowerElement::word(4, vec![1, 2, 1, 2], ONE);
    let lhs = p4.permute(&g, &p4.permute(&h, &z).unwrap()).unwrap();
    let rhs = p4.permute(&g.compose(&h), &z).unwrap();
    println!("\ncomposition defect: {:.3e}", lhs.sub(&rhs).coeff_norm());
    let via = p4.permute_via_adjacent(&g, &z).unwrap();
    let direct = p4.permute(&g, &z).unwrap();
    println!("adjacent-decomposition defect: {:.3e}", via.sub(&direct).coeff_norm());

    // Block-swap mixing permutations.
    for m in 0..2u32 {
        let g = mixing_permutation(m, 8).unwrap();
        println!("mixing step {m} on 8 sites: {:?}", g.images());
    }

    // Product powers of an even state are invariant under the whole group.
    let phi = interval_state(&a, 0.3).unwrap();
    let omega = PowerState::product_power(&p4, &phi).unwrap();
    let mut worst = 0.0f64;
    for_each_permutation(4, |g| {
        let moved = p4.permute(g, &z).unwrap();
        worst = worst.max((omega.value(&moved) - omega.value(&z)).norm());
    });
    println!("\nproduct-state invariance defect over all of S_4: {worst:.3e}");
}
