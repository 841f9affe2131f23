use fermitensor::power::{FermiPower, PowerState};
use fermitensor::{GradedAlgebra, State};
use std::time::Instant;

fn main() {
    let a = GradedAlgebra::preset("car(1)").unwrap();
    let phi = State::trace_state(&a).unwrap();
    let p = FermiPower::new(&a, 5).unwrap();
    let t = Instant::now();
    let dense = p.require_dense().unwrap().clone();
    println!("dense build: {:?} (basis {})", t.elapsed(), dense.basis_len());
    let omega = PowerState::product_power(&p, &phi).unwrap();
    let t = Instant::now();
    let ds = omega.densify().unwrap();
    println!("densify: {:?}", t.elapsed());
    let t = Instant::now();
    let g = fermitensor::gns::gns(&ds).unwrap();
    println!("gns: {:?} (dim {})", t.elapsed(), g.dim());
    let t = Instant::now();
    let centered = a.basis_element(0).sub(&a.identity_element().scale(fermitensor::linalg::cx(0.5, 0.0)));
    let mut site_mean = p.embed_site(&centered, 0).unwrap();
    for j in 1..5 { site_mean = site_mean.add(&p.embed_site(&centered, j).unwrap()); }
    println!("embeds: {:?}", t.elapsed());
    let t = Instant::now();
    let de = p.to_dense_element(&site_mean).unwrap();
    println!("to_dense: {:?}", t.elapsed());
    let t = Instant::now();
    let v = g.isometry() * de.coeffs();
    println!("isometry apply: {:?} ({})", t.elapsed(), v.norm());
    let t = Instant::now();
    let n = de.operator_norm();
    println!("ambient op_norm: {:?} ({n})", t.elapsed());
}
