//! Convex costs, their Legendre conjugates, and the matching loss.
//!
//! Run with `cargo run --example costs_and_conjugates`.

use riftort::costs::{bregman, eval_conj, eval_cost, grad_conj, grad_cost, matching, CostFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = [1.5, -0.5];
    for c in [CostFunction::Quadratic, CostFunction::power(1.5)?, "power:3".parse()?] {
        let g = grad_cost(&c, &x)?;
        println!("cost {c}");
        println!("  c(x)          = {:.6}", eval_cost(&c, &x)?);
        println!("  grad c(x)     = {g:.6?}");
        println!("  c*(grad c(x)) = {:.6}", eval_conj(&c, &g)?);
        // grad c* inverts grad c.
        println!("  grad c*(grad c(x)) = {:.6?}", grad_conj(&c, &g)?);
        // Fenchel-Young is tight at y = grad c(x), so the matching loss vanishes there.
        println!("  M_c(x; grad c(x)) = {:.3e}", matching(&c, &x, &g)?);
        let z = [0.5, 0.5];
        println!(
            "  M_c(x; grad c(z)) = {:.6}  Bregman D(x, z) = {:.6}",
            matching(&c, &x, &grad_cost(&c, &z)?)?,
            bregman(&c, &x, &z)?
        );
    }
    match "power:0.5".parse::<CostFunction>() {
        Err(e) => println!("power:0.5 is rejected: {e}"),
        Ok(_) => unreachable!("exponents p <= 1 are not strictly convex"),
    }
    Ok(())
}
