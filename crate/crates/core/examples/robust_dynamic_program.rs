//! A tiny max-min dynamic program solved by backward recursion and checked by brute force.
//!
//! Run with `cargo run --release --example robust_dynamic_program`.

use eapo::frontier::{bellman_flat_enumeration, bellman_tiny, random_tiny_spec};

fn main() -> eapo::Result<()> {
    for seed in 0..5 {
        let spec = random_tiny_spec(seed, 3, 2, 3, 0.2);
        let recursive = bellman_tiny(&spec)?;
        let flat = bellman_flat_enumeration(&spec)?;
        println!(
            "seed {seed}: recursion {recursive:+.6}  enumeration {flat:+.6}  equal {}",
            recursive == flat
        );
    }
    Ok(())
}
