//! Simultaneous block-triangular form of a commuting pair with a Jordan block.
//!
//! `cargo run --example sbtsd`

use hmvf::linalg::{commuting_residual, from_real_rows, sbtsd, SbtsdOptions};

fn main() -> hmvf::Result<()> {
    // A = diag(J, 2), B = A^2 + I
    let a = from_real_rows(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
    let b = &a * &a + hmvf::linalg::identity(3);
    let family = vec![a, b];
    println!("commuting residual {:e}", commuting_residual(&family)?);

    let res = sbtsd(&family, &SbtsdOptions::default())?;
    println!("block sizes {:?}", res.block_sizes);
    for j in 0..res.block_count() {
        println!(
            "block {j}: eigenvalues {:?}, exponents {:?}",
            res.block_eigenvalues(j),
            res.block_exponents(j)
        );
    }
    for (i, s) in res.unipotent.iter().enumerate() {
        println!("S_{i} = {s}");
    }
    println!("pattern residual {:e}", res.pattern_residual);
    Ok(())
}
