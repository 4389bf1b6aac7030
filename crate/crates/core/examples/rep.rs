//! Permutation representations on projective lines over residue fields.
//!
//! `cargo run --example rep`

use hmvf::field::{make_field, FieldSpec};
use hmvf::linalg::unitarity_defect;
use hmvf::modfun::{random_sl2, Sl2};
use hmvf::rep::perm_rep_mod_p;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hmvf::Result<()> {
    let field = make_field(FieldSpec::Quadratic(5))?;
    for (a, b) in [(2, 0), (3, 0), (-1, 2)] {
        let p = field.element(a, b);
        let rep = perm_rep_mod_p(&field, p)?;
        println!("p = {a} + {b} w: dimension {}", rep.dim());
        println!("  S permutes as {:?}", rep.permutation(&Sl2::s()));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pairs: Vec<(Sl2, Sl2)> = (0..20)
            .map(|_| (random_sl2(&field, &mut rng, 4), random_sl2(&field, &mut rng, 4)))
            .collect();
        println!("  homomorphism residual {:e}", rep.homomorphism_residual(&pairs)?);
        println!("  unitarity defect of rho(S) {:e}", unitarity_defect(&rep.eval(&Sl2::s())?));
    }
    Ok(())
}
