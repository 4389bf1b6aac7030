//! Translation lattices and their duals.
//!
//! `cargo run --example lattice`

use hmvf::field::{make_field, FieldSpec};
use hmvf::lattice::{translation_lattice, SubgroupSpec};

fn main() -> hmvf::Result<()> {
    for d in [2, 5] {
        let field = make_field(FieldSpec::Quadratic(d))?;
        let scale = field.element(2, 0);
        let lattice = translation_lattice(&field, SubgroupSpec::IdealScaled(scale))?;
        println!("Q(sqrt {d}), S_H = 2 O_F");
        println!("  M = {}", lattice.basis_matrix());
        println!("  D = {}", lattice.dual_matrix());
        println!("  duality residual {:e}", lattice.duality_residual());
        let dual = lattice.enumerate_dual(1.0);
        println!("  {} dual vectors in the unit box", dual.len());
        for v in dual.iter().take(5) {
            println!("    {:?} -> {:?}", v.coords(), v.real());
        }
        let x = field.element(4, -6);
        println!("  coordinates of 4 - 6w: {:?}", lattice.lattice_coordinates(x));
    }
    Ok(())
}
