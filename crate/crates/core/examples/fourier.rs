//! Fourier expansion along a symmetric basis of bisections.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use groupoid_vna::basis::build_basis;
use groupoid_vna::constructors::{random_groupoid, RandomParams};
use groupoid_vna::TwistedVna;

fn main() {
    let params = RandomParams { max_units: 6, max_arrows: 30, ..RandomParams::default() };
    // a measure that is not invariant separates phi(aa*) from phi(a*a)
    let g = (0..)
        .map(|seed| random_groupoid(&params, seed))
        .find(|g| !g.flags().pmp && g.n_arrows() > g.n_units())
        .expect("some seed");
    let basis = build_basis(&g, true);
    let v = TwistedVna::untwisted(&g).expect("nonsingular");
    println!("{} arrows, {} blocks, pmp {}", g.n_arrows(), basis.len(), g.flags().pmp);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..5 {
        let a = v.random_element(&mut rng);
        let f = v.fourier(&a, &basis).expect("in the algebra");
        println!(
            "#{i}: residual {:.1e}, sum |a^B|^2 = {:.6}, phi(aa*) = {:.6}, phi(a*a) = {:.6}",
            f.residual, f.coefficient_norm_sq, f.phi_a_a_star, f.phi_a_star_a
        );
    }
}
