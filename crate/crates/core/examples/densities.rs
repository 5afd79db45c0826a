//! Mixture density against its double-gamma limit, plus the MGF and the
//! standard VG form of each component.

use vgsmile::vgmodel::{mgf, to_std_vg, MixtureModel, MixtureParams, Sign};

fn main() -> vgsmile::error::Result<()> {
    let params = MixtureParams::figure(0.01);
    let model = MixtureModel::new(params)?;

    println!("{:>8} {:>12} {:>12}", "x", "f_v(x)", "f_0(x)");
    for i in -8..=8 {
        let x = 0.025 * i as f64;
        println!("{x:>8.3} {:>12.6} {:>12.6}", model.density(x)?, model.double_gamma_density(x)?);
    }

    let c = model.components();
    println!("\nweights: p- = {:.6}, p+ = {:.6}", c.weight(Sign::Minus), c.weight(Sign::Plus));
    println!("right tail decay r* = {:.6}, left = {:.6}", model.right_decay(), model.left_decay());
    for u in [0.0, 0.5, 1.0, 5.0] {
        println!("m({u}) = {:.12}", mgf(u, &params)?);
    }
    for sign in [Sign::Minus, Sign::Plus] {
        let s = to_std_vg(&params, sign)?;
        println!("X{sign}: sigma = {:.6}, theta = {:+.6}, kappa = {:.3}", s.sigma_vg, s.theta, s.kappa);
    }
    Ok(())
}
