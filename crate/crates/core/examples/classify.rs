//! W-shape classification with the sufficient conditions behind it, and a
//! numerical bisection for the largest W-shaped v.

use vgsmile::implied::StrikeGrid;
use vgsmile::shape;
use vgsmile::vgmodel::MixtureParams;

fn main() -> vgsmile::error::Result<()> {
    let grid = StrikeGrid::default_for(1.0);
    for v in [0.0, 0.01, 0.015, 0.02] {
        let r = shape::classify_params(&MixtureParams::figure(v), &grid)?;
        let c = &r.conditions;
        println!(
            "v={v:<6} {:<6} pattern {:<6} sigma* {:.6}  symmetry {} tails r*={:.3} dip {} (f(0)={:.3} vs phi(0)={:.3})",
            r.classification.to_string(),
            r.sign_sequence,
            r.sigma_star.unwrap_or(f64::NAN),
            c.geometric_symmetry.pass,
            c.semi_heavy_tails.r_star,
            c.dip_at_zero.pass,
            c.dip_at_zero.density_at_zero,
            c.dip_at_zero.normal_at_zero,
        );
    }

    let short = MixtureParams { c: 0.5, ..MixtureParams::figure(0.0) };
    println!("cT=0.5: {}", shape::classify_params(&short, &grid)?.classification);

    let (w, not_w) = shape::shape_boundary(&MixtureParams::figure(0.0), &grid, 0.0, 0.02, 10)?;
    println!("W up to v ~ {w:.5}, not W from v ~ {not_w:.5}");
    Ok(())
}
