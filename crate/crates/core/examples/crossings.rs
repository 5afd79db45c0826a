//! Crossings of the double-gamma density with a normal density, and the
//! Descartes coefficients that bound them.

use vgsmile::pricing::TotalVol;
use vgsmile::shape;
use vgsmile::vgmodel::{MixtureModel, MixtureParams};

fn main() -> vgsmile::error::Result<()> {
    let params = MixtureParams::figure(0.0);
    let model = MixtureModel::new(params)?;

    for sigma in [0.06, 0.08, 0.097, 0.12] {
        let s = TotalVol::new(sigma)?;
        let cr = shape::density_crossings(&model, s, &shape::crossing_grid(&model, s, 8001))?;
        let xs: Vec<String> = cr.crossing_xs.iter().map(|x| format!("{x:+.4}")).collect();
        println!("sigma={sigma:<6} n_pdf={} at [{}]", cr.n_pdf, xs.join(", "));

        let d = shape::descartes_coefficients(&params, s)?;
        println!(
            "    a0={:.4} a1={} a2={} a3={:.2}: at most {} crossings on x > 0",
            d.a0, d.a1, d.a2, d.a3, d.sign_changes
        );
    }
    Ok(())
}
