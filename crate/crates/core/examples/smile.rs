//! Implied-volatility smiles for the figure parameters and the ATM
//! curvature computed two ways.

use vgsmile::implied::{self, StrikeGrid};
use vgsmile::vgmodel::MixtureParams;

fn main() -> vgsmile::error::Result<()> {
    let grid = StrikeGrid::symmetric(1.0, 0.15, 13)?;
    let vs = [0.0, 0.01, 0.015, 0.02];
    let curves = vs
        .iter()
        .map(|&v| implied::smile(&MixtureParams::figure(v), &grid))
        .collect::<Result<Vec<_>, _>>()?;

    print!("{:>8}", "ln(K)");
    for v in vs {
        print!(" {:>10}", format!("v={v}"));
    }
    println!();
    for (i, x) in grid.log_moneyness.iter().enumerate() {
        print!("{x:>8.3}");
        for c in &curves {
            print!(" {:>10.6}", c.vols[i]);
        }
        println!();
    }

    println!();
    for v in vs {
        let k = implied::atm_curvature(&MixtureParams::figure(v))?;
        println!(
            "v={v:<6} sigma''(S0): finite difference {:+.4}, density formula {:+.4}",
            k.finite_difference, k.formula
        );
    }
    Ok(())
}
