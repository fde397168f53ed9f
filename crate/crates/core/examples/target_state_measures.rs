//! Correlation measures of the maximally discordant target and of the
//! two-parameter MDMS family it belongs to.

use lindbladlab::correlations::{concurrence, correlation_report, mutual_information};
use lindbladlab::models::{mdms_family, target_state};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sigma = target_state();
    let r = correlation_report(&sigma, &sigma)?;
    println!("target: QD = {:.12}  CC = {:.12}  C = {:.3e}  I = {:.12}  purity = {:.12}",
        r.qd, r.cc, r.concurrence, r.mutual_information, sigma.purity());

    println!("\n  eps     x      QD        CC        C");
    for &eps in &[0.2, 1.0 / 3.0, 0.45] {
        for &x in &[0.3, 0.5, 0.7] {
            let rho = mdms_family(eps, x)?;
            let rep = correlation_report(&rho, &sigma)?;
            println!("{eps:6.3} {x:6.3} {:9.6} {:9.6} {:9.6}", rep.qd, rep.cc, concurrence(&rho)?);
        }
    }
    let rho = mdms_family(1.0 / 3.0, 0.5)?;
    println!("\nmutual information of the family at (1/3, 1/2): {:.12}", mutual_information(&rho)?);
    Ok(())
}
