//! Eigenfunction localization on a dumbbell with a narrowing connector.
//!
//! Two disk lobes (radii 1.0 and 0.8) are joined by a thin connector of
//! half-width `eps`. As `eps` shrinks, the spectrum converges to the union
//! of the two disks' spectra: the ground state concentrates in the large
//! lobe and the second eigenfunction in the small lobe, with `lambda_2`
//! climbing monotonically toward the small disk's ground eigenvalue
//! `(j_{0,1} / 0.8)^2 ~ 9.036`.
//!
//! Run with: `cargo run --release --example dumbbell_localization`
//! (takes a few minutes at the smallest connector width)

use nodal_lab::reference::bessel_zero;
use nodal_lab::shapecalc::dumbbell_sweep;
use nodal_lab::Result;

fn main() -> Result<()> {
    let (r1, r2, length) = (1.0, 0.8, 2.0);
    let j01 = bessel_zero(0, 1);
    let limit = (j01 / r2).powi(2);
    println!("small-lobe limit: lambda_1(disk r = {r2}) = {limit:.4}\n");

    let eps_list = [0.2, 0.1, 0.05, 0.025];
    let stages = dumbbell_sweep(r1, r2, length, &eps_list, 0.0)?;

    println!(
        "{:>6} {:>9} {:>9} {:>8} {:>17} {:>17}",
        "eps", "lambda1", "lambda2", "rel gap", "phi1 (L | R)", "phi2 (L | R)"
    );
    for s in &stages {
        let gap = (s.lambda2 - limit).abs() / limit;
        println!(
            "{:>6} {:>9.4} {:>9.4} {:>7.2}% {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            s.eps, s.lambda1, s.lambda2, 100.0 * gap, s.mass_left[0], s.mass_right[0],
            s.mass_left[1], s.mass_right[1]
        );
    }

    let last = stages.last().unwrap();
    println!(
        "\nat eps = {}: phi2 carries {:.2}% of its mass in the small (right) lobe,",
        last.eps,
        100.0 * last.mass_right[1]
    );
    println!(
        "lambda_2 = {:.4} sits {:.2}% from the isolated small-disk value.",
        last.lambda2,
        100.0 * (last.lambda2 - limit).abs() / limit
    );
    Ok(())
}
