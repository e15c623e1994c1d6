//! Dirichlet eigenvalues of the unit disk, checked against Bessel zeros.
//!
//! Solves `K v = lambda M v` with P1 elements on two meshes (h and h/2) and
//! prints each computed eigenvalue next to its analytic value
//! `lambda_{n,m} = j_{n,m}^2`, the relative error, and the error ratio
//! between the two meshes (P1 eigenvalues converge at O(h^2), so the ratio
//! should sit near 4).
//!
//! Run with: `cargo run --release --example spectrum_disk`

use nodal_lab::eigensolve::{solve_spectrum, EigOptions};
use nodal_lab::geometry::make_disk;
use nodal_lab::mesh::triangulate;
use nodal_lab::reference::disk_spectrum;
use nodal_lab::Result;

fn main() -> Result<()> {
    let k = 6;
    let disk = make_disk(1.0, 512)?;
    let exact = disk_spectrum(1.0, k)?;

    let mut errors = Vec::new();
    for &h in &[0.04, 0.02] {
        let mesh = triangulate(&disk, h)?;
        let r = solve_spectrum(&mesh, &EigOptions { k, ..Default::default() })?;
        assert!(r.converged, "eigensolver did not converge at h = {h}");
        println!(
            "h = {h}: {} vertices, {} triangles, min angle {:.1} deg",
            mesh.vertices.len(),
            mesh.triangles.len(),
            mesh.min_angle_deg()
        );
        println!("  {:>3} {:>12} {:>12} {:>10} {:>10}", "k", "computed", "exact", "rel err", "residual");
        let mut errs = Vec::new();
        for i in 0..k {
            let lam = r.eigenvalues[i];
            let want = exact.eigenvalues[i];
            let err = (lam - want).abs() / want;
            errs.push(err);
            let (n, m) = exact.modes[i];
            println!(
                "  {:>3} {:>12.6} {:>12.6} {:>10.2e} {:>10.2e}   (j_{{{n},{m}}}^2)",
                i + 1,
                lam,
                want,
                err,
                r.residuals[i]
            );
        }
        errors.push(errs);
        println!();
    }

    println!("error ratio per eigenvalue after halving h (O(h^2) predicts ~4):");
    for i in 0..k {
        println!("  k = {}: {:.2}", i + 1, errors[0][i] / errors[1][i]);
    }
    Ok(())
}
