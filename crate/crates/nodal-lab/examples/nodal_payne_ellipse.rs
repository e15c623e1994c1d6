//! Nodal-set extraction and boundary-contact classification on an ellipse.
//!
//! Computes the first eigenpairs of an ellipse, extracts the zero set of the
//! second eigenfunction, counts nodal domains for each mode (Courant's bound
//! `count <= k`), and classifies how the second eigenfunction's nodal line
//! meets the boundary from the sign pattern of its outward normal
//! derivative: `Sp` (trace changes sign, the line reaches the boundary),
//! `Np` (no sign change, the line closes in the interior), or
//! `Indeterminate`. On a convex domain the expected verdict is `Sp` with two
//! sign changes.
//!
//! Run with: `cargo run --release --example nodal_payne_ellipse`

use nodal_lab::eigensolve::{solve_spectrum, EigOptions};
use nodal_lab::geometry::make_narrow_convex;
use nodal_lab::mesh::triangulate;
use nodal_lab::nodal::{
    boundary_neumann_trace, classify_payne, count_nodal_domains, extract_nodal_set,
};
use nodal_lab::Result;

fn main() -> Result<()> {
    // Ellipse with semi-axes 1.0 and 0.7 (diameter 2, inradius 0.7).
    let d = make_narrow_convex(2.0, 0.7, 512)?;
    let mesh = triangulate(&d, 0.03)?;
    let k = 6;
    let r = solve_spectrum(&mesh, &EigOptions { k, ..Default::default() })?;
    assert!(r.converged);

    println!("Courant audit (nodal domain count vs index):");
    for i in 0..k {
        let n = count_nodal_domains(&mesh, &r.vectors[i])?;
        let ok = if n <= i + 1 { "ok" } else { "VIOLATION" };
        println!(
            "  mode {}: lambda = {:9.4}, {} nodal domain(s) <= {}  {}",
            i + 1,
            r.eigenvalues[i],
            n,
            i + 1,
            ok
        );
    }

    let ns = extract_nodal_set(&mesh, &r.vectors[1])?;
    println!(
        "\nnodal set of the second eigenfunction: {} segments, {} component(s), total length {:.4}",
        ns.segments.len(),
        ns.n_components,
        ns.total_length
    );
    println!(
        "  {} boundary junction(s), {} interior crossing(s)",
        ns.junctions.len(),
        ns.crossings.len()
    );

    let trace = boundary_neumann_trace(&mesh, &r.vectors[1])?;
    let verdict = classify_payne(&trace, 0.05);
    println!("\nboundary-contact class of the second eigenfunction: {:?}", verdict.class);
    println!("  margin {:.3}", verdict.margin);
    for (lp, s) in &verdict.sign_changes {
        println!("  normal-derivative sign change on loop {lp} at arclength {s:.4}");
    }
    Ok(())
}
