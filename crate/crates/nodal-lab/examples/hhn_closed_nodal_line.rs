//! A second eigenfunction whose nodal line closes in the interior.
//!
//! The domain is a disk of radius `r2` with an interrupted circular wall at
//! radius `r1 = 1`: eight thin arc-shaped holes separated by small gates.
//! When `r2` is chosen so that the annulus `r1 < r < r2` carries the second
//! eigenvalue — but with enough headroom that the gate leakage near the wall
//! keeps one sign — the second eigenfunction is radial-like outside the wall
//! and its nodal line is a closed loop strictly inside radius `r1`. This is
//! the classical construction showing the sign-change ("Sp") boundary
//! contact can fail on non-convex domains.
//!
//! `hhn_radius_for_gates` picks `r2` for a given gate count. The program
//! verifies the verdict is `Np` and that every nodal segment stays inside
//! radius `r1 * (1 - 0.02)`, then writes an SVG overlay.
//!
//! Run with: `cargo run --release --example hhn_closed_nodal_line`

use nodal_lab::eigensolve::{solve_spectrum, EigOptions};
use nodal_lab::geometry::{make_hhn, HhnParams};
use nodal_lab::mesh::triangulate;
use nodal_lab::nodal::{
    boundary_neumann_trace, classify_payne, extract_nodal_set, nodal_overlay_svg, PayneClass,
};
use nodal_lab::reference::{annulus_first, hhn_radius_for_gates};
use nodal_lab::Result;

fn main() -> Result<()> {
    let r1 = 1.0;
    let n_gates = 8;
    let pick = hhn_radius_for_gates(r1, n_gates)?;
    println!(
        "annulus outer radius: r2 = {:.4} (feasible interval [{:.4}, {:.4}])",
        pick.r2, pick.r2_min, pick.r2_max
    );
    println!(
        "sealed-annulus ground eigenvalue at this r2: {:.4}",
        annulus_first(r1, pick.r2)?
    );

    let d = make_hhn(HhnParams::new(r1, pick.r2, n_gates, 0.02))?;
    let mesh = triangulate(&d, 0.02)?;
    println!(
        "mesh: {} vertices, {} triangles, {} hole(s)",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.n_holes
    );

    let r = solve_spectrum(&mesh, &EigOptions { k: 2, ..Default::default() })?;
    assert!(r.converged);
    println!("lambda_1 = {:.4}, lambda_2 = {:.4}", r.eigenvalues[0], r.eigenvalues[1]);

    let trace = boundary_neumann_trace(&mesh, &r.vectors[1])?;
    let verdict = classify_payne(&trace, 0.05);
    println!("boundary-contact class: {:?} (margin {:.3})", verdict.class, verdict.margin);
    assert_eq!(verdict.class, PayneClass::Np, "expected an interior nodal loop");

    let ns = extract_nodal_set(&mesh, &r.vectors[1])?;
    let max_radius = ns
        .segments
        .iter()
        .flat_map(|s| s.iter())
        .map(|p| p.norm())
        .fold(0.0f64, f64::max);
    println!(
        "nodal set: {} component(s), max radius {:.4} (< {:.4} required)",
        ns.n_components,
        max_radius,
        r1 * (1.0 - 0.02)
    );
    assert!(max_radius < r1 * (1.0 - 0.02));

    let svg = nodal_overlay_svg(&mesh, &ns);
    let path = std::env::temp_dir().join("hhn_nodal.svg");
    std::fs::write(&path, svg)?;
    println!("overlay written to {}", path.display());
    Ok(())
}
