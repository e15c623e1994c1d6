//! Boundary-contact verdicts are stable under boundary perturbations.
//!
//! Both contact classes are open properties: if the second eigenfunction's
//! nodal line reaches the boundary transversally (Sp) or stays strictly
//! interior (Np), a small smooth deformation of the domain cannot flip the
//! verdict. The program perturbs an ellipse (Sp) and a gated annulus (Np)
//! with signed boundary bumps at increasing amplitudes — up to 1e-2 of the
//! domain scale — and re-classifies each perturbed domain.
//!
//! Run with: `cargo run --release --example payne_openness`
//! (the gated-annulus meshes make this the slowest example; a few minutes)

use nodal_lab::eigensolve::{solve_spectrum, EigOptions};
use nodal_lab::geometry::{
    apply_perturbation, bump_field, make_hhn, make_narrow_convex, BumpConstraints, DomainSpec,
    HhnParams,
};
use nodal_lab::mesh::triangulate;
use nodal_lab::nodal::{boundary_neumann_trace, classify_payne, PayneClass};
use nodal_lab::reference::hhn_radius_for_gates;
use nodal_lab::Result;

fn classify(d: &DomainSpec, h: f64) -> Result<PayneClass> {
    let mesh = triangulate(d, h)?;
    let r = solve_spectrum(&mesh, &EigOptions { k: 2, ..Default::default() })?;
    assert!(r.converged);
    let trace = boundary_neumann_trace(&mesh, &r.vectors[1])?;
    Ok(classify_payne(&trace, 0.05).class)
}

fn main() -> Result<()> {
    let ellipse = make_narrow_convex(2.0, 0.8, 512)?;
    let hhn = make_hhn(HhnParams::new(1.0, hhn_radius_for_gates(1.0, 8)?.r2, 8, 0.02))?;
    let amplitudes = [0.0, 0.0025, 0.005, 0.01];

    for (name, d, h, expected) in [
        ("ellipse", &ellipse, 0.03, PayneClass::Sp),
        ("gated annulus", &hhn, 0.02, PayneClass::Np),
    ] {
        // Two signed bumps on the outer loop; area-neutral so the
        // perturbation reshapes rather than inflates.
        let field = bump_field(
            d,
            &[0.3 * d.perimeter(), 0.6 * d.perimeter()],
            &[1.0, -1.0],
            0.05 * d.perimeter(),
            BumpConstraints { area_neutral: true, preserve_diameter: false },
        )?;
        println!("{name} (expected {:?}):", expected);
        for &t in &amplitudes {
            let perturbed = if t == 0.0 { d.clone() } else { apply_perturbation(d, &field, t)? };
            let class = classify(&perturbed, h)?;
            let ok = if class == expected { "ok" } else { "FLIPPED" };
            println!("  amplitude {t:>7.4}: {class:?}  {ok}");
            assert_eq!(class, expected, "{name} verdict flipped at amplitude {t}");
        }
        println!();
    }
    println!("verdicts stable across all perturbation amplitudes.");
    Ok(())
}
