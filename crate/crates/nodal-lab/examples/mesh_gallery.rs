//! Domain families, mesh quality, and nodal-set overlays.
//!
//! Builds one instance of every parametric family (disk, rectangle, narrow
//! convex ellipse, dumbbell, gated annulus), triangulates each, and prints
//! geometric invariants (area, perimeter, diameter, polygon inradius)
//! together with mesh statistics (sizes, minimum angle, Euler check). Each
//! domain is round-tripped through its JSON description, and an SVG overlay
//! of the second eigenfunction's nodal set is written to the system temp
//! directory.
//!
//! Run with: `cargo run --release --example mesh_gallery`

use nodal_lab::eigensolve::{solve_spectrum, EigOptions};
use nodal_lab::geometry::{
    make_disk, make_dumbbell, make_hhn, make_narrow_convex, make_rectangle, DomainSpec,
    DumbbellParams, HhnParams,
};
use nodal_lab::mesh::triangulate;
use nodal_lab::nodal::{extract_nodal_set, nodal_overlay_svg};
use nodal_lab::reference::hhn_radius_for_gates;
use nodal_lab::Result;
use std::f64::consts::PI;

fn main() -> Result<()> {
    let hhn_r2 = hhn_radius_for_gates(1.0, 8)?.r2;
    let gallery: Vec<(&str, DomainSpec, f64)> = vec![
        ("disk", make_disk(1.0, 512)?, 0.04),
        ("rectangle", make_rectangle(PI, PI / 2.0)?, 0.05),
        ("narrow_convex", make_narrow_convex(2.0, 0.4, 512)?, 0.03),
        (
            "dumbbell",
            make_dumbbell(DumbbellParams {
                r1: 1.0,
                r2: 0.8,
                connector_length: 2.0,
                eps: 0.1,
                xi: 0.11,
            })?,
            0.03,
        ),
        ("gated_annulus", make_hhn(HhnParams::new(1.0, hhn_r2, 8, 0.02))?, 0.025),
    ];

    let out_dir = std::env::temp_dir().join("nodal-lab-gallery");
    std::fs::create_dir_all(&out_dir)?;

    for (name, d, h) in &gallery {
        println!("{name} (family \"{}\"):", d.family);
        println!(
            "  area {:.4}, perimeter {:.4}, diameter {:.4}, inradius {:.4}, convex: {}",
            d.area(),
            d.perimeter(),
            d.diameter(),
            d.inradius(),
            d.is_convex()
        );

        let json = d.to_json_string();
        let back = DomainSpec::from_json_str(&json)?;
        assert_eq!(back.boundary_vertex_count(), d.boundary_vertex_count());
        println!("  JSON round-trip: {} boundary vertices preserved", d.boundary_vertex_count());

        let mesh = triangulate(d, *h)?;
        println!(
            "  mesh at h = {h}: {} vertices, {} triangles, {} hole(s), min angle {:.1} deg, Euler ok: {}",
            mesh.vertices.len(),
            mesh.triangles.len(),
            mesh.n_holes,
            mesh.min_angle_deg(),
            mesh.euler_ok()
        );
        for w in mesh.quality_warnings.iter().take(3) {
            println!(
                "  quality warning: {} (min angle {:.1} deg near ({:.3}, {:.3}))",
                w.reason, w.min_angle_deg, w.location.x, w.location.y
            );
        }

        let r = solve_spectrum(&mesh, &EigOptions { k: 2, ..Default::default() })?;
        assert!(r.converged);
        let ns = extract_nodal_set(&mesh, &r.vectors[1])?;
        let path = out_dir.join(format!("{name}.svg"));
        std::fs::write(&path, nodal_overlay_svg(&mesh, &ns))?;
        println!(
            "  lambda_2 = {:.4}; nodal overlay -> {}\n",
            r.eigenvalues[1],
            path.display()
        );
    }
    println!("gallery written to {}", out_dir.display());
    Ok(())
}
