//! Junction angles between nodal lines and the boundary are quantized.
//!
//! Where an eigenfunction's nodal line meets a flat (or smooth) piece of
//! boundary, the leading term of the eigenfunction near the junction is a
//! harmonic homogeneous polynomial, which forces the exit angle into the
//! rational lattice `{ p pi / q }` (with `q` bounded by the local frequency
//! `sqrt(lambda)`). The program solves the rectangle `pi x pi/2`, prints
//! every detected junction with its measured angle, the nearest admissible
//! angle, and the deviation. Separable modes `sin(px) sin(2qy)` meet the
//! boundary orthogonally, so the expected angle is `pi/2` throughout.
//!
//! Interior crossings are equiangular for the same reason; the square's
//! degenerate pair `{lambda_2, lambda_3}` supplies a crossing whose
//! branches meet at right angles, which the program checks as well.
//!
//! Run with: `cargo run --release --example angle_audit`

use nodal_lab::eigensolve::{solve_spectrum, EigOptions};
use nodal_lab::geometry::make_rectangle;
use nodal_lab::mesh::triangulate;
use nodal_lab::nodal::{angle_quantization_check, extract_nodal_set};
use nodal_lab::Result;
use std::f64::consts::PI;

fn main() -> Result<()> {
    let d = make_rectangle(PI, PI / 2.0)?;
    let mesh = triangulate(&d, 0.04)?;
    let k = 6;
    let r = solve_spectrum(&mesh, &EigOptions { k, ..Default::default() })?;
    assert!(r.converged);

    // Junctions within 3 h of a rectangle corner are skipped: the
    // admissible-angle statement concerns smooth boundary points.
    let corners = [
        nodal_lab::geometry::Point::new(0.0, 0.0),
        nodal_lab::geometry::Point::new(PI, 0.0),
        nodal_lab::geometry::Point::new(PI, PI / 2.0),
        nodal_lab::geometry::Point::new(0.0, PI / 2.0),
    ];
    let corner_zone = 3.0 * mesh.h_max;

    println!("rectangle pi x pi/2, junction audit over the first {k} modes:");
    println!(
        "{:>4} {:>9} {:>18} {:>9} {:>9} {:>9}",
        "mode", "lambda", "junction (x, y)", "angle", "nearest", "dev"
    );
    let mut worst = 0.0f64;
    for i in 0..k {
        let lambda = r.eigenvalues[i];
        let ns = extract_nodal_set(&mesh, &r.vectors[i])?;
        for j in &ns.junctions {
            let Some(angle) = j.angle else {
                println!(
                    "{:>4} {:>9.4} ({:>7.4}, {:>7.4})   (unresolved: too few clean nodal points)",
                    i + 1,
                    lambda,
                    j.point.x,
                    j.point.y
                );
                continue;
            };
            if corners.iter().any(|c| c.dist(j.point) < corner_zone) {
                continue;
            }
            let (nearest, dev) = angle_quantization_check(angle, lambda, 1.0);
            worst = worst.max(dev);
            println!(
                "{:>4} {:>9.4} ({:>7.4}, {:>7.4}) {:>9.4} {:>9.4} {:>9.4}",
                i + 1,
                lambda,
                j.point.x,
                j.point.y,
                angle,
                nearest,
                dev
            );
        }
    }
    println!("largest deviation from the admissible set: {worst:.4} rad");
    assert!(worst < 0.1);

    // Interior crossing of the square's (2,2) mode: nodal lines x = pi/2
    // and y = pi/2 meet at the center in four right-angled branches.
    let sq = make_rectangle(PI, PI)?;
    let smesh = triangulate(&sq, 0.03)?;
    let sr = solve_spectrum(&smesh, &EigOptions { k: 4, ..Default::default() })?;
    assert!(sr.converged);
    let ns = extract_nodal_set(&smesh, &sr.vectors[3])?;
    println!(
        "\nsquare mode (2,2) (lambda = {:.4}): {} interior crossing(s)",
        sr.eigenvalues[3],
        ns.crossings.len()
    );
    for c in &ns.crossings {
        let degs: Vec<String> = c.branches.iter().map(|b| format!("{:.1}", b.to_degrees())).collect();
        println!(
            "  at ({:.4}, {:.4}): branches [{}] deg, equiangular deviation {:.4} rad",
            c.point.x,
            c.point.y,
            degs.join(", "),
            c.equiangular_dev
        );
    }
    Ok(())
}
