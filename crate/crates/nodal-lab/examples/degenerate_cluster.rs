//! Shape derivatives of a repeated eigenvalue (the disk's second pair).
//!
//! A repeated eigenvalue has no derivative in the usual sense: under a
//! boundary perturbation the cluster splits into branches whose slopes are
//! the eigenvalues of the directional matrix
//! `M_ij = -int (dv_i/dn)(dv_j/dn) (V.n) ds` built on the cluster's flux
//! traces. The program assembles `M` for the disk's double eigenvalue
//! `{lambda_2, lambda_3}` under a (+,-) pair of boundary bumps, reports its
//! signature (one branch must move down, one up), validates both slopes
//! against tracked finite differences, and checks the rotational-invariance
//! identity on the square's degenerate pair: rotating a domain is an
//! isometry, so the directional matrix under the rotation field must
//! vanish; its relative Frobenius norm measures the trace-extraction error
//! and shrinks like O(h) under refinement. (On the disk the identity holds
//! trivially by symmetry — the square makes it a real test.)
//!
//! Run with: `cargo run --release --example degenerate_cluster`

use nodal_lab::eigensolve::EigOptions;
use nodal_lab::geometry::{bump_field, make_disk, BumpConstraints, Point};
use nodal_lab::mesh::triangulate;
use nodal_lab::shapecalc::{
    directional_matrix, fd_cluster_validate, matrix_signature, recover_flux, rotational_identity,
    sample_field, Transporter,
};
use nodal_lab::Result;
use std::f64::consts::PI;

fn main() -> Result<()> {
    let disk = make_disk(1.0, 512)?;
    let mesh = triangulate(&disk, 0.035)?;
    let tr = Transporter::new(&mesh, &disk)?;
    let opts = EigOptions { k: 3, ..Default::default() };
    let base = tr.solve_base(&opts)?;
    assert!(base.converged);
    println!(
        "disk cluster: lambda_2 = {:.6}, lambda_3 = {:.6} (split {:.2e})",
        base.eigenvalues[1],
        base.eigenvalues[2],
        (base.eigenvalues[2] - base.eigenvalues[1]) / base.eigenvalues[1]
    );

    // Opposite-signed plateau bumps a quarter-turn apart.
    let field = bump_field(&disk, &[0.0, PI / 2.0], &[1.0, -1.0], 0.25, BumpConstraints::default())?;
    let cluster = [1usize, 2];
    let fluxes = cluster
        .iter()
        .map(|&k| recover_flux(&mesh, &tr.sys, base.eigenvalues[k], &base.vectors[k]))
        .collect::<Result<Vec<_>>>()?;
    let vn = sample_field(&disk, &field, &fluxes[0]);
    let m = directional_matrix(&fluxes, &vn)?;
    println!("\ndirectional matrix:");
    println!("  [{:>10.5} {:>10.5}]", m[(0, 0)], m[(0, 1)]);
    println!("  [{:>10.5} {:>10.5}]", m[(1, 0)], m[(1, 1)]);
    let sig = matrix_signature(&m, 1e-6);
    println!("signature: {} positive, {} zero, {} negative", sig.n_pos, sig.n_zero, sig.n_neg);
    assert!(sig.n_pos == 1 && sig.n_neg == 1, "a (+,-) bump pair must split the pair both ways");

    let fd = fd_cluster_validate(&tr, &base, &cluster, &field, 1e-3, &opts)?;
    println!("\nbranch slopes (matrix eigenvalues vs tracked finite differences):");
    for (a, b) in fd.matrix_eigs.iter().zip(&fd.fd_eigs) {
        println!("  matrix {a:>10.5}   fd {b:>10.5}");
    }
    println!("max |difference| = {:.3e}", fd.max_abs_err);

    // Rotational identity on the square's degenerate pair {lambda_2,
    // lambda_3}, centered at the square's midpoint.
    println!("\nrotational-invariance residual |M_rot|_F / mean(lambda), square pair:");
    let square = nodal_lab::geometry::make_rectangle(PI, PI)?;
    let center = Point::new(PI / 2.0, PI / 2.0);
    let coarse = triangulate(&square, 0.03)?;
    let mut meshes = vec![coarse];
    meshes.push(meshes[0].refine()?);
    for msh in &meshes {
        let r = nodal_lab::eigensolve::solve_spectrum(msh, &opts)?;
        let res = rotational_identity(msh, &r, &cluster, center)?;
        println!("  h_max = {:.4}: {:.5}", msh.h_max, res);
    }
    Ok(())
}
