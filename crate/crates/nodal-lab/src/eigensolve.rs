//! P1 finite-element discretization of the Dirichlet Laplacian and a block
//! shift-invert Lanczos eigensolver.
//!
//! Assembly produces stiffness and consistent-mass matrices over all mesh
//! vertices plus their restrictions to interior vertices (Dirichlet
//! elimination). The generalized problem `K v = lambda M v` is solved by
//! Lanczos on `OP = K^{-1} M` in the M inner product (largest `theta = 1/
//! lambda` first), with block size 2 so repeated eigenvalues of multiplicity
//! two converge without favoritism, full reorthogonalization for stability,
//! and a seeded start so runs are reproducible. `K` is factored once with a
//! reverse Cuthill-McKee reordering and an envelope (skyline) LDL^T.

use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Compressed sparse row matrix (symmetric matrices store both halves).
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Quadratic form `x^T A y`.
    pub fn quadratic(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.vals[k] * y[self.col_idx[k]];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }

    pub fn sum_all(&self) -> f64 {
        self.vals.iter().sum()
    }
}

/// Stiffness/mass pair over all vertices plus the interior restriction.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub k_full: CsrMatrix,
    pub m_full: CsrMatrix,
    /// Interior (non-boundary) vertex ids in ascending order.
    pub interior: Vec<usize>,
    /// Map vertex id -> interior index, `usize::MAX` for boundary vertices.
    pub int_index: Vec<usize>,
    pub k_int: CsrMatrix,
    pub m_int: CsrMatrix,
    pub mesh_id: u64,
}

impl FemSystem {
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&v| full[v]).collect()
    }

    pub fn extend(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.k_full.n];
        for (i, &v) in self.interior.iter().enumerate() {
            full[v] = interior[i];
        }
        full
    }
}

/// Element matrices for P1 on a CCW triangle `(pa, pb, pc)` with area `A`:
/// stiffness `K_ij = (e_i . e_j) / (4A)` with `e_i` the edge opposite vertex
/// `i`, mass `M = A/12 * (1 + delta_ij)`.
fn element_matrices(m: &TriMesh, t: usize) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let [a, b, c] = m.triangles[t];
    let (pa, pb, pc) = (m.vertices[a], m.vertices[b], m.vertices[c]);
    let e = [pc - pb, pa - pc, pb - pa];
    let area = 0.5 * (pb - pa).cross(pc - pa);
    let mut ke = [[0.0; 3]; 3];
    let mut me = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = e[i].dot(e[j]) / (4.0 * area);
            me[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (ke, me)
}

fn build_pattern(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> (Vec<usize>, Vec<usize>) {
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j) in pairs {
        neighbors[i].push(j);
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    for nb in &mut neighbors {
        nb.sort_unstable();
        nb.dedup();
        col_idx.extend_from_slice(nb);
        row_ptr.push(col_idx.len());
    }
    (row_ptr, col_idx)
}

fn accumulate(csr: &mut CsrMatrix, i: usize, j: usize, v: f64) {
    let range = csr.row_ptr[i]..csr.row_ptr[i + 1];
    let k = range.start
        + csr.col_idx[range.clone()]
            .binary_search(&j)
            .expect("entry outside assembled sparsity pattern");
    csr.vals[k] += v;
}

/// Assemble stiffness and consistent mass over all vertices, then eliminate
/// Dirichlet (boundary) rows and columns for the interior system.
pub fn assemble(mesh: &TriMesh) -> Result<FemSystem> {
    let n = mesh.vertices.len();
    if mesh.triangles.is_empty() {
        return Err(Error::InvalidMesh("cannot assemble an empty mesh".into()));
    }
    let pair_iter = || {
        mesh.triangles.iter().flat_map(|t| {
            let t = *t;
            (0..3).flat_map(move |i| (0..3).map(move |j| (t[i], t[j])))
        })
    };
    let (row_ptr, col_idx) = build_pattern(n, pair_iter());
    let mut k_full = CsrMatrix { n, row_ptr: row_ptr.clone(), col_idx: col_idx.clone(), vals: vec![0.0; col_idx.len()] };
    let mut m_full = CsrMatrix { n, row_ptr, col_idx: col_idx.clone(), vals: vec![0.0; col_idx.len()] };
    for t in 0..mesh.triangles.len() {
        let (ke, me) = element_matrices(mesh, t);
        let tv = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                accumulate(&mut k_full, tv[i], tv[j], ke[i][j]);
                accumulate(&mut m_full, tv[i], tv[j], me[i][j]);
            }
        }
    }

    let interior = mesh.interior_vertices();
    if interior.is_empty() {
        return Err(Error::MeshTooCoarse("mesh has no interior vertices".into()));
    }
    let mut int_index = vec![usize::MAX; n];
    for (i, &v) in interior.iter().enumerate() {
        int_index[v] = i;
    }
    let restrict = |src: &CsrMatrix| -> CsrMatrix {
        let ni = interior.len();
        let mut row_ptr = Vec::with_capacity(ni + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for &v in &interior {
            for k in src.row_ptr[v]..src.row_ptr[v + 1] {
                let j = int_index[src.col_idx[k]];
                if j != usize::MAX {
                    col_idx.push(j);
                    vals.push(src.vals[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n: ni, row_ptr, col_idx, vals }
    };
    let k_int = restrict(&k_full);
    let m_int = restrict(&m_full);
    Ok(FemSystem {
        k_full,
        m_full,
        interior,
        int_index,
        k_int,
        m_int,
        mesh_id: mesh.mesh_id,
    })
}

// ---------------------------------------------------------------------------
// Reverse Cuthill-McKee and envelope LDL^T

/// Reverse Cuthill-McKee ordering of the CSR graph; returns `perm` with
/// `perm[new] = old`.
pub fn rcm_order(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n;
    let degree = |v: usize| a.row_ptr[v + 1] - a.row_ptr[v];
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    loop {
        let start = match (0..n).filter(|&v| !visited[v]).min_by_key(|&v| (degree(v), v)) {
            Some(s) => s,
            None => break,
        };
        let mut queue = std::collections::VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = (a.row_ptr[v]..a.row_ptr[v + 1])
                .map(|k| a.col_idx[k])
                .filter(|&w| w != v && !visited[w])
                .collect();
            nb.sort_by_key(|&w| (degree(w), w));
            for w in nb {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) LDL^T factorization of a symmetric positive definite
/// matrix given in CSR, with rows/columns permuted by `perm`.
pub struct SkylineLdl {
    n: usize,
    diag: Vec<f64>,
    env: Vec<f64>,
    jmin: Vec<usize>,
    row_start: Vec<usize>,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `iperm[old] = new`
    iperm: Vec<usize>,
}

impl SkylineLdl {
    pub fn new(a: &CsrMatrix, perm: Vec<usize>) -> Result<SkylineLdl> {
        let n = a.n;
        assert_eq!(perm.len(), n);
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        // Envelope profile in the permuted ordering.
        let mut jmin: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = iperm[old_i];
            for k in a.row_ptr[old_i]..a.row_ptr[old_i + 1] {
                let j = iperm[a.col_idx[k]];
                if j < i && j < jmin[i] {
                    jmin[i] = j;
                }
            }
        }
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0usize);
        for i in 0..n {
            row_start.push(row_start[i] + (i - jmin[i]));
        }
        let mut env = vec![0.0; row_start[n]];
        let mut diag = vec![0.0; n];
        for old_i in 0..n {
            let i = iperm[old_i];
            for k in a.row_ptr[old_i]..a.row_ptr[old_i + 1] {
                let j = iperm[a.col_idx[k]];
                if j == i {
                    diag[i] = a.vals[k];
                } else if j < i {
                    env[row_start[i] + (j - jmin[i])] = a.vals[k];
                }
            }
        }
        // In-place factorization: env holds L (unit diagonal implied), diag
        // holds D.
        let scale = diag.iter().fold(0.0f64, |s, &d| s.max(d.abs()));
        for i in 0..n {
            let ji = jmin[i];
            for j in ji..i {
                let jj = jmin[j];
                let lo = ji.max(jj);
                let mut sum = env[row_start[i] + (j - ji)];
                for k in lo..j {
                    sum -= env[row_start[i] + (k - ji)] * diag[k] * env[row_start[j] + (k - jj)];
                }
                env[row_start[i] + (j - ji)] = sum / diag[j];
            }
            let mut d = diag[i];
            for k in ji..i {
                let l = env[row_start[i] + (k - ji)];
                d -= l * l * diag[k];
            }
            if !(d > 1e-14 * scale) {
                return Err(Error::Factorization { row: perm[i], pivot: d });
            }
            diag[i] = d;
        }
        Ok(SkylineLdl { n, diag, env, jmin, row_start, perm, iperm })
    }

    /// Solve `A x = b` (in the original, unpermuted indexing).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut z: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let ji = self.jmin[i];
            let mut acc = z[i];
            for k in ji..i {
                acc -= self.env[self.row_start[i] + (k - ji)] * z[k];
            }
            z[i] = acc;
        }
        for i in 0..n {
            z[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let ji = self.jmin[i];
            let zi = z[i];
            for k in ji..i {
                z[k] -= self.env[self.row_start[i] + (k - ji)] * zi;
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = z[i];
        }
        x
    }

    /// Map an original index to its position in the factorization ordering.
    pub fn new_index(&self, old: usize) -> usize {
        self.iperm[old]
    }
}

// ---------------------------------------------------------------------------
// Block shift-invert Lanczos

/// Options for [`solve_spectrum`].
#[derive(Debug, Clone)]
pub struct EigOptions {
    /// Number of eigenpairs requested.
    pub k: usize,
    /// Relative residual tolerance: `sqrt(r^T diag(M)^{-1} r) <= tol * lambda`.
    pub tol: f64,
    /// Seed for the random starting block.
    pub seed: u64,
    /// Krylov dimension cap; defaults to `min(n, max(6k + 30, 60))`.
    pub max_dim: Option<usize>,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions { k: 6, tol: 1e-8, seed: 7, max_dim: None }
    }
}

/// Eigenpairs of the Dirichlet Laplacian on a mesh.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    /// Ascending Dirichlet eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors over all mesh vertices (zero on the boundary),
    /// M-orthonormal, first significant entry positive.
    pub vectors: Vec<Vec<f64>>,
    /// Explicit relative residuals `sqrt(r^T diag(M)^{-1} r) / lambda`.
    pub residuals: Vec<f64>,
    /// True when every requested pair met the tolerance.
    pub converged: bool,
    /// Krylov dimension actually used.
    pub krylov_dim: usize,
    pub mesh_id: u64,
    pub n_interior: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Compute the lowest `opts.k` Dirichlet eigenpairs on `mesh`.
///
/// Returns `Ok` even when the residual target was not met within the Krylov
/// cap; check [`SpectralResult::converged`]. Hard failures (factorization
/// breakdown, mesh too coarse) return errors.
pub fn solve_spectrum(mesh: &TriMesh, opts: &EigOptions) -> Result<SpectralResult> {
    let sys = assemble(mesh)?;
    let result = solve_interior(&sys, opts)?;
    Ok(result)
}

/// Same as [`solve_spectrum`] but reusing an assembled system.
pub fn solve_interior(sys: &FemSystem, opts: &EigOptions) -> Result<SpectralResult> {
    let n = sys.k_int.n;
    let k = opts.k;
    if k == 0 {
        return Err(Error::InvalidParameter("requested k = 0 eigenpairs".into()));
    }
    if n < k {
        return Err(Error::MeshTooCoarse(format!(
            "{n} interior vertices cannot resolve {k} eigenpairs"
        )));
    }
    let max_dim = opts.max_dim.unwrap_or_else(|| (6 * k + 30).max(60)).min(n).max(k);
    let perm = rcm_order(&sys.k_int);
    let ldl = SkylineLdl::new(&sys.k_int, perm)?;

    const B: usize = 2; // block size: resolves multiplicity-2 clusters
    let steps = max_dim.div_ceil(B);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // Basis columns and their M-images, appended block by block.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut mbasis: Vec<Vec<f64>> = Vec::new();
    // Block tridiagonal entries of T.
    let mut t_mat = DMatrix::<f64>::zeros(steps * B, steps * B);

    /// M-orthonormalize `u` against every column in `basis` (two passes of
    /// modified Gram-Schmidt), restarting from a random direction on
    /// breakdown. Returns the unit column and its M-image, or `None` if
    /// even the restart collapses (Krylov space exhausted).
    fn orthonormalize(
        mut u: Vec<f64>,
        basis: &[Vec<f64>],
        mbasis: &[Vec<f64>],
        m_int: &CsrMatrix,
        rng: &mut ChaCha8Rng,
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let project = |u: &mut Vec<f64>| {
            for _pass in 0..2 {
                for (q, mq) in basis.iter().zip(mbasis) {
                    let c = dot(mq, u);
                    axpy(u, -c, q);
                }
            }
        };
        project(&mut u);
        let mut mu = m_int.matvec_alloc(&u);
        let mut norm2 = dot(&u, &mu);
        if !(norm2 > 1e-24) {
            for x in u.iter_mut() {
                *x = rng.gen::<f64>() - 0.5;
            }
            project(&mut u);
            mu = m_int.matvec_alloc(&u);
            norm2 = dot(&u, &mu);
            if !(norm2 > 1e-24) {
                return None;
            }
        }
        let norm = norm2.sqrt();
        for x in u.iter_mut() {
            *x /= norm;
        }
        for x in mu.iter_mut() {
            *x /= norm;
        }
        Some((u, mu))
    }

    // Initial block (short when the interior space itself is tiny).
    for c in 0..B.min(n) {
        let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        match orthonormalize(u, &basis, &mbasis, &sys.m_int, &mut rng) {
            Some((q, mq)) => {
                basis.push(q);
                mbasis.push(mq);
            }
            None if c > 0 => break,
            None => return Err(Error::Numeric("degenerate mass matrix".into())),
        }
    }

    // T is assembled as the explicit Rayleigh-Ritz projection
    // `t[r][c] = x_r^T M (OP x_c)`: each block's OP-image is dotted against
    // every basis column alive at that point and mirrored, which fills the
    // whole matrix without relying on recurrence bookkeeping (exact block
    // tridiagonality is not assumed, so breakdown restarts need no special
    // casing).
    let mut dim = 0usize;
    'outer: for j in 0..steps {
        // W = OP * X_j, one column at a time.
        let mut w_cols: Vec<Vec<f64>> = Vec::with_capacity(B);
        for c in 0..B {
            let col = j * B + c;
            if col >= basis.len() {
                break;
            }
            w_cols.push(ldl.solve(&mbasis[col]));
        }
        for (ci, wc) in w_cols.iter().enumerate() {
            let col = j * B + ci;
            for r in 0..basis.len() {
                let g = dot(&mbasis[r], wc);
                t_mat[(r, col)] = g;
                t_mat[(col, r)] = g;
            }
        }
        dim = basis.len();
        if dim >= max_dim || j + 1 == steps {
            break 'outer;
        }
        // Next block: orthonormalize W against everything seen so far.
        for wc in w_cols {
            match orthonormalize(wc, &basis, &mbasis, &sys.m_int, &mut rng) {
                Some((q, mq)) => {
                    basis.push(q);
                    mbasis.push(mq);
                }
                // Krylov space exhausted; stop growing the basis.
                None => break 'outer,
            }
        }
    }

    let t_sub = t_mat.view((0, 0), (dim, dim)).into_owned();
    let eig = SymmetricEigen::new(t_sub);
    // Ritz values theta (eigen of OP): lambda = 1/theta, want the largest k
    // thetas.
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let theta = eig.eigenvalues[idx];
        if !(theta > 0.0) {
            return Err(Error::Numeric(format!(
                "nonpositive Ritz value {theta:.3e} from an SPD pencil"
            )));
        }
        let y = eig.eigenvectors.column(idx);
        let mut v = vec![0.0; n];
        for (c, q) in basis.iter().enumerate().take(dim) {
            axpy(&mut v, y[c], q);
        }
        pairs.push((1.0 / theta, v));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Explicit residual check, sign normalization, zero extension.
    let mdiag = sys.m_int.diagonal();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut converged = true;
    for (lambda, v) in pairs {
        let kv = sys.k_int.matvec_alloc(&v);
        let mv = sys.m_int.matvec_alloc(&v);
        let mut r2 = 0.0;
        for i in 0..n {
            let r = kv[i] - lambda * mv[i];
            r2 += r * r / mdiag[i];
        }
        let res = r2.sqrt() / lambda;
        if !(res <= opts.tol) {
            converged = false;
        }
        let mut full = sys.extend(&v);
        let maxabs = full.iter().fold(0.0f64, |s, &x| s.max(x.abs()));
        if let Some(first) = full.iter().find(|x| x.abs() > 1e-12 * maxabs) {
            if *first < 0.0 {
                for x in full.iter_mut() {
                    *x = -*x;
                }
            }
        }
        eigenvalues.push(lambda);
        vectors.push(full);
        residuals.push(res);
    }

    Ok(SpectralResult {
        eigenvalues,
        vectors,
        residuals,
        converged,
        krylov_dim: dim,
        mesh_id: sys.mesh_id,
        n_interior: n,
    })
}

/// Rayleigh quotient `v^T K v / v^T M v` over full-mesh vectors.
pub fn rayleigh_quotient(sys: &FemSystem, v_full: &[f64]) -> f64 {
    let num = sys.k_full.quadratic(v_full, v_full);
    let den = sys.m_full.quadratic(v_full, v_full);
    num / den
}

/// Group ascending eigenvalues into clusters: consecutive values belong to
/// one cluster when their relative gap is at most `rel_tol`.
pub fn multiplicity_cluster(eigs: &[f64], rel_tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..eigs.len() {
        let joined = match groups.last() {
            Some(g) => {
                let prev = eigs[*g.last().expect("nonempty group")];
                let gap = (eigs[i] - prev).abs() / eigs[i].abs().max(prev.abs()).max(1e-300);
                gap <= rel_tol
            }
            None => false,
        };
        if joined {
            groups.last_mut().expect("nonempty").push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    groups
}

/// Write eigenvalues/residuals as CSV (`index,eigenvalue,residual`).
pub fn write_spectrum_csv(path: &Path, r: &SpectralResult) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "index,eigenvalue,residual")?;
    for i in 0..r.eigenvalues.len() {
        writeln!(f, "{},{:.12e},{:.12e}", i + 1, r.eigenvalues[i], r.residuals[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_disk, make_rectangle, Point};
    use crate::mesh::triangulate;
    use crate::reference::{disk_spectrum, rectangle_spectrum};

    #[test]
    fn disk_spectrum_within_one_percent() {
        let d = make_disk(1.0, 512).unwrap();
        let m = triangulate(&d, 0.03).unwrap();
        let r = solve_spectrum(&m, &EigOptions::default()).unwrap();
        assert!(r.converged, "residuals {:?}", r.residuals);
        let oracle = disk_spectrum(1.0, 6).unwrap();
        for (got, want) in r.eigenvalues.iter().zip(&oracle.eigenvalues) {
            assert!(
                (got - want).abs() / want < 0.01,
                "got {got}, want {want}"
            );
            assert!(got > want, "Ritz eigenvalues approach from above");
        }
    }

    #[test]
    fn rectangle_spectrum_within_one_percent() {
        let d = make_rectangle(std::f64::consts::PI, std::f64::consts::PI).unwrap();
        let m = triangulate(&d, 0.05).unwrap();
        let r = solve_spectrum(&m, &EigOptions { k: 4, ..Default::default() }).unwrap();
        assert!(r.converged);
        let oracle = rectangle_spectrum(std::f64::consts::PI, std::f64::consts::PI, 4).unwrap();
        for (got, want) in r.eigenvalues.iter().zip(&oracle.eigenvalues) {
            assert!((got - want).abs() / want < 0.01, "got {got}, want {want}");
        }
    }

    #[test]
    fn refinement_error_ratio_is_quadratic() {
        let d = make_rectangle(std::f64::consts::PI, std::f64::consts::PI).unwrap();
        let m0 = triangulate(&d, 0.4).unwrap();
        let m1 = m0.refine().unwrap();
        let m2 = m1.refine().unwrap();
        let exact = 2.0;
        let err = |m: &TriMesh| {
            let r = solve_spectrum(m, &EigOptions { k: 1, ..Default::default() }).unwrap();
            r.eigenvalues[0] - exact
        };
        let (e0, e1, e2) = (err(&m0), err(&m1), err(&m2));
        assert!(e0 > 0.0 && e1 > 0.0 && e2 > 0.0, "errors from above");
        for ratio in [e0 / e1, e1 / e2] {
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn eigenvectors_are_m_orthonormal() {
        let d = make_disk(1.0, 128).unwrap();
        let m = triangulate(&d, 0.08).unwrap();
        let sys = assemble(&m).unwrap();
        let r = solve_interior(&sys, &EigOptions::default()).unwrap();
        for i in 0..r.vectors.len() {
            for j in 0..=i {
                let g = sys.m_full.quadratic(&r.vectors[i], &r.vectors[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-8, "gram[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn mass_matrix_sums_to_area() {
        let d = make_disk(1.0, 128).unwrap();
        let m = triangulate(&d, 0.1).unwrap();
        let sys = assemble(&m).unwrap();
        assert!((sys.m_full.sum_all() - m.area()).abs() < 1e-12);
        // Stiffness annihilates constants: K * 1 = 0.
        let ones = vec![1.0; m.vertices.len()];
        let k1 = sys.k_full.matvec_alloc(&ones);
        let worst = k1.iter().fold(0.0f64, |s, &x| s.max(x.abs()));
        assert!(worst < 1e-10, "row sums {worst}");
    }

    #[test]
    fn single_interior_vertex_patch_matches_hand_computation() {
        // Unit cross patch on the (0,pi)^2 square: 4 corner vertices, one
        // center vertex, 4 triangles. The only hat gives the 1x1 interior
        // system lambda = K_cc / M_cc = 4 / (pi^2/6) = 24/pi^2.
        let s = std::f64::consts::PI;
        let verts = vec![
            Point::new(0.0, 0.0),
            Point::new(s, 0.0),
            Point::new(s, s),
            Point::new(0.0, s),
            Point::new(s / 2.0, s / 2.0),
        ];
        let tris = vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]];
        let m = TriMesh::from_parts(verts, tris, 0).unwrap();
        assert_eq!(m.interior_vertices(), vec![4]);
        let sys = assemble(&m).unwrap();
        let r = solve_interior(&sys, &EigOptions { k: 1, ..Default::default() }).unwrap();
        let expect = 24.0 / (s * s);
        assert!((r.eigenvalues[0] - expect).abs() < 1e-12, "{}", r.eigenvalues[0]);
        assert!(r.eigenvalues[0] >= 2.0, "Ritz bound above the true 2.0");
        // Rayleigh quotient of the hat equals the same value.
        let mut hat = vec![0.0; 5];
        hat[4] = 1.0;
        assert!((rayleigh_quotient(&sys, &hat) - expect).abs() < 1e-12);
    }

    #[test]
    fn random_vector_rayleigh_dominates_lambda1() {
        use rand::Rng;
        let d = make_disk(1.0, 128).unwrap();
        let m = triangulate(&d, 0.1).unwrap();
        let sys = assemble(&m).unwrap();
        let r = solve_interior(&sys, &EigOptions { k: 1, ..Default::default() }).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let v: Vec<f64> = (0..m.vertices.len())
                .map(|i| if m.is_boundary_vertex[i] { 0.0 } else { rng.gen::<f64>() - 0.5 })
                .collect();
            let q = rayleigh_quotient(&sys, &v);
            assert!(q >= r.eigenvalues[0] * (1.0 - 1e-12), "{q}");
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let d = make_disk(1.0, 128).unwrap();
        let m = triangulate(&d, 0.1).unwrap();
        let r1 = solve_spectrum(&m, &EigOptions::default()).unwrap();
        let r2 = solve_spectrum(&m, &EigOptions::default()).unwrap();
        assert_eq!(r1.eigenvalues, r2.eigenvalues);
        assert_eq!(r1.vectors, r2.vectors);
    }

    #[test]
    fn starved_krylov_space_reports_nonconvergence() {
        let d = make_rectangle(1.0, 1.0).unwrap();
        let m = triangulate(&d, 0.08).unwrap();
        let r = solve_spectrum(
            &m,
            &EigOptions { k: 6, max_dim: Some(8), ..Default::default() },
        )
        .unwrap();
        assert!(!r.converged, "8-dim Krylov space cannot deliver 6 pairs at 1e-8");
    }

    #[test]
    fn cluster_grouping() {
        let eigs = [2.0, 5.0, 5.0000001, 8.0];
        let g = multiplicity_cluster(&eigs, 1e-6);
        assert_eq!(g, vec![vec![0], vec![1, 2], vec![3]]);
        let singletons = multiplicity_cluster(&eigs, 0.0);
        assert_eq!(singletons.len(), 4);
        assert!(multiplicity_cluster(&[], 1e-6).is_empty());
    }

    #[test]
    fn skyline_solves_spd_system() {
        // Assemble a small stiffness-like SPD matrix and verify solve.
        let d = make_rectangle(1.0, 1.0).unwrap();
        let m = triangulate(&d, 0.2).unwrap();
        let sys = assemble(&m).unwrap();
        let n = sys.k_int.n;
        let perm = rcm_order(&sys.k_int);
        let ldl = SkylineLdl::new(&sys.k_int, perm).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = ldl.solve(&b);
        let kx = sys.k_int.matvec_alloc(&x);
        let err: f64 = kx.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err / nb < 1e-10, "relative solve error {}", err / nb);
    }
}
