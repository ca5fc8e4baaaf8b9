//! Primal-dual interior-point solver for standard-form conic programs.
//!
//! Algorithm: homogeneous self-dual embedding with Nesterov-Todd scaling and
//! a Mehrotra predictor-corrector, dense block factorizations. Free variables
//! are eliminated in a presolve step (orthogonal projection of the equality
//! system), so the interior-point iteration only ever sees proper cones; the
//! presolve also detects inconsistent and redundant equality rows. Everything
//! is deterministic: identical input and options produce identical iterate
//! sequences.

use super::{
    IterStats, Residuals, SdpProblem, SdpSolution, SolveOptions, SolveStatus, VarRef,
};
use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Relative singular-value cutoff for presolve rank decisions.
const PRESOLVE_RANK_TOL: f64 = 1e-11;

// ---------------------------------------------------------------------------
// svec layout
// ---------------------------------------------------------------------------

/// Packed layout of the cone variables: svec'd PSD blocks (upper triangle,
/// row-major, off-diagonals scaled by sqrt(2)) followed by the nonnegative
/// scalars.
#[derive(Debug, Clone)]
struct ConeLayout {
    psd_sizes: Vec<usize>,
    psd_offsets: Vec<usize>,
    nonneg: usize,
    nonneg_offset: usize,
    total: usize,
}

fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn svec_pos(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * (2 * n - i + 1) / 2 + (j - i)
}

impl ConeLayout {
    fn new(psd_sizes: Vec<usize>, nonneg: usize) -> Self {
        let mut psd_offsets = Vec::with_capacity(psd_sizes.len());
        let mut off = 0;
        for &n in &psd_sizes {
            psd_offsets.push(off);
            off += svec_len(n);
        }
        Self {
            psd_sizes,
            psd_offsets,
            nonneg,
            nonneg_offset: off,
            total: off + nonneg,
        }
    }

    fn index(&self, v: &VarRef) -> usize {
        match *v {
            VarRef::Psd { block, row, col } => {
                self.psd_offsets[block] + svec_pos(self.psd_sizes[block], row, col)
            }
            VarRef::Nonneg(k) => self.nonneg_offset + k,
            VarRef::Free(_) => unreachable!("free variables are eliminated before the cone layout"),
        }
    }

    /// Barrier degree nu = sum of PSD block sizes + number of nonneg vars.
    fn barrier_degree(&self) -> f64 {
        (self.psd_sizes.iter().sum::<usize>() + self.nonneg) as f64
    }

    fn unsvec(&self, block: usize, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.psd_sizes[block];
        let off = self.psd_offsets[block];
        let mut m = DMatrix::zeros(n, n);
        let mut idx = off;
        for i in 0..n {
            for j in i..n {
                let v = x[idx];
                if i == j {
                    m[(i, i)] = v;
                } else {
                    let w = v / SQRT2;
                    m[(i, j)] = w;
                    m[(j, i)] = w;
                }
                idx += 1;
            }
        }
        m
    }

    fn svec_into(&self, block: usize, m: &DMatrix<f64>, x: &mut DVector<f64>) {
        let n = self.psd_sizes[block];
        let off = self.psd_offsets[block];
        let mut idx = off;
        for i in 0..n {
            for j in i..n {
                x[idx] = if i == j {
                    m[(i, i)]
                } else {
                    SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)])
                };
                idx += 1;
            }
        }
    }

    /// The cone identity element (identity matrices, ones).
    fn identity(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.total);
        for (b, &n) in self.psd_sizes.iter().enumerate() {
            let off = self.psd_offsets[b];
            for i in 0..n {
                e[off + svec_pos(n, i, i)] = 1.0;
            }
        }
        for k in 0..self.nonneg {
            e[self.nonneg_offset + k] = 1.0;
        }
        e
    }
}

// ---------------------------------------------------------------------------
// Vectorization of the problem
// ---------------------------------------------------------------------------

struct Vectorized {
    layout: ConeLayout,
    a_cone: DMatrix<f64>,
    a_free: DMatrix<f64>,
    b: DVector<f64>,
    c_cone: DVector<f64>,
    c_free: DVector<f64>,
}

fn vectorize(problem: &SdpProblem) -> Vectorized {
    let layout = ConeLayout::new(problem.psd_blocks.clone(), problem.nonneg_vars);
    let m = problem.equalities.len();
    let nf = problem.free_vars;
    let mut a_cone = DMatrix::zeros(m, layout.total);
    let mut a_free = DMatrix::zeros(m, nf);
    let mut b = DVector::zeros(m);
    let mut c_cone = DVector::zeros(layout.total);
    let mut c_free = DVector::zeros(nf);

    let coeff = |v: &VarRef, val: f64| -> f64 {
        match *v {
            VarRef::Psd { row, col, .. } if row != col => SQRT2 * val,
            _ => val,
        }
    };

    for (k, row) in problem.equalities.iter().enumerate() {
        b[k] = row.rhs;
        for (v, val) in &row.terms {
            match v {
                VarRef::Free(j) => a_free[(k, *j)] += val,
                _ => a_cone[(k, layout.index(v))] += coeff(v, *val),
            }
        }
    }
    for (v, val) in &problem.objective {
        match v {
            VarRef::Free(j) => c_free[*j] += val,
            _ => c_cone[layout.index(v)] += coeff(v, *val),
        }
    }

    Vectorized {
        layout,
        a_cone,
        a_free,
        b,
        c_cone,
        c_free,
    }
}

// ---------------------------------------------------------------------------
// Presolve: free-variable elimination and row reduction
// ---------------------------------------------------------------------------

struct Reduced {
    /// Constraint matrix with orthonormal rows.
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    /// Constant objective offset from eliminated free variables.
    offset: f64,
    /// x_f = free_rec * (b_orig - A_cone x_cone).
    free_rec: Option<DMatrix<f64>>,
    /// y_orig = y_map * y_reduced + y_const.
    y_map: DMatrix<f64>,
    y_const: DVector<f64>,
    notes: Vec<String>,
}

enum PresolveOutcome {
    Reduced(Reduced),
    /// Decided without running the interior-point loop.
    Decided(SolveStatus, String),
}

fn presolve(v: &Vectorized) -> PresolveOutcome {
    let m = v.a_cone.nrows();
    let n = v.layout.total;
    let nf = v.a_free.ncols();
    let mut notes = Vec::new();

    // With no equality rows, free variables are entirely unconstrained.
    if nf > 0 && m == 0 {
        if v.c_free.norm() > 1e-12 {
            return PresolveOutcome::Decided(
                SolveStatus::Unbounded,
                "objective decreases along an unconstrained free variable direction".into(),
            );
        }
        return PresolveOutcome::Reduced(Reduced {
            a: DMatrix::zeros(0, n),
            b: DVector::zeros(0),
            c: v.c_cone.clone(),
            offset: 0.0,
            free_rec: Some(DMatrix::zeros(nf, 0)),
            y_map: DMatrix::zeros(0, 0),
            y_const: DVector::zeros(0),
            notes,
        });
    }

    // Free-variable elimination: project the equality system onto the
    // orthogonal complement of range(A_free).
    let (a_proj, b_proj, c_hat, offset, free_rec, u_r, w_vec) = if nf > 0 {
        let svd = SVD::new(v.a_free.clone(), true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let tol = PRESOLVE_RANK_TOL * smax.max(1.0);
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        let u = svd.u.as_ref().expect("svd with u");
        let v_t = svd.v_t.as_ref().expect("svd with v");
        let u_r = u.columns(0, rank).into_owned();
        let v_r = v_t.rows(0, rank).transpose().into_owned();
        let sig_inv = DVector::from_iterator(
            rank,
            svd.singular_values.iter().take(rank).map(|&s| 1.0 / s),
        );

        // Unbounded along a free direction the constraints do not see?
        let c_range = &v_r * (v_r.transpose() * &v.c_free);
        let c_null_norm = (&v.c_free - &c_range).norm();
        if c_null_norm > 1e-9 * (1.0 + v.c_free.norm()) {
            return PresolveOutcome::Decided(
                SolveStatus::Unbounded,
                "objective decreases along an unconstrained free variable direction".into(),
            );
        }
        if rank < nf {
            notes.push(format!(
                "{} free variable direction(s) unconstrained; pinned to zero",
                nf - rank
            ));
        }

        // x_f = V_r diag(1/sigma) U_r^T (b - A_cone x_cone)
        let free_rec = {
            let mut m_rec = DMatrix::zeros(nf, m);
            let ut = u_r.transpose();
            for i in 0..rank {
                let scaled = ut.row(i) * sig_inv[i];
                let col = v_r.column(i);
                for r in 0..nf {
                    for cidx in 0..m {
                        m_rec[(r, cidx)] += col[r] * scaled[cidx];
                    }
                }
            }
            m_rec
        };

        let w = DVector::from_iterator(
            rank,
            (0..rank).map(|i| sig_inv[i] * v_r.column(i).dot(&v.c_free)),
        );

        // Reduced objective and offset.
        let c_hat = &v.c_cone - v.a_cone.transpose() * (&u_r * &w);
        let offset = (&free_rec * &v.b).dot(&v.c_free);

        // Project rows: A_proj = (I - U_r U_r^T) A_cone.
        let a_proj = &v.a_cone - &u_r * (u_r.transpose() * &v.a_cone);
        let b_proj = &v.b - &u_r * (u_r.transpose() * &v.b);
        (
            a_proj,
            b_proj,
            c_hat,
            offset,
            Some(free_rec),
            Some(u_r),
            Some(w),
        )
    } else {
        (
            v.a_cone.clone(),
            v.b.clone(),
            v.c_cone.clone(),
            0.0,
            None,
            None,
            None,
        )
    };

    // Row reduction: orthonormalize the remaining rows, dropping dependent
    // ones, and check right-hand-side consistency.
    let (a_hat, b_hat, y_map) = if m > 0 && n == 0 {
        if b_proj.norm() > 1e-8 * (1.0 + v.b.norm()) {
            return PresolveOutcome::Decided(
                SolveStatus::Infeasible,
                "equality system is inconsistent (no variables can absorb the right-hand side)"
                    .into(),
            );
        }
        (DMatrix::zeros(0, 0), DVector::zeros(0), DMatrix::zeros(m, 0))
    } else if m > 0 {
        let svd = SVD::new(a_proj.clone(), true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
        let tol = PRESOLVE_RANK_TOL * smax.max(1.0);
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        let u = svd.u.as_ref().expect("svd with u");
        let v_t = svd.v_t.as_ref().expect("svd with v");
        let u_r = u.columns(0, rank).into_owned();
        let a_hat = v_t.rows(0, rank).into_owned();
        let ub = u_r.transpose() * &b_proj;
        let b_hat = DVector::from_iterator(
            rank,
            (0..rank).map(|i| ub[i] / svd.singular_values[i]),
        );
        // b must lie in the row space actually reachable.
        let b_residual = (&b_proj - &u_r * &ub).norm();
        if b_residual > 1e-8 * (1.0 + b_proj.norm()) {
            return PresolveOutcome::Decided(
                SolveStatus::Infeasible,
                "equality system is inconsistent (right-hand side outside the row space)".into(),
            );
        }
        if rank < m {
            notes.push(format!(
                "dropped {} dependent equality row(s) during presolve",
                m - rank
            ));
        }
        // y_orig = U_r diag(1/sigma) y_reduced (+ free-var correction).
        let mut y_map = DMatrix::zeros(m, rank);
        for j in 0..rank {
            let s_inv = 1.0 / svd.singular_values[j];
            for i in 0..m {
                y_map[(i, j)] = u_r[(i, j)] * s_inv;
            }
        }
        (a_hat, b_hat, y_map)
    } else {
        (DMatrix::zeros(0, n), DVector::zeros(0), DMatrix::zeros(0, 0))
    };

    let y_const = match (&u_r, &w_vec) {
        (Some(u_r), Some(w)) => u_r * w,
        _ => DVector::zeros(m),
    };

    PresolveOutcome::Reduced(Reduced {
        a: a_hat,
        b: b_hat,
        c: c_hat,
        offset,
        free_rec,
        y_map,
        y_const,
        notes,
    })
}

// ---------------------------------------------------------------------------
// Nesterov-Todd scaling
// ---------------------------------------------------------------------------

struct BlockScaling {
    /// r with X = r diag(lambda) r^T and S = r^{-T} diag(lambda) r^{-1}.
    r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    /// H = r r^T; the scaled Hessian is G(U) = H^{-1} U H^{-1}.
    h: DMatrix<f64>,
    h_inv: DMatrix<f64>,
    lambda: DVector<f64>,
    /// Cholesky factors of X and S for step-length computations.
    lx: DMatrix<f64>,
    ls: DMatrix<f64>,
}

struct Scaling {
    blocks: Vec<BlockScaling>,
    /// Nonnegative part: w_i = sqrt(x_i/s_i), lambda_i = sqrt(x_i s_i).
    w: DVector<f64>,
    lambda_nn: DVector<f64>,
}

fn compute_scaling(layout: &ConeLayout, x: &DVector<f64>, s: &DVector<f64>) -> Result<Scaling> {
    let mut blocks = Vec::with_capacity(layout.psd_sizes.len());
    for bidx in 0..layout.psd_sizes.len() {
        let xm = layout.unsvec(bidx, x);
        let sm = layout.unsvec(bidx, s);
        let chol_x = Cholesky::new(xm).ok_or_else(|| {
            Error::NumericalFailure("primal PSD iterate lost positive definiteness".into())
        })?;
        let chol_s = Cholesky::new(sm).ok_or_else(|| {
            Error::NumericalFailure("dual PSD iterate lost positive definiteness".into())
        })?;
        let lx = chol_x.l();
        let ls = chol_s.l();
        let m = ls.transpose() * &lx;
        let svd = SVD::new(m, false, true);
        let v_t = svd.v_t.as_ref().expect("svd with v");
        let lambda = svd.singular_values.clone();
        if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::NumericalFailure(
                "Nesterov-Todd scaling broke down (vanishing singular value)".into(),
            ));
        }
        let n = lambda.len();
        // r = Lx V diag(lambda^{-1/2}); r_inv = diag(lambda^{1/2}) V^T Lx^{-1}.
        let mut vmat = v_t.transpose();
        for j in 0..n {
            let f = 1.0 / lambda[j].sqrt();
            for i in 0..n {
                vmat[(i, j)] *= f;
            }
        }
        let r = &lx * &vmat;
        let lx_inv = lx
            .clone()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| Error::NumericalFailure("singular Cholesky factor".into()))?;
        let mut vt_scaled = v_t.clone();
        for i in 0..n {
            let f = lambda[i].sqrt();
            for j in 0..n {
                vt_scaled[(i, j)] *= f;
            }
        }
        let r_inv = &vt_scaled * &lx_inv;
        let h = &r * r.transpose();
        let h_inv = r_inv.transpose() * &r_inv;
        blocks.push(BlockScaling {
            r,
            r_inv,
            h,
            h_inv,
            lambda,
            lx,
            ls,
        });
    }

    let nn = layout.nonneg;
    let mut w = DVector::zeros(nn);
    let mut lambda_nn = DVector::zeros(nn);
    for k in 0..nn {
        let xi = x[layout.nonneg_offset + k];
        let si = s[layout.nonneg_offset + k];
        if !(xi > 0.0 && si > 0.0) {
            return Err(Error::NumericalFailure(
                "nonnegative iterate left the interior".into(),
            ));
        }
        w[k] = (xi / si).sqrt();
        lambda_nn[k] = (xi * si).sqrt();
    }

    Ok(Scaling {
        blocks,
        w,
        lambda_nn,
    })
}

impl Scaling {
    /// G^{-1}(u) = H u H per PSD block, x/s elementwise on the orthant.
    fn apply_g_inv(&self, layout: &ConeLayout, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(layout.total);
        for (b, sc) in self.blocks.iter().enumerate() {
            let um = layout.unsvec(b, u);
            let res = &sc.h * um * &sc.h;
            layout.svec_into(b, &res, &mut out);
        }
        for k in 0..layout.nonneg {
            let idx = layout.nonneg_offset + k;
            out[idx] = u[idx] * sc_sq(self.w[k]);
        }
        out
    }

    /// G(u) = H^{-1} u H^{-1} per PSD block, s/x elementwise on the orthant.
    fn apply_g(&self, layout: &ConeLayout, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(layout.total);
        for (b, sc) in self.blocks.iter().enumerate() {
            let um = layout.unsvec(b, u);
            let res = &sc.h_inv * um * &sc.h_inv;
            layout.svec_into(b, &res, &mut out);
        }
        for k in 0..layout.nonneg {
            let idx = layout.nonneg_offset + k;
            out[idx] = u[idx] / sc_sq(self.w[k]);
        }
        out
    }

    /// W^T(u) = r^{-T} u r^{-1} per block, u/w on the orthant.
    fn apply_wt(&self, layout: &ConeLayout, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(layout.total);
        for (b, sc) in self.blocks.iter().enumerate() {
            let um = layout.unsvec(b, u);
            let res = sc.r_inv.transpose() * um * &sc.r_inv;
            layout.svec_into(b, &res, &mut out);
        }
        for k in 0..layout.nonneg {
            let idx = layout.nonneg_offset + k;
            out[idx] = u[idx] / self.w[k];
        }
        out
    }

    /// W(u) = r^{-1} u r^{-T} per block, u/w on the orthant.
    fn apply_w(&self, layout: &ConeLayout, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(layout.total);
        for (b, sc) in self.blocks.iter().enumerate() {
            let um = layout.unsvec(b, u);
            let res = &sc.r_inv * um * sc.r_inv.transpose();
            layout.svec_into(b, &res, &mut out);
        }
        for k in 0..layout.nonneg {
            let idx = layout.nonneg_offset + k;
            out[idx] = u[idx] / self.w[k];
        }
        out
    }

    /// W^{-T}(u) = r^T u r per block, w*u on the orthant.
    fn apply_w_inv_t(&self, layout: &ConeLayout, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(layout.total);
        for (b, sc) in self.blocks.iter().enumerate() {
            let um = layout.unsvec(b, u);
            let res = sc.r.transpose() * um * &sc.r;
            layout.svec_into(b, &res, &mut out);
        }
        for k in 0..layout.nonneg {
            let idx = layout.nonneg_offset + k;
            out[idx] = u[idx] * self.w[k];
        }
        out
    }

    /// svec of the scaled point lambda (block-diagonal).
    fn lambda_vec(&self, layout: &ConeLayout) -> DVector<f64> {
        let mut out = DVector::zeros(layout.total);
        for (b, sc) in self.blocks.iter().enumerate() {
            let n = layout.psd_sizes[b];
            let off = layout.psd_offsets[b];
            for i in 0..n {
                out[off + svec_pos(n, i, i)] = sc.lambda[i];
            }
        }
        for k in 0..layout.nonneg {
            out[layout.nonneg_offset + k] = self.lambda_nn[k];
        }
        out
    }

    /// Solve lambda o z = v in the Jordan algebra (lambda is diagonal).
    fn lambda_solve(&self, layout: &ConeLayout, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        for (b, sc) in self.blocks.iter().enumerate() {
            let n = layout.psd_sizes[b];
            let off = layout.psd_offsets[b];
            let mut idx = off;
            for i in 0..n {
                for j in i..n {
                    out[idx] = 2.0 * v[idx] / (sc.lambda[i] + sc.lambda[j]);
                    idx += 1;
                }
            }
        }
        for k in 0..layout.nonneg {
            let idx = layout.nonneg_offset + k;
            out[idx] = v[idx] / self.lambda_nn[k];
        }
        out
    }

    /// lambda o lambda.
    fn lambda_square(&self, layout: &ConeLayout) -> DVector<f64> {
        let mut out = DVector::zeros(layout.total);
        for (b, sc) in self.blocks.iter().enumerate() {
            let n = layout.psd_sizes[b];
            let off = layout.psd_offsets[b];
            for i in 0..n {
                out[off + svec_pos(n, i, i)] = sc.lambda[i] * sc.lambda[i];
            }
        }
        for k in 0..layout.nonneg {
            out[layout.nonneg_offset + k] = self.lambda_nn[k] * self.lambda_nn[k];
        }
        out
    }
}

fn sc_sq(v: f64) -> f64 {
    v * v
}

/// Jordan product u o v per block: (UV + VU)/2 for PSD, elementwise on the
/// orthant.
fn jordan_product(layout: &ConeLayout, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(layout.total);
    for b in 0..layout.psd_sizes.len() {
        let um = layout.unsvec(b, u);
        let vm = layout.unsvec(b, v);
        let prod = (&um * &vm + &vm * &um) * 0.5;
        layout.svec_into(b, &prod, &mut out);
    }
    for k in 0..layout.nonneg {
        let idx = layout.nonneg_offset + k;
        out[idx] = u[idx] * v[idx];
    }
    out
}

/// Largest alpha with x + alpha dx staying in the cone, given the Cholesky
/// factor of the current block values. Returns +inf when unbounded.
fn max_step(
    layout: &ConeLayout,
    chols: &[&DMatrix<f64>],
    x: &DVector<f64>,
    dx: &DVector<f64>,
) -> f64 {
    let mut alpha: f64 = f64::INFINITY;
    for b in 0..layout.psd_sizes.len() {
        let l = chols[b];
        let dm = layout.unsvec(b, dx);
        // min eigenvalue of L^{-1} dX L^{-T}
        let t = l
            .clone()
            .solve_lower_triangular(&dm)
            .expect("triangular solve");
        let m = l
            .clone()
            .solve_lower_triangular(&t.transpose())
            .expect("triangular solve");
        let sym = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let emin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if emin < 0.0 {
            alpha = alpha.min(-1.0 / emin);
        }
    }
    for k in 0..layout.nonneg {
        let idx = layout.nonneg_offset + k;
        if dx[idx] < 0.0 {
            alpha = alpha.min(-x[idx] / dx[idx]);
        }
    }
    alpha
}

// ---------------------------------------------------------------------------
// The homogeneous self-dual interior-point loop
// ---------------------------------------------------------------------------

struct ConeOutcome {
    status: SolveStatus,
    x: DVector<f64>,
    y: DVector<f64>,
    s: DVector<f64>,
    tau: f64,
    #[allow(dead_code)]
    kappa: f64,
    iterations: Vec<IterStats>,
    note: Option<String>,
}

#[allow(clippy::too_many_lines)]
fn solve_cone(
    layout: &ConeLayout,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    opts: &SolveOptions,
) -> ConeOutcome {
    let m = a.nrows();
    let n = layout.total;
    let nu = layout.barrier_degree() + 1.0;

    let mut x = layout.identity();
    let mut s = layout.identity();
    let mut y = DVector::zeros(m);
    let mut tau = 1.0f64;
    let mut kappa = 1.0f64;
    let mut iterations = Vec::new();

    let b_norm = b.norm();
    let c_norm = c.norm();

    // Best iterate seen so far, by worst normalized exit metric. Returned on
    // breakdown or iteration cap so late-stage degradation never destroys an
    // already-good point.
    let mut best: Option<(f64, DVector<f64>, DVector<f64>, DVector<f64>, f64, f64)> = None;

    macro_rules! bail {
        ($status:expr, $note:expr) => {{
            let (bx, by_, bs, btau, bkappa) = match best {
                Some((_, bx, by_, bs, btau, bkappa)) => (bx, by_, bs, btau, bkappa),
                None => (x.clone(), y.clone(), s.clone(), tau, kappa),
            };
            return ConeOutcome {
                status: $status,
                x: bx,
                y: by_,
                s: bs,
                tau: btau,
                kappa: bkappa,
                iterations,
                note: Some($note.into()),
            };
        }};
    }

    for iter in 0..opts.max_iterations {
        // Residuals of the homogeneous system.
        let r_p = a * &x - b * tau;
        let r_d = a.transpose() * &y + &s - c * tau;
        let r_g = c.dot(&x) - b.dot(&y) + kappa;
        let gap = x.dot(&s);
        let mu = (gap + tau * kappa) / nu;

        let pobj = c.dot(&x) / tau;
        let dobj = b.dot(&y) / tau;
        let pres = r_p.norm() / (tau * (1.0 + b_norm));
        let dres = r_d.norm() / (tau * (1.0 + c_norm));
        let absgap = gap / (tau * tau);
        let objgap = (pobj - dobj).abs();
        let scale = pobj.abs().max(dobj.abs()).max(1.0);
        // Either gap measure certifies eps-optimality once both residuals
        // are small; the complementarity product is the slower of the two to
        // converge in the dense endgame.
        let gap_measure = objgap.min(absgap);

        iterations.push(IterStats {
            iteration: iter,
            primal_objective: pobj,
            dual_objective: dobj,
            gap: absgap,
            primal_residual: pres,
            dual_residual: dres,
            tau,
            kappa,
            step: 0.0,
        });
        if opts.verbose {
            eprintln!(
                "iter {iter:3}  pobj {pobj:+.6e}  dobj {dobj:+.6e}  gap {absgap:.3e}  pres {pres:.3e}  dres {dres:.3e}  tau {tau:.3e}"
            );
        }

        let phi = (pres / opts.tol_feasibility)
            .max(dres / opts.tol_feasibility)
            .max(gap_measure / (opts.tol_gap * scale));
        if best.as_ref().map_or(true, |(bphi, ..)| phi < *bphi) {
            best = Some((phi, x.clone(), y.clone(), s.clone(), tau, kappa));
        }
        if phi <= 1.0 {
            return ConeOutcome {
                status: SolveStatus::Optimal,
                x,
                y,
                s,
                tau,
                kappa,
                iterations,
                note: None,
            };
        }

        // Infeasibility certificates.
        let by = b.dot(&y);
        if by > 0.0 {
            let cert = (a.transpose() * &y + &s).norm() / by;
            if cert <= opts.tol_infeasibility * (1.0 + c_norm) {
                return ConeOutcome {
                    status: SolveStatus::Infeasible,
                    x,
                    y,
                    s,
                    tau,
                    kappa,
                    iterations,
                    note: Some("primal infeasibility certificate found".into()),
                };
            }
        }
        let cx = c.dot(&x);
        if cx < 0.0 {
            let cert = (a * &x).norm() / (-cx);
            if cert <= opts.tol_infeasibility * (1.0 + b_norm) {
                return ConeOutcome {
                    status: SolveStatus::Unbounded,
                    x,
                    y,
                    s,
                    tau,
                    kappa,
                    iterations,
                    note: Some("dual infeasibility certificate found (primal unbounded)".into()),
                };
            }
        }

        // Scaling and Schur complement.
        let scaling = match compute_scaling(layout, &x, &s) {
            Ok(sc) => sc,
            Err(e) => bail!(SolveStatus::NumericalFailure, e.to_string()),
        };
        let mut ginv_at = DMatrix::zeros(n, m);
        for k in 0..m {
            let row: DVector<f64> = a.row(k).transpose();
            ginv_at.set_column(k, &scaling.apply_g_inv(layout, &row));
        }
        let schur = a * &ginv_at;
        let schur_chol = match Cholesky::new(schur.clone()) {
            Some(ch) => ch,
            None => {
                // One regularized retry.
                let jitter = 1e-14 * (schur.trace() / m.max(1) as f64).max(1.0);
                let reg = &schur + DMatrix::identity(m, m) * jitter;
                match Cholesky::new(reg) {
                    Some(ch) => ch,
                    None => bail!(
                        SolveStatus::NumericalFailure,
                        "Schur complement factorization broke down"
                    ),
                }
            }
        };

        // solve(d, p): G dx - A^T dy = -d, A dx = p, with one round of
        // iterative refinement to hold accuracy once the scaling becomes
        // ill-conditioned near the solution.
        let solve_once = |d: &DVector<f64>, p: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
            let t = scaling.apply_g_inv(layout, d);
            let rhs = p + a * &t;
            let dy = schur_chol.solve(&rhs);
            let dx = scaling.apply_g_inv(layout, &(a.transpose() * &dy - d));
            (dx, dy)
        };
        let kkt_solve = |d: &DVector<f64>, p: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
            let (mut dx, mut dy) = solve_once(d, p);
            for _ in 0..2 {
                let r1 = scaling.apply_g(layout, &dx) - a.transpose() * &dy + d;
                let r2 = a * &dx - p;
                let scale = 1.0 + d.norm() + p.norm();
                if r1.norm() + r2.norm() <= 1e-13 * scale {
                    break;
                }
                let (ex, ey) = solve_once(&r1, &(-&r2));
                dx += ex;
                dy += ey;
            }
            (dx, dy)
        };

        // tau-direction.
        let (dx1, dy1) = kkt_solve(c, b);
        let tau_denom = c.dot(&dx1) - b.dot(&dy1) - kappa / tau;
        if tau_denom.abs() < 1e-300 {
            bail!(SolveStatus::NumericalFailure, "degenerate tau system");
        }

        let lambda = scaling.lambda_vec(layout);
        let lambda_sq = scaling.lambda_square(layout);

        // One Newton solve for given right-hand sides.
        let assemble = |rhs_p: &DVector<f64>,
                        rhs_d: &DVector<f64>,
                        rhs_g: f64,
                        d_c: &DVector<f64>,
                        rhs_tk: f64|
         -> (DVector<f64>, DVector<f64>, DVector<f64>, f64, f64) {
            let wt_dc = scaling.apply_wt(layout, d_c);
            let d = rhs_d - &wt_dc;
            let (dx0, dy0) = kkt_solve(&d, rhs_p);
            let dtau = (rhs_g - c.dot(&dx0) + b.dot(&dy0) - rhs_tk / tau) / tau_denom;
            let dx = &dx0 + &dx1 * dtau;
            let dy = &dy0 + &dy1 * dtau;
            let ds = &wt_dc - scaling.apply_g(layout, &dx);
            let dkappa = (rhs_tk - kappa * dtau) / tau;
            (dx, dy, ds, dtau, dkappa)
        };

        let chol_x: Vec<&DMatrix<f64>> = scaling.blocks.iter().map(|bl| &bl.lx).collect();
        let chol_s: Vec<&DMatrix<f64>> = scaling.blocks.iter().map(|bl| &bl.ls).collect();

        // Affine (predictor) direction.
        let neg_rp = -&r_p;
        let neg_rd = -&r_d;
        let d_c_aff = -&lambda;
        let (dxa, _dya, dsa, dtaua, dkappaa) =
            assemble(&neg_rp, &neg_rd, -r_g, &d_c_aff, -(tau * kappa));

        let alpha_aff = {
            let ax = max_step(layout, &chol_x, &x, &dxa);
            let asx = max_step(layout, &chol_s, &s, &dsa);
            let at = if dtaua < 0.0 { -tau / dtaua } else { f64::INFINITY };
            let ak = if dkappaa < 0.0 {
                -kappa / dkappaa
            } else {
                f64::INFINITY
            };
            ax.min(asx).min(at).min(ak).min(1.0)
        };
        let mu_aff = {
            let xa = &x + &dxa * alpha_aff;
            let sa = &s + &dsa * alpha_aff;
            (xa.dot(&sa) + (tau + alpha_aff * dtaua) * (kappa + alpha_aff * dkappaa)) / nu
        };
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Combined (corrector) direction.
        let corr = {
            let wx = scaling.apply_w(layout, &dxa);
            let ws = scaling.apply_w_inv_t(layout, &dsa);
            jordan_product(layout, &wx, &ws)
        };
        let mut comp_rhs = -&lambda_sq - &corr;
        for bidx in 0..layout.psd_sizes.len() {
            let nb = layout.psd_sizes[bidx];
            let off = layout.psd_offsets[bidx];
            for i in 0..nb {
                comp_rhs[off + svec_pos(nb, i, i)] += sigma * mu;
            }
        }
        for k in 0..layout.nonneg {
            comp_rhs[layout.nonneg_offset + k] += sigma * mu;
        }
        let d_c = scaling.lambda_solve(layout, &comp_rhs);
        let f = 1.0 - sigma;
        let rhs_p = &neg_rp * f;
        let rhs_d = &neg_rd * f;
        let rhs_tk = sigma * mu - tau * kappa - dtaua * dkappaa;
        let (dx, dy, ds, dtau, dkappa) = assemble(&rhs_p, &rhs_d, -f * r_g, &d_c, rhs_tk);

        let alpha = {
            let ax = max_step(layout, &chol_x, &x, &dx);
            let asx = max_step(layout, &chol_s, &s, &ds);
            let at = if dtau < 0.0 { -tau / dtau } else { f64::INFINITY };
            let ak = if dkappa < 0.0 {
                -kappa / dkappa
            } else {
                f64::INFINITY
            };
            (opts.step_fraction * ax.min(asx).min(at).min(ak)).min(1.0)
        };
        if !alpha.is_finite() || alpha < 1e-12 {
            bail!(SolveStatus::NumericalFailure, "step length collapsed");
        }

        x += &dx * alpha;
        y += &dy * alpha;
        s += &ds * alpha;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if let Some(last) = iterations.last_mut() {
            last.step = alpha;
        }
    }

    bail!(SolveStatus::MaxIterations, "iteration cap reached");
}

// ---------------------------------------------------------------------------
// Public entry point
// ---------------------------------------------------------------------------

/// Solve a standard-form conic program. On `Optimal` the KKT residuals are at
/// or below the requested tolerances; infeasibility and unboundedness are
/// reported through certificates, never silently.
pub fn solve(problem: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let vect = vectorize(problem);
    let m_orig = problem.equalities.len();

    let reduced = match presolve(&vect) {
        PresolveOutcome::Decided(status, note) => {
            return Ok(SdpSolution {
                status,
                psd_values: problem
                    .psd_blocks
                    .iter()
                    .map(|&n| DMatrix::zeros(n, n))
                    .collect(),
                nonneg_values: vec![0.0; problem.nonneg_vars],
                free_values: vec![0.0; problem.free_vars],
                dual_values: vec![0.0; m_orig],
                objective: f64::NAN,
                residuals: Residuals::default(),
                iterations: Vec::new(),
                notes: vec![note],
            });
        }
        PresolveOutcome::Reduced(r) => r,
    };

    // With no effective constraints the cone part is solved by inspection:
    // x = 0 is optimal iff c lies in the dual cone, otherwise the problem is
    // unbounded below.
    if reduced.a.nrows() == 0 {
        return finish_unconstrained(problem, &vect, &reduced, opts);
    }

    // Normalize the data scales; the standard form is positively homogeneous
    // in both b and c, so the solution maps back exactly.
    let b_scale = reduced.b.amax().max(1.0);
    let c_scale = reduced.c.amax().max(1.0);
    let b_scaled = &reduced.b / b_scale;
    let c_scaled = &reduced.c / c_scale;
    let mut outcome = solve_cone(&vect.layout, &reduced.a, &b_scaled, &c_scaled, opts);
    outcome.x *= b_scale;
    outcome.y *= c_scale;
    outcome.s *= c_scale;
    package(problem, &vect, &reduced, outcome, opts)
}

fn dual_cone_violation(layout: &ConeLayout, c: &DVector<f64>) -> f64 {
    let mut worst = 0.0f64;
    for b in 0..layout.psd_sizes.len() {
        let cm = layout.unsvec(b, c);
        let eig = SymmetricEigen::new(cm);
        let emin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max((-emin).max(0.0));
    }
    for k in 0..layout.nonneg {
        worst = worst.max((-c[layout.nonneg_offset + k]).max(0.0));
    }
    worst
}

fn finish_unconstrained(
    problem: &SdpProblem,
    vect: &Vectorized,
    reduced: &Reduced,
    _opts: &SolveOptions,
) -> Result<SdpSolution> {
    let viol = dual_cone_violation(&vect.layout, &reduced.c);
    let mut notes = reduced.notes.clone();
    if viol > 1e-10 * (1.0 + reduced.c.norm()) {
        notes.push("objective decreases along a cone direction with no constraints".into());
        return Ok(SdpSolution {
            status: SolveStatus::Unbounded,
            psd_values: problem
                .psd_blocks
                .iter()
                .map(|&n| DMatrix::zeros(n, n))
                .collect(),
            nonneg_values: vec![0.0; problem.nonneg_vars],
            free_values: vec![0.0; problem.free_vars],
            dual_values: vec![0.0; problem.equalities.len()],
            objective: f64::NAN,
            residuals: Residuals::default(),
            iterations: Vec::new(),
            notes,
        });
    }
    let x = DVector::zeros(vect.layout.total);
    let outcome = ConeOutcome {
        status: SolveStatus::Optimal,
        x,
        y: DVector::zeros(0),
        s: reduced.c.clone(),
        tau: 1.0,
        kappa: 0.0,
        iterations: Vec::new(),
        note: None,
    };
    package(problem, vect, reduced, outcome, _opts)
}

fn package(
    problem: &SdpProblem,
    vect: &Vectorized,
    reduced: &Reduced,
    outcome: ConeOutcome,
    opts: &SolveOptions,
) -> Result<SdpSolution> {
    let layout = &vect.layout;
    let m_orig = problem.equalities.len();
    let mut notes = reduced.notes.clone();
    if let Some(n) = &outcome.note {
        notes.push(n.clone());
    }

    let mut status = outcome.status;
    let (x_c, y_red, scale_note): (DVector<f64>, DVector<f64>, Option<String>) = match status {
        SolveStatus::Optimal | SolveStatus::MaxIterations | SolveStatus::NumericalFailure => {
            let tau = outcome.tau.max(1e-300);
            (outcome.x / tau, outcome.y / tau, None)
        }
        SolveStatus::Infeasible => {
            let by = reduced.b.dot(&outcome.y).max(1e-300);
            (
                DVector::zeros(layout.total),
                &outcome.y / by,
                Some("dual values hold a Farkas certificate of primal infeasibility".into()),
            )
        }
        SolveStatus::Unbounded => {
            let cx = (-reduced.c.dot(&outcome.x)).max(1e-300);
            (
                &outcome.x / cx,
                DVector::zeros(outcome.y.len()),
                Some("primal values hold an improving-ray certificate (dual infeasibility)".into()),
            )
        }
    };
    if let Some(n) = scale_note {
        notes.push(n);
    }

    // Free-variable and dual recovery.
    let free_values: Vec<f64> = match (&reduced.free_rec, status) {
        (Some(rec), SolveStatus::Optimal | SolveStatus::MaxIterations) => {
            let rhs = &vect.b - &vect.a_cone * &x_c;
            (rec * rhs).iter().cloned().collect()
        }
        (Some(rec), SolveStatus::Unbounded) => {
            let rhs = -(&vect.a_cone * &x_c);
            (rec * rhs).iter().cloned().collect()
        }
        (Some(_), _) => vec![0.0; problem.free_vars],
        (None, _) => Vec::new(),
    };

    let y_orig: DVector<f64> = if y_red.len() == reduced.y_map.ncols() && m_orig > 0 {
        match status {
            SolveStatus::Infeasible => &reduced.y_map * &y_red,
            _ => &reduced.y_map * &y_red + &reduced.y_const,
        }
    } else {
        DVector::zeros(m_orig)
    };

    // Residuals in the original problem space.
    let x_free = DVector::from_vec(free_values.clone());
    let primal_resid = if m_orig > 0 {
        let r = &vect.a_cone * &x_c + &vect.a_free * &x_free - &vect.b;
        r.norm() / (1.0 + vect.b.norm())
    } else {
        0.0
    };
    let s_scaled = match status {
        SolveStatus::Optimal | SolveStatus::MaxIterations | SolveStatus::NumericalFailure => {
            &outcome.s / outcome.tau.max(1e-300)
        }
        _ => outcome.s.clone(),
    };
    let dual_resid = {
        let r = vect.a_cone.transpose() * &y_orig + &s_scaled - &vect.c_cone;
        let rf = vect.a_free.transpose() * &y_orig - &vect.c_free;
        (r.norm_squared() + rf.norm_squared()).sqrt() / (1.0 + vect.c_cone.norm())
    };
    let objective = reduced.c.dot(&x_c) + reduced.offset;
    // Conventional duality gap: primal vs dual objective. Complementarity
    // (trace of primal/dual cone products) is recoverable from the duals.
    let dual_objective = reduced.b.dot(&y_red) + reduced.offset;
    let duality_gap =
        (objective - dual_objective).abs() / (1.0 + objective.abs().max(dual_objective.abs()));
    let residuals = Residuals {
        primal_infeasibility: primal_resid,
        dual_infeasibility: dual_resid,
        duality_gap,
    };

    // Never return an unverified "optimal".
    if status == SolveStatus::Optimal
        && (primal_resid > 10.0 * opts.tol_feasibility
            || dual_resid > 10.0 * opts.tol_feasibility)
    {
        status = SolveStatus::NumericalFailure;
        notes.push("post-solve residual check failed; downgraded from optimal".into());
    }

    let psd_values = (0..problem.psd_blocks.len())
        .map(|b| layout.unsvec(b, &x_c))
        .collect();
    let nonneg_values = (0..problem.nonneg_vars)
        .map(|k| x_c[layout.nonneg_offset + k])
        .collect();

    Ok(SdpSolution {
        status,
        psd_values,
        nonneg_values,
        free_values,
        dual_values: y_orig.iter().cloned().collect(),
        objective: if status == SolveStatus::Infeasible || status == SolveStatus::Unbounded {
            f64::NAN
        } else {
            objective
        },
        residuals,
        iterations: outcome.iterations,
        notes,
    })
}
