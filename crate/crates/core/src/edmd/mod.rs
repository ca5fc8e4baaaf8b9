//! Extended dynamic mode decomposition with control: fit the control-affine
//! Koopman matrix `K = [A B_1 ... B_m]` from snapshot triples and expose the
//! finite-difference Lie derivative it induces.
//!
//! Given snapshots `(x_k, u_k, y_k)` where `y_k` is the state `tau` time
//! units after `(x_k, u_k)`, and dictionaries `phi` (p entries) and `psi`
//! (q entries), the fit solves `min_K ||Phi - K Psi||_F` through the
//! singular-value-decomposition pseudoinverse of the stacked data matrix
//! `Psi`. Data are used raw (no centering or scaling) and no regularization
//! is applied beyond the relative singular-value cutoff.

mod dataset;

pub use dataset::{Snapshot, SnapshotDataset};

use crate::error::{Error, Result};
use crate::poly::{linear_combination, Dictionary, Polynomial};
use crate::util::{dmatrix_list, dmatrix_rows};
use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

/// Singular values below this fraction of the largest are treated as zero in
/// the pseudoinverse.
pub const SVD_CUTOFF: f64 = 1e-10;

/// `p x n` matrix whose column `k` is `phi(y_k)`.
pub fn assemble_phi(data: &SnapshotDataset, phi: &Dictionary) -> Result<DMatrix<f64>> {
    if phi.dimension() != data.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: data.state_dim(),
            got: phi.dimension(),
        });
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.len();
    let p = phi.len();
    let mut out = DMatrix::zeros(p, n);
    for (k, snap) in data.snapshots().iter().enumerate() {
        let col = phi.eval(&snap.y)?;
        for (i, v) in col.into_iter().enumerate() {
            out[(i, k)] = v;
        }
    }
    Ok(out)
}

/// `q (m+1) x n` matrix whose column `k` stacks `psi(x_k)` over
/// `psi(x_k) u_{i,k}` for each input channel `i`.
pub fn assemble_psi(data: &SnapshotDataset, psi: &Dictionary) -> Result<DMatrix<f64>> {
    if psi.dimension() != data.state_dim() {
        return Err(Error::DimensionMismatch {
            expected: data.state_dim(),
            got: psi.dimension(),
        });
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.len();
    let q = psi.len();
    let m = data.input_dim();
    let mut out = DMatrix::zeros(q * (m + 1), n);
    for (k, snap) in data.snapshots().iter().enumerate() {
        let base = psi.eval(&snap.x)?;
        for (i, v) in base.iter().enumerate() {
            out[(i, k)] = *v;
        }
        for (ch, &u) in snap.u.iter().enumerate() {
            let off = q * (ch + 1);
            for (i, v) in base.iter().enumerate() {
                out[(off + i, k)] = v * u;
            }
        }
    }
    Ok(out)
}

/// A fitted control-affine Koopman model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KoopmanModel {
    pub phi: Dictionary,
    pub psi: Dictionary,
    pub tau: f64,
    #[serde(with = "dmatrix_rows")]
    pub a: DMatrix<f64>,
    #[serde(with = "dmatrix_list")]
    pub b: Vec<DMatrix<f64>>,
    /// Frobenius norm of `Phi - K Psi` at the fitted `K`.
    pub fit_residual: f64,
    /// Effective rank used in the pseudoinverse.
    pub svd_rank: usize,
}

/// Least-squares Koopman fit `K = Phi Psi^+`, split into `A` and the input
/// blocks `B_i`. Fails explicitly on degenerate data (every singular value
/// below the cutoff) rather than returning silent zeros.
pub fn fit_koopman(
    data: &SnapshotDataset,
    phi: &Dictionary,
    psi: &Dictionary,
) -> Result<KoopmanModel> {
    let phi_mat = assemble_phi(data, phi)?;
    let psi_mat = assemble_psi(data, psi)?;
    let q = psi.len();
    let m = data.input_dim();

    let svd = SVD::new(psi_mat.clone(), true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v");
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if !(smax > 0.0) {
        return Err(Error::DegenerateData(
            "all singular values of the data matrix vanish".into(),
        ));
    }
    let cutoff = SVD_CUTOFF * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if rank == 0 {
        return Err(Error::DegenerateData(format!(
            "all singular values fall below the relative cutoff {SVD_CUTOFF:.1e}"
        )));
    }

    // K = Phi V diag(1/sigma) U^T over the retained singular directions.
    let phi_v = &phi_mat * v_t.rows(0, rank).transpose(); // p x rank
    let mut scaled = phi_v;
    for j in 0..rank {
        let inv = 1.0 / svd.singular_values[j];
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= inv;
        }
    }
    let k_mat = &scaled * u.columns(0, rank).transpose(); // p x q(m+1)

    let fit_residual = (&phi_mat - &k_mat * &psi_mat).norm();
    let a = k_mat.columns(0, q).into_owned();
    let b = (0..m)
        .map(|i| k_mat.columns(q * (i + 1), q).into_owned())
        .collect();

    Ok(KoopmanModel {
        phi: phi.clone(),
        psi: psi.clone(),
        tau: data.tau(),
        a,
        b,
        fit_residual,
        svd_rank: rank,
    })
}

impl KoopmanModel {
    pub fn input_dim(&self) -> usize {
        self.b.len()
    }

    fn check_lengths(&self, c: &[f64], u: &[f64]) -> Result<()> {
        if c.len() != self.phi.len() {
            return Err(Error::LengthMismatch {
                expected: self.phi.len(),
                got: c.len(),
            });
        }
        if u.len() != self.b.len() {
            return Err(Error::LengthMismatch {
                expected: self.b.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Approximate Koopman action on the observable `<c, phi>` for a fixed
    /// input: `<c, A psi> + sum_i <c, B_i psi> u_i`, a polynomial in
    /// `span(psi)`.
    pub fn apply(&self, c: &[f64], u: &[f64]) -> Result<Polynomial> {
        self.check_lengths(c, u)?;
        let cv = DVector::from_column_slice(c);
        let mut coeffs = self.a.tr_mul(&cv);
        for (i, b) in self.b.iter().enumerate() {
            coeffs += b.tr_mul(&cv) * u[i];
        }
        linear_combination(coeffs.as_slice(), &self.psi)
    }

    pub fn save_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: Self = serde_json::from_str(&text)?;
        if model.tau <= 0.0 {
            return Err(Error::InvalidInput("model tau must be positive".into()));
        }
        Ok(model)
    }
}

/// The data-driven Lie derivative: the finite-difference generator
/// `(K_tau - I) / tau` of the fitted Koopman model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LieModel {
    pub koopman: KoopmanModel,
}

impl LieModel {
    pub fn new(koopman: KoopmanModel) -> Self {
        Self { koopman }
    }

    /// `tau^{-1} <c, A psi - phi> + tau^{-1} sum_i <c, B_i psi> u_i`.
    pub fn apply(&self, c: &[f64], u: &[f64]) -> Result<Polynomial> {
        let k = self.koopman.apply(c, u)?;
        let base = linear_combination(c, &self.koopman.phi)?;
        Ok(k.sub(&base)?.scale(1.0 / self.koopman.tau))
    }

    /// Split the Lie image of `<c, phi>` into its drift part and one
    /// polynomial per input channel, so that for every numeric `u`
    /// `apply(c, u) = drift + sum_i inputs_i u_i`.
    pub fn affine_decomposition(&self, c: &[f64]) -> Result<(Polynomial, Vec<Polynomial>)> {
        let km = &self.koopman;
        self.koopman.check_lengths(c, &vec![0.0; km.b.len()])?;
        let cv = DVector::from_column_slice(c);
        let inv_tau = 1.0 / km.tau;
        let a_part = linear_combination(km.a.tr_mul(&cv).as_slice(), &km.psi)?;
        let base = linear_combination(c, &km.phi)?;
        let drift = a_part.sub(&base)?.scale(inv_tau);
        let inputs = km
            .b
            .iter()
            .map(|b| {
                Ok(linear_combination(b.tr_mul(&cv).as_slice(), &km.psi)?.scale(inv_tau))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((drift, inputs))
    }
}

#[cfg(test)]
mod tests;
