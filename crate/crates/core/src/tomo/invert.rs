// Copyright 2026 Ladderkit Contributors
// SPDX-License-Identifier: Apache-2.0

//! Population inversion from a set of Rabi fits on different ladders.
//!
//! Each fitted component's cosine quadrature equals `(p↓ − p↑)/2` of its
//! pair and each offset equals the mean population left in `|↓⟩`. The
//! constraints of all fits are stacked, weighted by the inverse of the
//! fits' covariances, and solved with `Σp = 1` imposed exactly. Negative
//! cells are then projected to zero and the table renormalized.
//!
//! Coherences between cells that one drive couples are assumed absent; the
//! sine quadrature they would produce is not used.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::state::{basis_label, index, PopulationTable, Spin};
use crate::tomo::fit::RabiFit;

// Variance floor for the constraint weights (σ = 1e-6).
const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedPopulations {
    pub table: PopulationTable,
    /// Least-squares solution before non-negativity projection.
    pub unprojected: PopulationTable,
}

/// `(n_down, n_up)` of pair `k` on the `delta_n` ladder.
pub fn pair_cells(delta_n: i32, k: usize) -> (usize, usize) {
    let d = delta_n.unsigned_abs() as usize;
    if delta_n >= 0 {
        (k + d, k)
    } else {
        (k, k + d)
    }
}

fn fit_rows(fit: &RabiFit, n_max: usize) -> (Vec<Vec<f64>>, Vec<f64>, Vec<usize>) {
    let dim = 2 * (n_max + 1);
    let mut rows = Vec::new();
    let mut values = Vec::new();
    let mut params = Vec::new();

    // offset: coupled cells sit at their pair mean, an uncoupled |↓⟩ stays put
    let mut row = vec![0.0; dim];
    for n in 0..=n_max {
        let partner = n as i64 - fit.delta_n as i64;
        row[index(n_max, Spin::Down, n)] = if partner < 0 { 1.0 } else { 0.5 };
        let down_partner = n as i64 + fit.delta_n as i64;
        row[index(n_max, Spin::Up, n)] = if down_partner < 0 { 0.0 } else { 0.5 };
    }
    rows.push(row);
    values.push(fit.offset);
    params.push(RabiFit::OFFSET_INDEX);

    for (k, c) in fit.components.iter().enumerate() {
        let (nd, nu) = pair_cells(fit.delta_n, c.pair);
        let mut row = vec![0.0; dim];
        if nd <= n_max {
            row[index(n_max, Spin::Down, nd)] = 0.5;
        }
        if nu <= n_max {
            row[index(n_max, Spin::Up, nu)] = -0.5;
        }
        if row.iter().all(|v| *v == 0.0) {
            continue;
        }
        rows.push(row);
        values.push(c.cos_amp);
        params.push(RabiFit::cos_index(k));
    }
    (rows, values, params)
}

/// Inverse square root of a covariance block, with a variance floor.
fn whitener(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(cov.clone());
    let inv_sqrt = eig.eigenvalues.map(|l| 1.0 / (l.max(0.0) + VARIANCE_FLOOR).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose()
}

/// Orthonormal basis of the hyperplane `Σx = 0` (columns), via the
/// Householder reflection taking `e_0` to the normalized all-ones vector.
fn sum_free_basis(dim: usize) -> DMatrix<f64> {
    let ones = DVector::from_element(dim, 1.0 / (dim as f64).sqrt());
    let mut v = ones.clone();
    v[0] -= 1.0;
    let vn = v.norm();
    let h = if vn < 1e-15 {
        DMatrix::identity(dim, dim)
    } else {
        v /= vn;
        DMatrix::identity(dim, dim) - 2.0 * &v * v.transpose()
    };
    h.columns(1, dim - 1).into_owned()
}

pub fn invert_populations(fits: &[RabiFit], n_max: usize) -> Result<InvertedPopulations> {
    if !fits.iter().any(|f| f.delta_n == 0) || !fits.iter().any(|f| f.delta_n != 0) {
        return Err(Error::InsufficientData(
            "need a carrier fit and at least one sideband fit".into(),
        ));
    }
    let dim = 2 * (n_max + 1);

    let mut a_rows: Vec<Vec<f64>> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for fit in fits {
        let (rows, values, params) = fit_rows(fit, n_max);
        let cov = DMatrix::from_fn(params.len(), params.len(), |i, j| fit.covariance[params[i]][params[j]]);
        let w = whitener(&cov);
        let a = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        let wa = &w * a;
        let wy = &w * DVector::from_vec(values);
        for i in 0..wa.nrows() {
            a_rows.push(wa.row(i).iter().cloned().collect());
            y.push(wy[i]);
        }
    }
    let a = DMatrix::from_fn(a_rows.len(), dim, |i, j| a_rows[i][j]);
    let y = DVector::from_vec(y);

    let x0 = DVector::from_element(dim, 1.0 / dim as f64);
    let basis = sum_free_basis(dim);
    let b = &a * &basis;
    let c = &y - &a * &x0;

    let svd = b.clone().svd(true, true);
    let s = &svd.singular_values;
    let v_t = svd.v_t.as_ref().expect("requested");
    let tol = s.max() * 1e-10;
    let null: Vec<usize> = (0..s.len()).filter(|&i| !(s[i] > tol)).collect();
    if !null.is_empty() || b.nrows() < b.ncols() {
        let mut cells = Vec::new();
        let mut loose = vec![0.0f64; dim];
        for &i in &null {
            let dir = &basis * v_t.row(i).transpose();
            for (j, v) in dir.iter().enumerate() {
                loose[j] = loose[j].max(v.abs());
            }
        }
        for (j, v) in loose.iter().enumerate() {
            if *v > 1e-3 {
                cells.push(basis_label(n_max, j));
            }
        }
        return Err(Error::Underdetermined(cells));
    }

    let z = svd.solve(&c, tol).map_err(|e| Error::FitFailed(e.to_string()))?;
    let x = &x0 + &basis * z;
    let inv_s2 = s.map(|v| 1.0 / (v * v));
    let cov_z = v_t.transpose() * DMatrix::from_diagonal(&inv_s2) * v_t;
    let cov_x = &basis * cov_z * basis.transpose();

    let mut unprojected = PopulationTable::zeros(n_max);
    let mut table = PopulationTable::zeros(n_max);
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    for j in 0..dim {
        let (spin, n) = basis_label(n_max, j);
        let sigma = cov_x[(j, j)].max(0.0).sqrt();
        unprojected.set(spin, n, x[j], sigma);
        table.set(spin, n, if total > 0.0 { clipped[j] / total } else { x0[j] }, sigma);
    }
    Ok(InvertedPopulations { table, unprojected })
}
