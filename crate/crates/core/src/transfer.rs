//! Effective transfer matrices: solve T = Y X^-1 from characterization data
//! and split T = U P into a unitary factor and a Hermitian positive
//! semidefinite loss factor.

use nalgebra::DMatrix;

use crate::quad::QuadratureSpec;
use crate::scenario::ScenarioConfig;
use crate::slicespace::{input_slice_vector, output_slice_vector};
use crate::{C64, Result, SimError};

/// Condition-number ceiling beyond which [`solve_transfer`] refuses to
/// invert the input matrix.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Transfer matrix together with its polar factors and the characterization
/// data it was solved from.
#[derive(Clone, Debug)]
pub struct TransferResult {
    /// Input slice vectors, one column per source.
    pub x: DMatrix<C64>,
    /// Output slice vectors, one column per source.
    pub y: DMatrix<C64>,
    pub t: DMatrix<C64>,
    pub u: DMatrix<C64>,
    pub p: DMatrix<C64>,
    /// Frobenius distance of T T-dagger from the identity.
    pub unitarity_defect: f64,
    /// Condition number of X reported by the solve.
    pub condition_number: f64,
}

/// Eigendecomposition of a Hermitian matrix by the cyclic complex Jacobi
/// method. Returns eigenvalues in ascending order and the matching unitary
/// eigenvector matrix `V` (columns), so `A = V diag(w) V-dagger`.
///
/// Deterministic and accurate to machine precision at the small sizes used
/// here, which is all the polar decomposition needs.
pub fn hermitian_eig(a: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = a.clone();
    let mut v = DMatrix::<C64>::identity(n, n);
    let scale = a.iter().map(|e| e.norm()).fold(0.0f64, f64::max).max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let u = apq / r; // unit phase of the pivot
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotation J = [[c, s], [-s u*, c u*]] acting on columns
                // (p, q); J-dagger A J zeroes the pivot.
                let uc = u.conj();
                for i in 0..n {
                    let aip = m[(i, p)];
                    let aiq = m[(i, q)];
                    m[(i, p)] = aip * c - aiq * (uc * s);
                    m[(i, q)] = aip * s + aiq * (uc * c);
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * (uc * s);
                    v[(i, q)] = vip * s + viq * (uc * c);
                }
                for j in 0..n {
                    let apj = m[(p, j)];
                    let aqj = m[(q, j)];
                    m[(p, j)] = apj * c - aqj * (u * s);
                    m[(q, j)] = apj * s + aqj * (u * c);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)];
        }
    }
    (values, vectors)
}

/// Condition number (ratio of extreme singular values) of a square complex
/// matrix, computed from the Hermitian eigenvalues of `A-dagger A`.
pub fn condition_number(a: &DMatrix<C64>) -> f64 {
    let h = a.adjoint() * a;
    let (w, _) = hermitian_eig(&h);
    let max = w.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    let min = w.first().copied().unwrap_or(0.0).max(0.0).sqrt();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `T = Y X^-1`, guarding against an ill-conditioned characterization.
/// Returns the transfer matrix and the condition number of X.
pub fn solve_transfer(x: &DMatrix<C64>, y: &DMatrix<C64>) -> Result<(DMatrix<C64>, f64)> {
    if x.nrows() != x.ncols() || x.shape() != y.shape() {
        return Err(SimError::LengthMismatch(format!(
            "X is {:?} and Y is {:?}; both must be square and equal",
            x.shape(),
            y.shape()
        )));
    }
    let cond = condition_number(x);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(SimError::IllConditioned {
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    let inv = x.clone().try_inverse().ok_or(SimError::IllConditioned {
        cond: f64::INFINITY,
        limit: CONDITION_LIMIT,
    })?;
    Ok((y * inv, cond))
}

/// Right polar decomposition `T = U P` with `U` unitary and `P` Hermitian
/// positive semidefinite, via the SVD route: with `T = W S V-dagger`,
/// `U = W V-dagger` and `P = V S V-dagger`.
///
/// For rank-deficient `T` the undetermined columns of `W` are completed into
/// an orthonormal set deterministically (Gram-Schmidt against canonical
/// basis vectors in index order).
pub fn polar_decompose(t: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = t.nrows();
    assert_eq!(n, t.ncols(), "polar decomposition needs a square matrix");
    let h = t.adjoint() * t;
    let (w, v) = hermitian_eig(&h);
    let sigmas: Vec<f64> = w.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let scale = sigmas.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = scale * 1e-13 * n as f64;

    // P = V diag(sigma) V-dagger, then re-hermitize against rounding.
    let mut p = DMatrix::<C64>::zeros(n, n);
    for (i, &s) in sigmas.iter().enumerate() {
        let col = v.column(i);
        for a in 0..n {
            for b in 0..n {
                p[(a, b)] += col[a] * col[b].conj() * s;
            }
        }
    }
    let p = (p.clone() + p.adjoint()) * C64::new(0.5, 0.0);

    // Columns of W for the nonzero singular values: w_i = T v_i / sigma_i.
    let mut wmat = DMatrix::<C64>::zeros(n, n);
    let mut missing = Vec::new();
    for (i, &s) in sigmas.iter().enumerate() {
        if s > tol {
            let col = t * v.column(i) / C64::new(s, 0.0);
            wmat.set_column(i, &col);
        } else {
            missing.push(i);
        }
    }
    // Complete the isometry for the null directions.
    for &i in &missing {
        let mut picked = None;
        for cand in 0..n {
            let mut col = nalgebra::DVector::<C64>::zeros(n);
            col[cand] = C64::new(1.0, 0.0);
            for j in 0..n {
                let filled = sigmas[j] > tol || (missing.contains(&j) && j < i);
                if filled {
                    let wj = wmat.column(j);
                    let proj: C64 = wj.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
                    let wj = wj.clone_owned();
                    col -= wj * proj;
                }
            }
            let norm = col.norm();
            if norm > 0.5 {
                col /= C64::new(norm, 0.0);
                picked = Some(col);
                break;
            }
        }
        let col = picked.expect("orthonormal completion always exists");
        wmat.set_column(i, &col);
    }
    let u = wmat * v.adjoint();
    (u, p)
}

/// `T T-dagger` and its Frobenius distance from the identity.
pub fn unitarity_defect(t: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let tt = t * t.adjoint();
    let mut dist = 0.0;
    for i in 0..tt.nrows() {
        for j in 0..tt.ncols() {
            let want = if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            dist += (tt[(i, j)] - want).norm_sqr();
        }
    }
    (tt, dist.sqrt())
}

/// Normalized splitter ratio `|U11|^2 : |U12|^2`, in percent.
pub fn splitter_ratio(u: &DMatrix<C64>) -> (f64, f64) {
    let a = u[(0, 0)].norm_sqr();
    let b = u[(0, 1)].norm_sqr();
    (100.0 * a / (a + b), 100.0 * b / (a + b))
}

/// Full characterization pipeline: slice vectors per source, transfer solve,
/// polar decomposition.
pub fn characterize(sc: &ScenarioConfig, quad: &QuadratureSpec) -> Result<TransferResult> {
    sc.validate()?;
    let n = sc.n();
    let columns = crate::par::map_indexed(n, |i| -> Result<_> {
        Ok((
            input_slice_vector(sc, i, quad)?,
            output_slice_vector(sc, i, quad)?,
        ))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut x = DMatrix::<C64>::zeros(n, n);
    let mut y = DMatrix::<C64>::zeros(n, n);
    for (i, (xi, yi)) in columns.iter().enumerate() {
        for j in 0..n {
            x[(j, i)] = xi.entries[j];
            y[(j, i)] = yi.entries[j];
        }
    }
    let (t, condition) = solve_transfer(&x, &y)?;
    let (u, p) = polar_decompose(&t);
    let (_, defect) = unitarity_defect(&t);
    Ok(TransferResult {
        x,
        y,
        t,
        u,
        p,
        unitarity_defect: defect,
        condition_number: condition,
    })
}

/// JSON value for a complex matrix: rows of `[re, im]` pairs.
pub fn matrix_to_json(m: &DMatrix<C64>) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.nrows())
            .map(|i| {
                serde_json::Value::Array(
                    (0..m.ncols())
                        .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}
