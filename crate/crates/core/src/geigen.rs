//! Dense symmetric eigensolvers and the Fix–Heiberger reduction for
//! symmetric pencils `A x = λ B x` with `B` positive semidefinite and
//! possibly ill-conditioned.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::scalar::{lit, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeigenError {
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    #[error("matrix dimensions do not match ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("singular pencil: {0}")]
    SingularPencil(String),
    #[error("epsilon {0} outside (0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("degenerate overlap: every direction of B is numerically zero")]
    DegenerateOverlap,
}

/// Eigen-decomposition with ascending eigenvalues; column `k` of `vectors`
/// belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct SymEig<T: Real> {
    pub values: Vec<T>,
    pub vectors: DMatrix<T>,
}

fn max_abs<T: Real>(a: &DMatrix<T>) -> T {
    a.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
}

fn check_symmetric<T: Real>(a: &DMatrix<T>, rel: f64) -> Result<(), GeigenError> {
    if !a.is_square() {
        return Err(GeigenError::DimensionMismatch(a.nrows(), a.ncols()));
    }
    let scale = to_f64(max_abs(a)).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max(to_f64((a[(i, j)] - a[(j, i)]).abs()));
        }
    }
    if worst > rel * scale {
        return Err(GeigenError::Asymmetric(worst));
    }
    Ok(())
}

/// Symmetric part `(A + Aᵀ)/2`.
fn symmetrize<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let half: T = lit(0.5);
    (a + a.transpose()) * half
}

/// Unchecked decomposition of an exactly symmetric matrix.
pub(crate) fn eig_sorted<T: Real>(a: DMatrix<T>) -> SymEig<T> {
    let n = a.nrows();
    if n == 0 {
        return SymEig {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let e = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].partial_cmp(&e.eigenvalues[j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| e.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, order[c])]);
    SymEig { values, vectors }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric
/// matrix. Asymmetry above `1e-10 · max|A|` is rejected.
pub fn sym_eig<T: Real>(a: &DMatrix<T>) -> Result<SymEig<T>, GeigenError> {
    check_symmetric(a, 1e-10)?;
    Ok(eig_sorted(symmetrize(a)))
}

/// One deflation stage of [`fix_heiberger`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeflationStage {
    /// 1 for the overlap matrix, 2 for the constrained block of `A`.
    pub stage: u8,
    pub retained: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone)]
pub struct PencilResult<T> {
    /// Finite eigenvalues, ascending; `len() == stable_dim`.
    pub eigenvalues: Vec<T>,
    pub stable_dim: usize,
    pub deflation: Vec<DeflationStage>,
}

fn spectral_norm<T: Real>(a: &DMatrix<T>) -> T {
    eig_sorted(a.clone())
        .values
        .iter()
        .fold(T::zero(), |m, &v| m.max(v.abs()))
}

/// Columns `cols` of `m` as a new matrix.
fn take_cols<T: Real>(m: &DMatrix<T>, cols: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])])
}

/// Solves `A x = λ B x` for symmetric `A` and positive semidefinite `B`,
/// discarding directions where `B` (and, in a second stage, the
/// constrained block of `A`) is zero relative to `epsilon`.
///
/// Stage 1 keeps eigenvalues of `B` above `epsilon · λmax(B)`. Stage 2
/// deflates eigenvalues of the transformed `A22` block with magnitude at
/// most `epsilon · ‖A‖₂`. Pencils needing further stages are reported as
/// singular.
pub fn fix_heiberger<T: Real>(
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    epsilon: T,
) -> Result<PencilResult<T>, GeigenError> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(GeigenError::EpsilonOutOfRange(to_f64(epsilon)));
    }
    if a.shape() != b.shape() {
        return Err(GeigenError::DimensionMismatch(a.nrows(), b.nrows()));
    }
    check_symmetric(a, 1e-10)?;
    check_symmetric(b, 1e-10)?;
    let (a, b) = (symmetrize(a), symmetrize(b));
    let n = a.nrows();
    if n == 0 {
        return Err(GeigenError::DegenerateOverlap);
    }

    // Stage 1: B = Q diag(d) Qᵀ, descending.
    let eb = eig_sorted(b);
    let order: Vec<usize> = (0..n).rev().collect();
    let d: Vec<T> = order.iter().map(|&k| eb.values[k]).collect();
    let q = take_cols(&eb.vectors, &order);
    let d_max = d[0];
    if !(d_max > T::zero()) {
        return Err(GeigenError::DegenerateOverlap);
    }
    let n1 = d.iter().take_while(|&&v| v > epsilon * d_max).count();
    let mut scale = DVector::from_element(n, T::one());
    for k in 0..n1 {
        scale[k] = T::one() / d[k].sqrt();
    }
    let mut at = q.transpose() * &a * &q;
    for r in 0..n {
        for c in 0..n {
            at[(r, c)] *= scale[r] * scale[c];
        }
    }
    let at = symmetrize(&at);
    let mut log = vec![DeflationStage {
        stage: 1,
        retained: n1,
        discarded: n - n1,
    }];
    let a11 = at.view((0, 0), (n1, n1)).into_owned();
    if n1 == n {
        let values = eig_sorted(a11).values;
        return Ok(PencilResult {
            stable_dim: values.len(),
            eigenvalues: values,
            deflation: log,
        });
    }

    // Stage 2: A22 = P diag(e) Pᵀ, split into nonzero (3) and zero (4) parts.
    let n2 = n - n1;
    let a_norm = spectral_norm(&a);
    let a12 = at.view((0, n1), (n1, n2)).into_owned();
    let a22 = at.view((n1, n1), (n2, n2)).into_owned();
    let e22 = eig_sorted(a22);
    let tol = epsilon * a_norm;
    let (big, small): (Vec<usize>, Vec<usize>) = (0..n2).partition(|&k| e22.values[k].abs() > tol);
    let n3 = big.len();
    let n4 = small.len();
    log.push(DeflationStage {
        stage: 2,
        retained: n3,
        discarded: n4,
    });
    let a13 = &a12 * take_cols(&e22.vectors, &big);
    let mut schur = a11;
    for (c, &k) in big.iter().enumerate() {
        let inv = T::one() / e22.values[k];
        let col = a13.column(c);
        schur -= (col * col.transpose()) * inv;
    }
    let schur = symmetrize(&schur);
    if n4 == 0 {
        let values = eig_sorted(schur).values;
        return Ok(PencilResult {
            stable_dim: values.len(),
            eigenvalues: values,
            deflation: log,
        });
    }

    // Coordinates x4 enter only through the constraint A14ᵀ x1 = 0.
    // Null directions of A14 are shared by A and B and carry no
    // eigenvalue; the rank-r remainder removes r directions from x1.
    let a14 = &a12 * take_cols(&e22.vectors, &small);
    let gram = eig_sorted(&a14 * a14.transpose());
    let rank = gram.values.iter().filter(|&&v| v > tol * tol).count();
    log.push(DeflationStage {
        stage: 3,
        retained: rank,
        discarded: n4 - rank,
    });
    if rank == n1 {
        return Err(GeigenError::SingularPencil(format!(
            "constraints of rank {rank} leave none of the {n1} retained directions"
        )));
    }
    // Ascending: the first n1 - rank eigenvectors span null(A14ᵀ).
    let free: Vec<usize> = (0..n1 - rank).collect();
    let z = take_cols(&gram.vectors, &free);
    let reduced = symmetrize(&(z.transpose() * schur * &z));
    let values = eig_sorted(reduced).values;
    Ok(PencilResult {
        stable_dim: values.len(),
        eigenvalues: values,
        deflation: log,
    })
}
