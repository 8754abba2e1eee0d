//! Cyclic Jacobi eigensolver for Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary, which leaves a real symmetric 2×2 block, then applies the usual
//! real Jacobi rotation. Both steps are fused into one 2×2 unitary acting on
//! columns (and rows) `p` and `q`, so a rotation costs O(n).

use num_complex::Complex64;

use super::{c, ComplexScalar, Operator, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
/// Eigenvalues closer than this (relative to the spectral radius) share an eigenspace.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Spectral decomposition `m = V · diag(values) · V†`, values descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: Operator,
}

/// One eigenspace: an eigenvalue and the orthogonal projector onto its span.
#[derive(Debug, Clone)]
pub struct Eigenspace {
    pub value: f64,
    pub projector: Operator,
    pub multiplicity: usize,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> Operator {
        let n = self.values.len();
        let v = &self.vectors;
        Operator::from_fn(n, |r, col| {
            let mut acc = ZERO;
            for j in 0..n {
                acc += v.get(r, j) * self.values[j] * v.get(col, j).conj();
            }
            acc
        })
    }

    /// Groups numerically equal eigenvalues and returns their projectors.
    ///
    /// The projectors do not depend on how the solver picked a basis inside a
    /// degenerate cluster.
    pub fn eigenspaces(&self) -> Vec<Eigenspace> {
        let n = self.values.len();
        let radius = self
            .values
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
            .max(1.0);
        let mut spaces: Vec<(f64, Vec<usize>)> = Vec::new();
        for (j, &value) in self.values.iter().enumerate() {
            match spaces.last_mut() {
                Some((head, members)) if (*head - value).abs() <= DEGENERACY_TOL * radius => {
                    members.push(j)
                }
                _ => spaces.push((value, vec![j])),
            }
        }
        spaces
            .into_iter()
            .map(|(_, members)| {
                let value =
                    members.iter().map(|&j| self.values[j]).sum::<f64>() / members.len() as f64;
                let v = &self.vectors;
                let projector = Operator::from_fn(n, |r, col| {
                    members
                        .iter()
                        .map(|&j| v.get(r, j) * v.get(col, j).conj())
                        .sum()
                });
                Eigenspace {
                    value,
                    projector,
                    multiplicity: members.len(),
                }
            })
            .collect()
    }
}

/// Eigendecomposition of a Hermitian operator by cyclic Jacobi rotations.
pub fn herm_eig(m: &Operator) -> Result<HermitianEigen> {
    let residual = m.hermitian_residual();
    if residual >= super::STRUCTURE_TOL * m.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let n = m.dim();
    // work on the exactly Hermitian part
    let mut a: Vec<ComplexScalar> = Operator::from_fn(n, |r, col| {
        if r == col {
            c(m.get(r, r).re, 0.0)
        } else {
            (m.get(r, col) + m.get(col, r).conj()) * 0.5
        }
    })
    .data()
    .to_vec();
    let mut v = Operator::identity(n).data().to_vec();
    let tol = OFF_DIAGONAL_TOL * m.frobenius_norm().max(1.0);

    let mut converged = false;
    let mut off = off_diagonal_norm(&a, n);
    for _ in 0..MAX_SWEEPS {
        if off < tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
        off = off_diagonal_norm(&a, n);
    }
    if !converged && off >= tol {
        return Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm: off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].re.total_cmp(&a[i * n + i].re));
    let values: Vec<f64> = order.iter().map(|&j| a[j * n + j].re).collect();
    let mut columns = Vec::with_capacity(n);
    for &j in &order {
        let mut col: Vec<ComplexScalar> = (0..n).map(|r| v[r * n + j]).collect();
        fix_phase(&mut col);
        columns.push(col);
    }
    let vectors = Operator::from_fn(n, |r, k| columns[k][r]);
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm(a: &[ComplexScalar], n: usize) -> f64 {
    let mut acc = 0.0;
    for r in 0..n {
        for col in 0..n {
            if r != col {
                acc += a[r * n + col].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn rotate(a: &mut [ComplexScalar], v: &mut [ComplexScalar], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase_conj = (apq / mag).conj();
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let cos = 1.0 / (t * t + 1.0).sqrt();
    let sin = t * cos;

    // columns p, q of the combined unitary G
    let g_pp = c(cos, 0.0);
    let g_pq = c(sin, 0.0);
    let g_qp = phase_conj * (-sin);
    let g_qq = phase_conj * cos;

    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * g_pp + akq * g_qp;
        a[k * n + q] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[q * n + k] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[p * n + q] = ZERO;
    a[q * n + p] = ZERO;
    a[p * n + p].im = 0.0;
    a[q * n + q].im = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * g_pp + vkq * g_qp;
        v[k * n + q] = vkp * g_pq + vkq * g_qq;
    }
}

/// Makes the largest-magnitude component real and positive.
fn fix_phase(col: &mut [ComplexScalar]) {
    let mut best = 0;
    for (k, z) in col.iter().enumerate() {
        if z.norm() > col[best].norm() + 1e-12 {
            best = k;
        }
    }
    let pivot = col[best];
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        for z in col.iter_mut() {
            *z *= rot;
        }
    }
}

/// `V · diag(f(λⱼ)) · V†` for Hermitian `m`.
pub fn herm_func(m: &Operator, f: impl Fn(f64) -> ComplexScalar) -> Result<Operator> {
    let eig = herm_eig(m)?;
    let n = m.dim();
    let fvals: Vec<ComplexScalar> = eig.values.iter().map(|&x| f(x)).collect();
    let v = &eig.vectors;
    Ok(Operator::from_fn(n, |r, col| {
        let mut acc = ZERO;
        for (j, fv) in fvals.iter().enumerate() {
            acc += v.get(r, j) * fv * v.get(col, j).conj();
        }
        acc
    }))
}

/// Largest singular value, from the top eigenvalue of `M†M`.
pub fn spectral_norm(m: &Operator) -> f64 {
    let gram = m.dagger().matmul(m);
    // M†M is Hermitian up to rounding; symmetrize so herm_eig cannot reject it
    let n = gram.dim();
    let gram = Operator::from_fn(n, |r, col| {
        if r == col {
            Complex64::new(gram.get(r, r).re, 0.0)
        } else {
            (gram.get(r, col) + gram.get(col, r).conj()) * 0.5
        }
    });
    let eig = herm_eig(&gram).expect("Jacobi converges on Hermitian input");
    eig.values[0].max(0.0).sqrt()
}
