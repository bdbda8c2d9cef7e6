//! Vertex conditions `A f_1(v) + B f_2(v) = 0` and their algebra.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ExtReal, MatchingCondition, StarGraph};
use crate::linalg::{c, fro, numerical_rank, C, ONE, ZERO};
use crate::ode::Tolerance;
use crate::weyl::m_matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPair {
    pub a: DMatrix<C>,
    pub b: DMatrix<C>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplementPair {
    pub c: DMatrix<C>,
    pub d: DMatrix<C>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub rank: usize,
    pub defect: f64,
    pub passed: bool,
    pub message: String,
}

impl BoundaryPair {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn from_matching(m: &MatchingCondition, n: usize) -> Self {
        match m {
            MatchingCondition::Robin(t) => robin_matrices(n, *t),
            MatchingCondition::General { a, b } => BoundaryPair {
                a: a.clone(),
                b: b.clone(),
            },
        }
    }

    fn block(&self) -> DMatrix<C> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.a);
        m.view_mut((0, n), (n, n)).copy_from(&self.b);
        m
    }
}

/// Robin pair: rows `e_i - e_{i+1}` then `-e_1`; `B` has `tau` in its last row.
///
/// For `tau = inf` the last rows become `0` and `(1, ..., 1)`.
pub fn robin_matrices(n: usize, tau: ExtReal) -> BoundaryPair {
    let mut a = DMatrix::from_element(n, n, ZERO);
    let mut b = DMatrix::from_element(n, n, ZERO);
    for i in 0..n.saturating_sub(1) {
        a[(i, i)] = ONE;
        a[(i, i + 1)] = -ONE;
    }
    match tau {
        ExtReal::Finite(t) => {
            a[(n - 1, 0)] = -ONE;
            for k in 0..n {
                b[(n - 1, k)] = c(t, 0.0);
            }
        }
        ExtReal::Infinity => {
            for k in 0..n {
                b[(n - 1, k)] = ONE;
            }
        }
    }
    BoundaryPair { a, b }
}

pub fn validate_matching(pair: &BoundaryPair) -> Result<ValidationReport> {
    let n = pair.a.nrows();
    if pair.a.ncols() != n || pair.b.nrows() != n || pair.b.ncols() != n {
        return Err(Error::Dimension(format!(
            "A is {}x{}, B is {}x{}",
            pair.a.nrows(),
            pair.a.ncols(),
            pair.b.nrows(),
            pair.b.ncols()
        )));
    }
    let rank = numerical_rank(&pair.block(), 1e-10);
    let defect = fro(&(&pair.a * pair.b.adjoint() - &pair.b * pair.a.adjoint()));
    let bound = 1e-10 * (fro(&pair.a) * fro(&pair.b) + 1.0);
    let mut message = String::new();
    if rank != n {
        message.push_str(&format!("rank(A B) = {rank} < {n}"));
    }
    if defect > bound {
        if !message.is_empty() {
            message.push_str("; ");
        }
        message.push_str(&format!("|AB* - BA*| = {defect:e} exceeds {bound:e}"));
    }
    let passed = message.is_empty();
    if passed {
        message.push_str("ok");
    }
    Ok(ValidationReport {
        n,
        rank,
        defect,
        passed,
        message,
    })
}

/// `C = Q^{-1} B`, `D = -Q^{-1} A` with `Q = A A* + B B*`.
pub fn complement_pair(pair: &BoundaryPair) -> Result<ComplementPair> {
    let q = &pair.a * pair.a.adjoint() + &pair.b * pair.b.adjoint();
    let qi = q
        .try_inverse()
        .ok_or_else(|| Error::Validation("A A* + B B* is singular".into()))?;
    Ok(ComplementPair {
        c: &qi * &pair.b,
        d: -(&qi * &pair.a),
    })
}

/// `J_2n = [[0, -I], [I, 0]]`.
pub fn j2n(n: usize) -> DMatrix<C> {
    let mut j = DMatrix::from_element(2 * n, 2 * n, ZERO);
    for i in 0..n {
        j[(i, n + i)] = -ONE;
        j[(n + i, i)] = ONE;
    }
    j
}

/// Frobenius defects of `X J X* = J` and `X* J X = J` for `X = [[C, D], [A, B]]`.
pub fn j2n_defects(pair: &BoundaryPair, comp: &ComplementPair) -> (f64, f64) {
    let n = pair.n();
    let mut x = DMatrix::from_element(2 * n, 2 * n, ZERO);
    x.view_mut((0, 0), (n, n)).copy_from(&comp.c);
    x.view_mut((0, n), (n, n)).copy_from(&comp.d);
    x.view_mut((n, 0), (n, n)).copy_from(&pair.a);
    x.view_mut((n, n), (n, n)).copy_from(&pair.b);
    let j = j2n(n);
    (
        fro(&(&x * &j * x.adjoint() - &j)),
        fro(&(x.adjoint() * &j * &x - &j)),
    )
}

fn invert(m: DMatrix<C>, z: C) -> Result<DMatrix<C>> {
    let scale = fro(&m).max(1e-300);
    let sv = m.clone().svd(false, false).singular_values;
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < 1e-13 * scale {
        return Err(Error::SpectralPoint(z));
    }
    m.try_inverse().ok_or(Error::SpectralPoint(z))
}

/// `(B M - A)^{-1}` for given `M` values.
pub fn krein_inverse(pair: &BoundaryPair, mz: &DMatrix<C>, z: C) -> Result<DMatrix<C>> {
    invert(&pair.b * mz - &pair.a, z)
}

/// `W(z) = (D M - C)(B M - A)^{-1}` for given `M` values.
pub fn w_from_m(
    pair: &BoundaryPair,
    comp: &ComplementPair,
    mz: &DMatrix<C>,
    z: C,
) -> Result<DMatrix<C>> {
    Ok((&comp.d * mz - &comp.c) * krein_inverse(pair, mz, z)?)
}

pub fn w_function(
    pair: &BoundaryPair,
    comp: &ComplementPair,
    graph: &StarGraph,
    z: C,
) -> Result<DMatrix<C>> {
    if z.im == 0.0 {
        return Err(Error::SpectralPoint(z));
    }
    let mz = m_matrix(graph, z, Tolerance::default())?;
    w_from_m(pair, comp, &mz, z)
}

/// The `2n x 2n` function `P(z) = [[0,0],[0,M]] - [-I; M](B M - A)^{-1} B (-I  M)`.
pub fn p_from_m(pair: &BoundaryPair, mz: &DMatrix<C>, z: C) -> Result<DMatrix<C>> {
    let n = pair.n();
    let x = krein_inverse(pair, mz, z)? * &pair.b;
    let mut left = DMatrix::from_element(2 * n, n, ZERO);
    let mut right = DMatrix::from_element(n, 2 * n, ZERO);
    for i in 0..n {
        left[(i, i)] = -ONE;
        right[(i, i)] = -ONE;
    }
    left.view_mut((n, 0), (n, n)).copy_from(mz);
    right.view_mut((0, n), (n, n)).copy_from(mz);
    let mut p = -(left * x * right);
    let mut br = p.view_mut((n, n), (n, n));
    br += mz;
    Ok(p)
}

/// Relative defect of the difference-quotient factorization of `P`.
pub fn p_kernel_defect(
    pair: &BoundaryPair,
    mz: &DMatrix<C>,
    mw: &DMatrix<C>,
    z: C,
    zeta: C,
) -> Result<f64> {
    let n = pair.n();
    let den = z - zeta.conj();
    if den.norm() < 1e-14 {
        return Err(Error::DegeneratePair);
    }
    let lhs = (p_from_m(pair, mz, z)? - p_from_m(pair, mw, zeta)?.adjoint()) / den;
    let mut ba = DMatrix::from_element(2 * n, n, ZERO);
    ba.view_mut((0, 0), (n, n)).copy_from(&pair.b.adjoint());
    ba.view_mut((n, 0), (n, n)).copy_from(&(-pair.a.adjoint()));
    let mws = mw.adjoint();
    let inner = invert(&mws * pair.b.adjoint() - pair.a.adjoint(), zeta)?
        * ((mz - &mws) / den)
        * krein_inverse(pair, mz, z)?;
    let rhs = &ba * inner * ba.adjoint();
    Ok(fro(&(&lhs - &rhs)) / fro(&lhs).max(1e-300))
}

/// Relative defect of `(W(z) - W(zeta)*)/(z - conj zeta) = (M(zeta)* B* - A*)^{-1} dM (B M(z) - A)^{-1}`.
pub fn w_kernel_defect(
    pair: &BoundaryPair,
    comp: &ComplementPair,
    mz: &DMatrix<C>,
    mw: &DMatrix<C>,
    z: C,
    zeta: C,
) -> Result<f64> {
    let den = z - zeta.conj();
    if den.norm() < 1e-14 {
        return Err(Error::DegeneratePair);
    }
    let lhs = (w_from_m(pair, comp, mz, z)? - w_from_m(pair, comp, mw, zeta)?.adjoint()) / den;
    let mws = mw.adjoint();
    let rhs = invert(&mws * pair.b.adjoint() - pair.a.adjoint(), zeta)?
        * ((mz - &mws) / den)
        * krein_inverse(pair, mz, z)?;
    Ok(fro(&(&lhs - &rhs)) / fro(&lhs).max(1e-300))
}

/// `(u1, uh1, ..., un, uhn) -> (u1, ..., un, uh1, ..., uhn)`.
pub fn permute(u: &DVector<C>) -> Result<DVector<C>> {
    if u.len() % 2 != 0 {
        return Err(Error::Dimension(format!("odd length {}", u.len())));
    }
    let n = u.len() / 2;
    Ok(DVector::from_fn(2 * n, |i, _| {
        if i < n {
            u[2 * i]
        } else {
            u[2 * (i - n) + 1]
        }
    }))
}

pub fn unpermute(u: &DVector<C>) -> Result<DVector<C>> {
    if u.len() % 2 != 0 {
        return Err(Error::Dimension(format!("odd length {}", u.len())));
    }
    let n = u.len() / 2;
    Ok(DVector::from_fn(2 * n, |i, _| {
        if i % 2 == 0 {
            u[i / 2]
        } else {
            u[n + i / 2]
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: &[&[f64]]) -> DMatrix<C> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, k| c(rows[i][k], 0.0))
    }

    #[test]
    fn robin_small_cases() {
        let p = robin_matrices(1, ExtReal::Finite(1.0));
        assert_eq!(p.a, cm(&[&[-1.0]]));
        assert_eq!(p.b, cm(&[&[1.0]]));
        let p0 = robin_matrices(2, ExtReal::Finite(0.0));
        assert!(p0.b.iter().all(|v| *v == ZERO));
        for t in [
            ExtReal::Finite(-2.5),
            ExtReal::Finite(3.0),
            ExtReal::Infinity,
        ] {
            let p = robin_matrices(3, t);
            let d = &p.a * p.b.adjoint() - &p.b * p.a.adjoint();
            assert!(d.iter().all(|v| *v == ZERO));
            assert!(validate_matching(&p).unwrap().passed);
        }
    }

    #[test]
    fn validation_cases() {
        let i2 = DMatrix::identity(2, 2);
        let z2 = DMatrix::zeros(2, 2);
        assert!(
            validate_matching(&BoundaryPair {
                a: i2.clone(),
                b: z2.clone()
            })
            .unwrap()
            .passed
        );
        let r = validate_matching(&BoundaryPair {
            a: z2.clone(),
            b: z2.clone(),
        })
        .unwrap();
        assert!(!r.passed && r.rank == 0);
        let r = validate_matching(&BoundaryPair {
            a: i2.clone(),
            b: &i2 * c(0.0, 1.0),
        })
        .unwrap();
        assert!(!r.passed);
        assert!((r.defect - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let bad = BoundaryPair {
            a: i2,
            b: DMatrix::zeros(3, 3),
        };
        assert!(matches!(validate_matching(&bad), Err(Error::Dimension(_))));
    }

    #[test]
    fn complement_dirichlet_and_robin() {
        let p = BoundaryPair {
            a: DMatrix::identity(2, 2),
            b: DMatrix::zeros(2, 2),
        };
        let q = complement_pair(&p).unwrap();
        assert!(q.c.iter().all(|v| *v == ZERO));
        assert_eq!(q.d, -DMatrix::<C>::identity(2, 2));
        let p = robin_matrices(2, ExtReal::Finite(1.0));
        let q = complement_pair(&p).unwrap();
        let e = &p.b * q.c.adjoint() - &p.a * q.d.adjoint() - DMatrix::<C>::identity(2, 2);
        assert!(fro(&e) < 1e-12);
        let (d1, d2) = j2n_defects(&p, &q);
        assert!(d1 < 1e-12 && d2 < 1e-12);
    }

    #[test]
    fn w_dirichlet_is_m() {
        let p = BoundaryPair {
            a: DMatrix::identity(2, 2),
            b: DMatrix::zeros(2, 2),
        };
        let q = complement_pair(&p).unwrap();
        let mz = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.2, 1.0), c(-1.0, 0.3)]));
        let w = w_from_m(&p, &q, &mz, c(0.0, 1.0)).unwrap();
        assert!(fro(&(w - mz)) < 1e-14);
    }

    #[test]
    fn permutation() {
        let u = DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let v = permute(&u).unwrap();
        assert_eq!(
            v.as_slice(),
            &[c(1.0, 0.0), c(3.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]
        );
        assert_eq!(unpermute(&v).unwrap(), u);
        let one = DVector::from_vec(vec![c(5.0, 0.0), c(6.0, 0.0)]);
        assert_eq!(permute(&one).unwrap(), one);
        assert!(permute(&DVector::from_vec(vec![ONE; 3])).is_err());
    }
}
