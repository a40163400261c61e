//! Jacobi diagonalization for Hermitian matrices and the principal square
//! root built on top of it.

use num_complex::Complex64;

use super::{ComplexMatrix, ComplexVector};
use crate::error::PtError;
use crate::Result;

const MAX_SWEEPS: usize = 40;

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues ascending and the unitary of column
/// eigenvectors in matching order.
///
/// The input is symmetrized internally; callers are expected to have checked
/// Hermiticity to their own tolerance beforehand.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = m.dim();
    // Work on the Hermitian average so roundoff in the input cannot feed the
    // rotations an inconsistent (p, q)/(q, p) pair.
    let mut a = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    let mut v = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    let target = 1e-15 * norm;

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let beta = a.get(p, q);
                let beta_mag = beta.norm();
                if beta_mag <= 1e-300 {
                    continue;
                }
                let alpha = a.get(p, p).re;
                let gamma = a.get(q, q).re;
                let f = beta / beta_mag;
                let tau = (gamma - alpha) / (2.0 * beta_mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sf = Complex64::new(s, 0.0) * f;
                let sfc = sf.conj();
                let cc = Complex64::new(c, 0.0);

                // Column rotation A <- A U, then row rotation A <- U^dag A.
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, cc * akp - sfc * akq);
                    a.set(k, q, sf * akp + cc * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, cc * apk - sf * aqk);
                    a.set(q, k, sfc * apk + cc * aqk);
                }
                // Clean the annihilated pair and enforce real diagonals.
                a.set(p, q, Complex64::new(0.0, 0.0));
                a.set(q, p, Complex64::new(0.0, 0.0));
                a.set(p, p, Complex64::new(a.get(p, p).re, 0.0));
                a.set(q, q, Complex64::new(a.get(q, q).re, 0.0));

                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, cc * vkp - sfc * vkq);
                    v.set(k, q, sf * vkp + cc * vkq);
                }
            }
        }
    }

    let mut off = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            off += a.get(p, q).norm_sqr();
        }
    }
    let off = (2.0 * off).sqrt();
    if off > 1e-12 * norm {
        return Err(PtError::NonConvergence {
            residual: off / norm,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, new_col, v.get(row, old_col));
        }
    }
    Ok((values, vectors))
}

/// Principal square root of a Hermitian positive-definite matrix.
///
/// `hermiticity` bounds the accepted relative residual `|M - M^dag|/|M|`;
/// `positivity` is the relative eigenvalue floor below which the input counts
/// as not positive definite. The result satisfies `|R R - M| <= 1e-10 |M|`.
pub fn hermitian_sqrt_with(
    m: &ComplexMatrix,
    hermiticity: f64,
    positivity: f64,
) -> Result<ComplexMatrix> {
    let herm_residual = m.hermiticity_residual();
    if herm_residual > hermiticity {
        return Err(PtError::NotHermitian {
            residual: herm_residual,
        });
    }
    let (values, vectors) = eig_hermitian(m)?;
    let norm = m.frobenius_norm();
    let floor = positivity * norm.max(f64::MIN_POSITIVE);
    let min_eig = values[0];
    if min_eig <= floor {
        return Err(PtError::NotPositiveDefinite {
            min_eigenvalue: min_eig,
        });
    }
    let n = m.dim();
    let mut root = ComplexMatrix::zeros(n);
    for k in 0..n {
        let col = vectors.column(k);
        let proj = ComplexMatrix::outer(&col, &col);
        root = root.add(&proj.scale(Complex64::new(values[k].sqrt(), 0.0)));
    }
    // Hermitian by construction up to roundoff; symmetrize to make it exact.
    let root = root.add(&root.adjoint()).scale(Complex64::new(0.5, 0.0));
    let residual = root.matmul(&root).sub(m).frobenius_norm();
    if residual > 1e-10 * norm {
        return Err(PtError::NonConvergence {
            residual: residual / norm,
        });
    }
    Ok(root)
}

/// [`hermitian_sqrt_with`] under the default tolerances.
pub fn hermitian_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let tol = crate::Tolerances::default();
    hermitian_sqrt_with(m, tol.hermiticity, tol.positivity)
}

/// Unitary polar factor `u (u^dag u)^(-1/2)`, used to pin drift in gauge
/// rotors during long integrations.
pub fn polar_unitary(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    let gram = u.adjoint().matmul(u);
    let root = hermitian_sqrt_with(&gram, 1e-8, 1e-12)?;
    let root_inv = root.inverse()?;
    Ok(u.matmul(&root_inv))
}

#[allow(dead_code)]
fn unit(dim: usize, k: usize) -> ComplexVector {
    ComplexVector::basis(dim, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::inner;
    use rand::Rng;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, c(rng.gen_range(-2.0..2.0), 0.0));
            for j in (i + 1)..n {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        m
    }

    #[test]
    fn jacobi_reproduces_known_pauli_spectrum() {
        // sigma_y has eigenvalues -1, +1.
        let m = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.0, -1.0)], vec![
            c(0.0, 1.0),
            c(0.0, 0.0),
        ]])
        .unwrap();
        let (values, vectors) = eig_hermitian(&m).unwrap();
        assert!((values[0] + 1.0).abs() < 1e-14);
        assert!((values[1] - 1.0).abs() < 1e-14);
        for k in 0..2 {
            let v = vectors.column(k);
            let r = m.matvec(&v).sub(&v.scale(c(values[k], 0.0)));
            assert!(r.norm() < 1e-14);
        }
    }

    #[test]
    fn jacobi_random_hermitian_residuals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [2usize, 3, 4, 6, 8] {
            for _ in 0..50 {
                let m = random_hermitian(n, &mut rng);
                let (values, vectors) = eig_hermitian(&m).unwrap();
                let norm = m.frobenius_norm().max(1.0);
                for k in 0..n {
                    let v = vectors.column(k);
                    let r = m.matvec(&v).sub(&v.scale(c(values[k], 0.0)));
                    assert!(r.norm() <= 1e-12 * norm, "N={n} residual {}", r.norm());
                }
                // Orthonormal eigenbasis.
                for a in 0..n {
                    for b in 0..n {
                        let ip = inner(&vectors.column(a), &vectors.column(b));
                        let expect = if a == b { 1.0 } else { 0.0 };
                        assert!((ip - c(expect, 0.0)).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn sqrt_of_identity_scaled() {
        let m = ComplexMatrix::identity(3).scale(c(4.0, 0.0));
        let r = hermitian_sqrt(&m).unwrap();
        let expect = ComplexMatrix::identity(3).scale(c(2.0, 0.0));
        assert!(r.sub(&expect).frobenius_norm() < 1e-12);
    }

    #[test]
    fn sqrt_rejects_indefinite_and_non_hermitian() {
        let indef = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![
            c(0.0, 0.0),
            c(-1.0, 0.0),
        ]])
        .unwrap();
        assert!(matches!(
            hermitian_sqrt(&indef),
            Err(PtError::NotPositiveDefinite { .. })
        ));
        let skew = ComplexMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![
            c(0.0, 0.0),
            c(1.0, 0.0),
        ]])
        .unwrap();
        assert!(matches!(
            hermitian_sqrt(&skew),
            Err(PtError::NotHermitian { .. })
        ));
    }

    #[test]
    fn sqrt_random_spd_residuals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3, 5] {
            for _ in 0..40 {
                let g = random_hermitian(n, &mut rng);
                // g^dag g + eps is positive definite.
                let spd = g
                    .adjoint()
                    .matmul(&g)
                    .add(&ComplexMatrix::identity(n).scale(c(0.05, 0.0)));
                let r = hermitian_sqrt(&spd).unwrap();
                let back = r.matmul(&r);
                assert!(back.sub(&spd).frobenius_norm() <= 1e-10 * spd.frobenius_norm());
                assert!(r.hermiticity_residual() < 1e-13);
            }
        }
    }

    #[test]
    fn polar_unitary_restores_unitarity() {
        let mut drifted = ComplexMatrix::identity(2);
        drifted.set(0, 0, c(1.0 + 3e-6, 1e-6));
        drifted.set(1, 0, c(0.0, -2e-6));
        let u = polar_unitary(&drifted).unwrap();
        let gram = u.adjoint().matmul(&u);
        assert!(gram.sub(&ComplexMatrix::identity(2)).frobenius_norm() < 1e-12);
    }
}
