//! Seeded random instances: directions, orthogonal matrices, PSD matrices.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use rand::SeedableRng;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform point on the sphere of the given radius.
pub fn sphere_point<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let v = gaussian_vector(rng, d);
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|a| a * radius / n).collect();
        }
    }
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, signs fixed).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `Q diag(lambda) Q'`, symmetrized so that it is exactly symmetric.
pub fn with_spectrum(q: &DMatrix<f64>, lambda: &[f64]) -> DMatrix<f64> {
    let m = q * DMatrix::from_diagonal(&DVector::from_column_slice(lambda)) * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Random symmetric PSD matrix with eigenvalues uniform in `[0, max_eig]`.
/// Returns the matrix and its prescribed spectrum.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, d: usize, max_eig: f64) -> (DMatrix<f64>, Vec<f64>) {
    let lambda: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..=max_eig)).collect();
    let q = random_orthogonal(rng, d);
    (with_spectrum(&q, &lambda), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut r = rng(3);
        let q = random_orthogonal(&mut r, 4);
        let e = (&q.transpose() * &q - DMatrix::identity(4, 4)).amax();
        assert!(e < 1e-12);
    }

    #[test]
    fn psd_has_requested_spectrum() {
        let mut r = rng(9);
        let (h, lambda) = random_psd(&mut r, 3, 2.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        let mut want = lambda.clone();
        ev.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_radius() {
        let mut r = rng(1);
        let v = sphere_point(&mut r, 5, 0.25);
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((n - 0.25).abs() < 1e-15);
    }
}
