//! The loss terms of the training objective.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::matrix::Matrix;
use crate::rng::standard_normal;

/// Mean over the batch of the squared L2 error of each row.
pub fn mse(a: &Matrix, b: &Matrix) -> Result<f64> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Err(Error::shape(
            "mse",
            format!("{}x{}", a.rows(), a.cols()),
            format!("{}x{}", b.rows(), b.cols()),
        ));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.rows() as f64)
}

/// Gradient of [`mse`] with respect to `a`: `2 (a - b) / rows`.
pub fn mse_grad(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    let n = a.rows() as f64;
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| 2.0 * (x - y) / n)
        .collect();
    Matrix::from_vec(a.rows(), a.cols(), data).expect("same shape")
}

/// KL divergence of N(mu, diag(sigma^2)) from N(0, I):
/// `-1/2 sum_d (1 + log sigma_d^2 - mu_d^2 - sigma_d^2)`.
pub fn kl_standard_normal(mu: &[f64], sigma: &[f64]) -> Result<f64> {
    if mu.len() != sigma.len() {
        return Err(Error::shape(
            "kl_standard_normal",
            format!("{} dims", mu.len()),
            format!("{} dims", sigma.len()),
        ));
    }
    if sigma.iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidArgument(
            "kl_standard_normal requires sigma > 0".into(),
        ));
    }
    let kl = mu
        .iter()
        .zip(sigma)
        .map(|(&m, &s)| {
            let var = s * s;
            -0.5 * (1.0 + var.ln() - m * m - var)
        })
        .sum::<f64>();
    Ok(kl)
}

/// `z = mu + sigma * eps` with `eps ~ N(0, I)` drawn from `rng`.
pub fn reparameterize(mu: &[f64], sigma: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>> {
    if mu.len() != sigma.len() {
        return Err(Error::shape(
            "reparameterize",
            format!("{} dims", mu.len()),
            format!("{} dims", sigma.len()),
        ));
    }
    if sigma.iter().any(|&s| s < 0.0) {
        return Err(Error::InvalidArgument(
            "reparameterize requires sigma >= 0".into(),
        ));
    }
    Ok(mu
        .iter()
        .zip(sigma)
        .map(|(&m, &s)| m + s * standard_normal(rng))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn mse_of_identical_matrices_is_zero() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn mse_counts_squared_error_per_row() {
        let a = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        // each row contributes 2, mean over 2 rows = 2
        assert_eq!(mse(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn mse_matches_scalar_loop_oracle() {
        let mut rng = rng_from_seed(17);
        let a = Matrix::from_vec(5, 7, (0..35).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let b = Matrix::from_vec(5, 7, (0..35).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let mut expected = 0.0;
        for i in 0..5 {
            for j in 0..7 {
                let d = a.get(i, j) - b.get(i, j);
                expected += d * d;
            }
        }
        expected /= 5.0;
        assert!((mse(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn mse_rejects_shape_mismatch() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(2, 3);
        assert!(mse(&a, &b).is_err());
    }

    #[test]
    fn kl_of_standard_normal_is_zero() {
        assert_eq!(kl_standard_normal(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn kl_hand_values() {
        // mu = 1, sigma = 1: 1/2 mu^2 = 0.5
        assert!((kl_standard_normal(&[1.0], &[1.0]).unwrap() - 0.5).abs() < 1e-12);
        // mu = 0, sigma = 2: (4 - 1 - ln 4) / 2
        let expected = 0.5 * (4.0 - 1.0 - 4.0_f64.ln());
        assert!((kl_standard_normal(&[0.0], &[2.0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.8069).abs() < 1e-4);
    }

    #[test]
    fn kl_rejects_nonpositive_sigma() {
        assert!(kl_standard_normal(&[0.0], &[0.0]).is_err());
        assert!(kl_standard_normal(&[0.0], &[-1.0]).is_err());
    }

    #[test]
    fn kl_is_nonnegative_on_random_inputs() {
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let d = rng.gen_range(1..6);
            let mu: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let sigma: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..4.0)).collect();
            assert!(kl_standard_normal(&mu, &sigma).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn reparameterize_zero_sigma_returns_mu() {
        let mut rng = rng_from_seed(1);
        let z = reparameterize(&[0.4, -1.2], &[0.0, 0.0], &mut rng).unwrap();
        assert_eq!(z, vec![0.4, -1.2]);
    }

    #[test]
    fn reparameterize_is_seed_deterministic() {
        let a = reparameterize(&[0.0; 4], &[1.0; 4], &mut rng_from_seed(5)).unwrap();
        let b = reparameterize(&[0.0; 4], &[1.0; 4], &mut rng_from_seed(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reparameterize_sample_mean_near_mu() {
        let mut rng = rng_from_seed(23);
        let n = 100_000;
        let mu = 0.7;
        let sigma = 1.3;
        let mean: f64 = (0..n)
            .map(|_| reparameterize(&[mu], &[sigma], &mut rng).unwrap()[0])
            .sum::<f64>()
            / n as f64;
        let se = sigma / (n as f64).sqrt();
        assert!((mean - mu).abs() < 4.0 * se, "mean {mean}");
    }
}
