//! Central finite differences, used as an independent oracle for every
//! analytic gradient in the crate.

use super::layout::{GradVector, ParamVector};
use crate::error::{DdaError, Result};

pub const DEFAULT_EPS: f64 = 1e-5;

/// `(L(θ + εe_i) − L(θ − εe_i)) / 2ε` for each coordinate.
pub fn finite_diff_raw<F>(mut loss: F, params: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut probe = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let up = loss(&probe)?;
        probe[i] = orig - eps;
        let down = loss(&probe)?;
        probe[i] = orig;
        if !(up.is_finite() && down.is_finite()) {
            return Err(DdaError::Numeric(format!("loss is not finite around coordinate {i}")));
        }
        grad.push((up - down) / (2.0 * eps));
    }
    Ok(grad)
}

pub fn finite_diff_grad<F>(loss: F, params: &ParamVector, eps: f64) -> Result<GradVector>
where
    F: Fn(&ParamVector) -> Result<f64>,
{
    let values = finite_diff_raw(
        |v| {
            let p = params.with_values(v.to_vec())?;
            loss(&p)
        },
        params.values(),
        eps,
    )?;
    Ok(GradVector { values })
}

/// Largest per-coordinate relative error, `|a − b| / max(|a|, |b|, floor)`.
/// The floor keeps coordinates whose true derivative is ~0 from dividing
/// finite-difference round-off by nothing.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic.iter().zip(numeric).map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let theta = vec![0.3, -1.2, 4.0];
        let g = finite_diff_raw(|t| Ok(0.5 * t.iter().map(|v| v * v).sum::<f64>()), &theta, DEFAULT_EPS).unwrap();
        for (a, b) in g.iter().zip(&theta) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn product_rule() {
        let g = finite_diff_raw(|t| Ok(t[0] * t[1]), &[2.0, 3.0], DEFAULT_EPS).unwrap();
        assert!((g[0] - 3.0).abs() < 1e-9);
        assert!((g[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_loss_zero_grad() {
        let g = finite_diff_raw(|_| Ok(7.0), &[1.0, 2.0], DEFAULT_EPS).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn non_finite_loss_is_error() {
        let r = finite_diff_raw(|t| Ok(1.0 / (t[0] - 1e-5)), &[0.0], DEFAULT_EPS);
        assert!(matches!(r, Err(DdaError::Numeric(_))));
    }
}
