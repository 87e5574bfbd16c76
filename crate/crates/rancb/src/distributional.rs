//! Quantile regression machinery shared by the distributional critics.
//!
//! A critic head predicts one value per quantile level; training minimizes the
//! quantile Huber loss of the residual `target - prediction` summed over the
//! quantile set. Risk lookups (`quantile_value`) are exact membership lookups,
//! never interpolation, so every configured risk level must appear in the set.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordered set of quantile levels in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QuantileSet(Vec<f64>);

impl QuantileSet {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::config("quantile set must be non-empty"));
        }
        for w in levels.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::config("quantile levels must be strictly increasing"));
            }
        }
        if levels.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::config("quantile levels must lie in (0, 1]"));
        }
        Ok(QuantileSet(levels))
    }

    /// `{ i/N | i = 1..N }` — the reward critics' set.
    pub fn uniform(n: usize) -> Self {
        QuantileSet((1..=n).map(|i| i as f64 / n as f64).collect())
    }

    /// The upper-bound constraint critics' set.
    pub fn upper_constraint_default() -> Self {
        QuantileSet(vec![0.1, 0.3, 0.5, 0.7, 0.8, 0.9, 0.99, 0.995, 0.999])
    }

    /// Mirror of [`Self::upper_constraint_default`]: `{1 - tau}`, re-sorted.
    pub fn lower_constraint_default() -> Self {
        // the mirror `{1 - tau}` of the upper set, written as exact literals
        // so that risk levels like 0.005 compare equal under `index_of`
        QuantileSet(vec![0.001, 0.005, 0.01, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9])
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, alpha: f64) -> bool {
        self.0.iter().any(|&t| t == alpha)
    }

    /// Position of `alpha`, validated at configuration time.
    pub fn index_of(&self, alpha: f64) -> Result<usize> {
        self.0
            .iter()
            .position(|&t| t == alpha)
            .ok_or_else(|| Error::config(format!("risk level {alpha} is not a member of the quantile set {:?}", self.0)))
    }
}

impl TryFrom<Vec<f64>> for QuantileSet {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        QuantileSet::new(v)
    }
}

impl From<QuantileSet> for Vec<f64> {
    fn from(s: QuantileSet) -> Vec<f64> {
        s.0
    }
}

/// Quantile regression loss `rho_tau(u) = u * (tau - 1{u<0})`.
pub fn quantile_loss(u: f64, tau: f64) -> f64 {
    let ind = if u < 0.0 { 1.0 } else { 0.0 };
    u * (tau - ind)
}

/// Huber loss: quadratic on `[-kappa, kappa]`, linear outside.
pub fn huber(u: f64, kappa: f64) -> Result<f64> {
    if kappa <= 0.0 {
        return Err(Error::config("huber kappa must be > 0"));
    }
    Ok(huber_unchecked(u, kappa))
}

#[inline]
fn huber_unchecked(u: f64, kappa: f64) -> f64 {
    let a = u.abs();
    if a <= kappa {
        0.5 * u * u
    } else {
        kappa * (a - 0.5 * kappa)
    }
}

/// Quantile Huber loss `|tau - 1{u<0}| * L_kappa(u) / kappa`.
pub fn quantile_huber(u: f64, tau: f64, kappa: f64) -> Result<f64> {
    if kappa <= 0.0 {
        return Err(Error::config("quantile huber kappa must be > 0"));
    }
    Ok(quantile_huber_unchecked(u, tau, kappa))
}

#[inline]
pub(crate) fn quantile_huber_unchecked(u: f64, tau: f64, kappa: f64) -> f64 {
    let ind = if u < 0.0 { 1.0 } else { 0.0 };
    (tau - ind).abs() * huber_unchecked(u, kappa) / kappa
}

/// Derivative of [`quantile_huber`] with respect to `u`.
#[inline]
pub(crate) fn quantile_huber_deriv(u: f64, tau: f64, kappa: f64) -> f64 {
    let ind = if u < 0.0 { 1.0 } else { 0.0 };
    (tau - ind).abs() * u.clamp(-kappa, kappa) / kappa
}

/// Per-sample critic loss: sum over the quantile set of the quantile Huber loss
/// of `target - predicted_tau`.
pub fn critic_loss(predicted: &[f64], target: f64, set: &QuantileSet, kappa: f64) -> Result<f64> {
    if kappa <= 0.0 {
        return Err(Error::config("critic_loss kappa must be > 0"));
    }
    if predicted.len() != set.len() {
        return Err(Error::Shape {
            expected: set.len(),
            got: predicted.len(),
            context: "critic_loss predictions",
        });
    }
    Ok(predicted
        .iter()
        .zip(set.levels())
        .map(|(&p, &tau)| quantile_huber_unchecked(target - p, tau, kappa))
        .sum())
}

/// Gradient of [`critic_loss`] with respect to the predictions.
pub fn critic_loss_grad(predicted: &[f64], target: f64, set: &QuantileSet, kappa: f64) -> Result<Vec<f64>> {
    if predicted.len() != set.len() {
        return Err(Error::Shape {
            expected: set.len(),
            got: predicted.len(),
            context: "critic_loss_grad predictions",
        });
    }
    Ok(predicted
        .iter()
        .zip(set.levels())
        .map(|(&p, &tau)| -quantile_huber_deriv(target - p, tau, kappa))
        .collect())
}

/// Mean of a quantile-value vector — the distribution mean estimate.
pub fn dist_mean(quantile_values: &[f64]) -> Result<f64> {
    if quantile_values.is_empty() {
        return Err(Error::config("dist_mean of empty quantile vector"));
    }
    Ok(quantile_values.iter().sum::<f64>() / quantile_values.len() as f64)
}

/// Value of the quantile estimate at level `alpha` (exact lookup).
pub fn quantile_value(quantile_values: &[f64], set: &QuantileSet, alpha: f64) -> Result<f64> {
    if quantile_values.len() != set.len() {
        return Err(Error::Shape {
            expected: set.len(),
            got: quantile_values.len(),
            context: "quantile_value",
        });
    }
    Ok(quantile_values[set.index_of(alpha)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantile_loss_examples() {
        assert_eq!(quantile_loss(0.0, 0.3), 0.0);
        assert_eq!(quantile_loss(1.0, 0.5), 0.5);
        assert_eq!(quantile_loss(-1.0, 0.5), 0.5);
        assert!((quantile_loss(1.0, 0.9) - 0.9).abs() < 1e-12);
        assert!((quantile_loss(-1.0, 0.9) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn huber_examples() {
        assert_eq!(huber(0.0, 1.0).unwrap(), 0.0);
        assert!((huber(0.5, 1.0).unwrap() - 0.125).abs() < 1e-12);
        assert!((huber(2.0, 1.0).unwrap() - 1.5).abs() < 1e-12);
        // continuity at the branch boundary
        let k = 0.7;
        assert!((huber(k, k).unwrap() - 0.5 * k * k).abs() < 1e-12);
        assert!(huber(1.0, 0.0).is_err());
        assert!(huber(1.0, -1.0).is_err());
    }

    #[test]
    fn quantile_huber_examples() {
        assert_eq!(quantile_huber(0.0, 0.9, 1.0).unwrap(), 0.0);
        assert!((quantile_huber(0.5, 0.9, 1.0).unwrap() - 0.1125).abs() < 1e-12);
        assert!((quantile_huber(-0.5, 0.9, 1.0).unwrap() - 0.0125).abs() < 1e-12);
        assert!(quantile_huber(0.5, 0.9, -1.0).is_err());
    }

    #[test]
    fn quantile_huber_small_kappa_limit() {
        let qh = quantile_huber(0.3, 0.7, 1e-6).unwrap();
        let ql = quantile_loss(0.3, 0.7);
        assert!((qh - ql).abs() < 1e-6);
    }

    #[test]
    fn critic_loss_examples() {
        let set = QuantileSet::new(vec![0.5]).unwrap();
        assert_eq!(critic_loss(&[0.5], 0.5, &set, 1.0).unwrap(), 0.0);
        let v = critic_loss(&[0.0], 0.5, &set, 1.0).unwrap();
        assert!((v - 0.0625).abs() < 1e-12);
        assert!(critic_loss(&[0.0, 0.0], 0.5, &set, 1.0).is_err());
    }

    #[test]
    fn critic_loss_grad_matches_finite_differences() {
        let set = QuantileSet::upper_constraint_default();
        let kappa = 1.0;
        let target = 0.37;
        // predictions away from branch boundaries (|target - p| far from 0 and kappa)
        let pred: Vec<f64> = (0..set.len()).map(|i| 0.37 - 0.23 - 0.11 * i as f64).collect();
        let g = critic_loss_grad(&pred, target, &set, kappa).unwrap();
        let h = 1e-6;
        for i in 0..pred.len() {
            let mut pp = pred.clone();
            let mut pm = pred.clone();
            pp[i] += h;
            pm[i] -= h;
            let fd = (critic_loss(&pp, target, &set, kappa).unwrap()
                - critic_loss(&pm, target, &set, kappa).unwrap())
                / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-5, "head {i}: fd={fd}, g={}", g[i]);
        }
    }

    #[test]
    fn dist_mean_examples() {
        assert_eq!(dist_mean(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(dist_mean(&[4.2; 7]).unwrap(), 4.2);
        assert!(dist_mean(&[]).is_err());
    }

    #[test]
    fn dist_mean_of_normal_quantiles_near_zero() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let set = QuantileSet::uniform(21);
        let n = Normal::new(0.0, 1.0).unwrap();
        // the analytic quantile at tau = 1 is unbounded, so evaluate each head
        // at the midpoint of its probability bin; the midpoints are symmetric
        // about 0.5, making the analytic mean exactly zero
        let vals: Vec<f64> = set
            .levels()
            .iter()
            .map(|&t| n.inverse_cdf(t - 0.5 / 21.0))
            .collect();
        let m = dist_mean(&vals).unwrap();
        assert!(m.abs() < 0.05, "mean {m}");
    }

    #[test]
    fn quantile_value_examples() {
        let set = QuantileSet::new(vec![0.1, 0.5, 0.9]).unwrap();
        let vals = [-1.0, 0.0, 1.0];
        assert_eq!(quantile_value(&vals, &set, 0.9).unwrap(), 1.0);
        assert_eq!(quantile_value(&vals, &set, 0.1).unwrap(), -1.0);
        assert!(quantile_value(&vals, &set, 0.25).is_err());
    }

    #[test]
    fn quantile_set_validation() {
        assert!(QuantileSet::new(vec![]).is_err());
        assert!(QuantileSet::new(vec![0.5, 0.5]).is_err());
        assert!(QuantileSet::new(vec![0.9, 0.1]).is_err());
        assert!(QuantileSet::new(vec![0.0, 0.5]).is_err());
        assert!(QuantileSet::new(vec![0.5, 1.1]).is_err());
        assert!(QuantileSet::new(vec![0.5, 1.0]).is_ok());
    }

    #[test]
    fn default_sets_match_configuration() {
        let up = QuantileSet::upper_constraint_default();
        assert!(up.contains(0.995));
        let lo = QuantileSet::lower_constraint_default();
        assert!(lo.contains(0.005));
        assert_eq!(lo.len(), up.len());
        let t = QuantileSet::uniform(21);
        assert_eq!(t.len(), 21);
        assert!((t.levels()[0] - 1.0 / 21.0).abs() < 1e-15);
        assert_eq!(*t.levels().last().unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn quantile_huber_nonneg_zero_iff_zero(u in -10.0..10.0f64, tau in 0.01..1.0f64, kappa in 0.01..5.0f64) {
            let v = quantile_huber(u, tau, kappa).unwrap();
            prop_assert!(v >= 0.0);
            if u != 0.0 && tau < 1.0 {
                prop_assert!(v > 0.0);
            }
            prop_assert_eq!(quantile_huber(0.0, tau, kappa).unwrap(), 0.0);
        }

        #[test]
        fn quantile_huber_monotone_in_abs_u(u in 0.01..10.0f64, scale in 1.01..3.0f64, tau in 0.01..1.0f64, kappa in 0.01..5.0f64) {
            let small = quantile_huber(u, tau, kappa).unwrap();
            let big = quantile_huber(u * scale, tau, kappa).unwrap();
            prop_assert!(big >= small);
            let small_n = quantile_huber(-u, tau, kappa).unwrap();
            let big_n = quantile_huber(-u * scale, tau, kappa).unwrap();
            prop_assert!(big_n >= small_n);
        }

        #[test]
        fn quantile_huber_monotone_in_tau(u in 0.01..10.0f64, t1 in 0.01..0.5f64, dt in 0.01..0.45f64, kappa in 0.01..5.0f64) {
            let t2 = t1 + dt;
            // increasing in tau for u > 0, decreasing for u < 0
            prop_assert!(quantile_huber(u, t2, kappa).unwrap() >= quantile_huber(u, t1, kappa).unwrap());
            prop_assert!(quantile_huber(-u, t2, kappa).unwrap() <= quantile_huber(-u, t1, kappa).unwrap());
        }
    }
}
