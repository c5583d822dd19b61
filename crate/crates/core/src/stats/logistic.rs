//! Univariate logistic regression for odds-ratio analysis of rate features.

use crate::error::StatsError;

const MAX_ITERATIONS: usize = 100;
const GRADIENT_TOL: f64 = 1e-8;
/// Bound on |slope * unit| when the data are perfectly separated:
/// ln(1e6), capping the reported odds ratio at one million per unit.
const MAX_SCALED_SLOPE: f64 = 13.815510557964274;

/// Maximum-likelihood fit of `P(label) = sigmoid(intercept + slope * x)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogisticOdds {
    /// exp(slope * unit): multiplicative odds change per `unit` of x.
    pub odds_ratio: f64,
    pub slope: f64,
    pub intercept: f64,
    pub iterations: usize,
    /// True when the classes are perfectly separated along x; the slope is
    /// then clamped rather than divergent.
    pub separation: bool,
}

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta.clamp(-35.0, 35.0)).exp())
}

fn perfectly_separated(x: &[f64], labels: &[bool]) -> bool {
    let max_neg = x
        .iter()
        .zip(labels)
        .filter(|(_, &l)| !l)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_pos = x
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min);
    let max_pos = x
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_neg = x
        .iter()
        .zip(labels)
        .filter(|(_, &l)| !l)
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min);
    max_neg < min_pos || max_pos < min_neg
}

/// Fit by iteratively reweighted least squares until the gradient infinity
/// norm drops below 1e-8. Returns the odds ratio per `unit` increase of x.
///
/// Perfectly separated inputs cannot converge; they are detected up front,
/// fitted for a bounded number of steps, clamped, and flagged via
/// [`LogisticOdds::separation`] instead of erroring.
pub fn logistic_odds(x: &[f64], labels: &[bool], unit: f64) -> Result<LogisticOdds, StatsError> {
    if x.len() != labels.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: labels.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite { context: "logistic covariate" });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(StatsError::SingleClass);
    }

    let separation = perfectly_separated(x, labels);
    let n = x.len() as f64;
    let base_rate = positives as f64 / n;
    let mut intercept = (base_rate / (1.0 - base_rate)).ln();
    let mut slope = 0.0;
    let mut iterations = 0;

    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;
        let mut g0 = 0.0;
        let mut g1 = 0.0;
        let mut w00 = 0.0;
        let mut w01 = 0.0;
        let mut w11 = 0.0;
        for (&xi, &li) in x.iter().zip(labels) {
            let p = sigmoid(intercept + slope * xi);
            let r = f64::from(li as u8) - p;
            g0 += r;
            g1 += r * xi;
            let w = (p * (1.0 - p)).max(1e-10);
            w00 += w;
            w01 += w * xi;
            w11 += w * xi * xi;
        }
        if g0.abs().max(g1.abs()) < GRADIENT_TOL {
            break;
        }
        let det = w00 * w11 - w01 * w01;
        if det.abs() < 1e-300 {
            break;
        }
        intercept += (w11 * g0 - w01 * g1) / det;
        slope += (-w01 * g0 + w00 * g1) / det;
        if separation && slope.abs() * unit.abs() > MAX_SCALED_SLOPE {
            break;
        }
    }

    if separation {
        let bound = MAX_SCALED_SLOPE / unit.abs().max(1e-300);
        slope = slope.clamp(-bound, bound);
    } else if iterations == MAX_ITERATIONS {
        return Err(StatsError::NonConvergence {
            iterations: MAX_ITERATIONS,
        });
    }

    Ok(LogisticOdds {
        odds_ratio: (slope * unit).exp(),
        slope,
        intercept,
        iterations,
        separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn null_association_gives_unit_odds() {
        // Each x value appears with an exactly balanced label split.
        let mut x = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            x.push((i % 10) as f64 / 100.0);
            labels.push((i / 10) % 2 == 0);
        }
        let fit = logistic_odds(&x, &labels, 0.01).unwrap();
        assert!(!fit.separation);
        assert!((fit.odds_ratio - 1.0).abs() < 0.05, "or={}", fit.odds_ratio);
    }

    #[test]
    fn recovers_known_slope() {
        // True slope 100 => odds ratio per 0.01 of e ~ 2.718.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 2000;
        let mut x = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let xi: f64 = rng.gen_range(0.0..0.2);
            let p = sigmoid(-10.0 + 100.0 * xi);
            x.push(xi);
            labels.push(rng.gen_bool(p));
        }
        let fit = logistic_odds(&x, &labels, 0.01).unwrap();
        let expected = std::f64::consts::E;
        assert!(
            (fit.odds_ratio - expected).abs() / expected < 0.10,
            "odds_ratio={} slope={}",
            fit.odds_ratio,
            fit.slope
        );
    }

    #[test]
    fn perfect_separation_flagged_and_clamped() {
        let x = [0.0, 0.01, 0.02, 0.5, 0.6, 0.7];
        let labels = [false, false, false, true, true, true];
        let fit = logistic_odds(&x, &labels, 0.01).unwrap();
        assert!(fit.separation);
        assert!(fit.odds_ratio.is_finite());
        assert!(fit.odds_ratio <= 1e6 + 1.0);
    }

    #[test]
    fn single_class_errors() {
        let x = [0.1, 0.2, 0.3];
        assert!(matches!(
            logistic_odds(&x, &[true, true, true], 0.01),
            Err(StatsError::SingleClass)
        ));
    }
}
