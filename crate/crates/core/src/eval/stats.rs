use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationStats {
    pub mse: f64,
    pub mae: f64,
    pub count: usize,
}

/// Mean squared and mean absolute deviation of metric scores from human scores.
pub fn deviation_stats(metric_scores: &[f64], human_scores: &[f64]) -> Result<DeviationStats, EvalError> {
    if metric_scores.len() != human_scores.len() {
        return Err(EvalError::LengthMismatch(metric_scores.len(), human_scores.len()));
    }
    if metric_scores.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = metric_scores.len() as f64;
    let (sq, abs) = metric_scores
        .iter()
        .zip(human_scores)
        .fold((0.0, 0.0), |(sq, abs), (m, h)| {
            let d = m - h;
            (sq + d * d, abs + d.abs())
        });
    Ok(DeviationStats {
        mse: sq / n,
        mae: abs / n,
        count: metric_scores.len(),
    })
}

/// Relative reduction from `baseline` to `candidate`, in percent.
pub fn improvement(baseline: f64, candidate: f64) -> Result<f64, EvalError> {
    if baseline <= 0.0 || !baseline.is_finite() {
        return Err(EvalError::ZeroBaseline(baseline));
    }
    Ok(100.0 * (baseline - candidate) / baseline)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance two-sample t-test with a two-sided p-value.
pub fn welch_t_test(sample_a: &[f64], sample_b: &[f64]) -> Result<TTest, EvalError> {
    for (name, s) in [("first", sample_a), ("second", sample_b)] {
        if s.len() < 2 {
            return Err(EvalError::DegenerateSample(format!(
                "{name} sample has {} values, at least 2 needed",
                s.len()
            )));
        }
    }
    let (mean_a, var_a) = mean_and_variance(sample_a);
    let (mean_b, var_b) = mean_and_variance(sample_b);
    let se_a = var_a / sample_a.len() as f64;
    let se_b = var_b / sample_b.len() as f64;
    let se = se_a + se_b;
    if se == 0.0 {
        return Err(EvalError::DegenerateSample("both samples have zero variance".into()));
    }
    let t = (mean_a - mean_b) / se.sqrt();
    let df = se * se
        / (se_a * se_a / (sample_a.len() - 1) as f64 + se_b * se_b / (sample_b.len() - 1) as f64);
    let p_value = (2.0 * student_t_sf(t.abs(), df)).min(1.0);
    Ok(TTest { t, df, p_value })
}

/// Upper tail `P(T > t)` of Student's t distribution with `df` degrees of
/// freedom, for `t >= 0`.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// Regularized incomplete beta `I_x(a, b)`, evaluated with Lentz's continued
/// fraction on whichever side of the mean converges faster.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn deviations() {
        let s = deviation_stats(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!((s.mse, s.mae, s.count), (0.0, 0.0, 2));
        let s = deviation_stats(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!((s.mse, s.mae), (0.5, 0.5));
        assert!(matches!(deviation_stats(&[1.0], &[0.0, 1.0]), Err(EvalError::LengthMismatch(1, 2))));
        assert!(matches!(deviation_stats(&[], &[]), Err(EvalError::EmptyInput)));
    }

    #[test]
    fn improvements() {
        assert!((improvement(0.0817, 0.0678).unwrap() - 17.01).abs() <= 0.01);
        assert!((improvement(0.2213, 0.1891).unwrap() - 14.55).abs() <= 0.01);
        assert_eq!(improvement(0.3, 0.3).unwrap(), 0.0);
        assert!(matches!(improvement(0.0, 0.1), Err(EvalError::ZeroBaseline(_))));
    }

    #[test]
    fn gamma_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(0.1), 2.252_712_651_734_206, epsilon = 1e-13);
    }

    #[test]
    fn incomplete_beta_values() {
        // I_x(1, 1) = x and I_x(a, 1) = x^a
        assert_abs_diff_eq!(regularized_incomplete_beta(1.0, 1.0, 0.3), 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(regularized_incomplete_beta(3.0, 1.0, 0.7), 0.343, epsilon = 1e-14);
        // symmetry I_x(a, b) = 1 - I_{1-x}(b, a)
        let lhs = regularized_incomplete_beta(2.5, 4.0, 0.35);
        let rhs = 1.0 - regularized_incomplete_beta(4.0, 2.5, 0.65);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
    }

    #[test]
    fn t_distribution_tails() {
        // Cauchy for df = 1: P(T > 1) = 1/4
        assert_abs_diff_eq!(student_t_sf(1.0, 1.0), 0.25, epsilon = 1e-14);
        // df = 2 closed form: 1/2 - t / (2 sqrt(2 + t^2))
        let t = 1.7;
        assert_abs_diff_eq!(student_t_sf(t, 2.0), 0.5 - t / (2.0 * (2.0 + t * t).sqrt()), epsilon = 1e-14);
    }

    #[test]
    fn welch_identical_samples() {
        let r = welch_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn welch_degenerate() {
        assert!(matches!(
            welch_t_test(&[0.0; 4], &[1.0; 4]),
            Err(EvalError::DegenerateSample(_))
        ));
        assert!(matches!(welch_t_test(&[1.0], &[1.0, 2.0]), Err(EvalError::DegenerateSample(_))));
    }

    #[test]
    fn welch_scipy_value() {
        // scipy.stats.ttest_ind(a, b, equal_var=False)
        let r = welch_t_test(&[0.1, 0.4, 0.35, 0.8], &[0.9, 0.7, 1.0, 0.95, 0.85]).unwrap();
        assert_abs_diff_eq!(r.t, -3.040_616_910_126_664_7, epsilon = 1e-9);
        assert_abs_diff_eq!(r.p_value, 0.041_602_931_546_311_214, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn mae_squared_bounded_by_mse(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..50)) {
            let (m, h): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let s = deviation_stats(&m, &h).unwrap();
            prop_assert!(s.mae * s.mae <= s.mse + 1e-15);
        }

        #[test]
        fn improvement_is_linear(a in 0.01f64..10.0, frac in 0.0f64..1.0) {
            let d = a * frac;
            let pct = improvement(a, a - d).unwrap();
            prop_assert!((pct * a - 100.0 * d).abs() <= 1e-9 * (1.0 + a));
        }
    }
}
