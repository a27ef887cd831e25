//! Two-tailed Student t-tests with `+` / `-` / `~` verdicts.
//!
//! The t distribution is evaluated through the regularized incomplete beta
//! function, `P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)`, computed with the
//! modified Lentz continued fraction after the usual symmetry swap so the
//! fraction converges quickly. `ln Γ` uses a Lanczos approximation (g = 7,
//! 9 terms).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Significance level used for every verdict unless stated otherwise.
pub const DEFAULT_ALPHA: f64 = 0.05;

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

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x) Γ(1-x) = π / sin(πx).
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, `0 <= x <= 1`.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn two_tailed_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    if t.is_nan() {
        return f64::NAN;
    }
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// Cumulative distribution function of Student's t.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * two_tailed_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// The `t` with `two_tailed_p(t, df) = alpha`, found by bisection.
pub fn critical_value(alpha: f64, df: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while two_tailed_p(hi, df) > alpha {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if two_tailed_p(mid, df) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    /// The first sample is significantly better (larger).
    Plus,
    /// The first sample is significantly worse.
    Minus,
    /// No significant difference.
    Tilde,
}

impl Verdict {
    pub fn symbol(&self) -> char {
        match self {
            Verdict::Plus => '+',
            Verdict::Minus => '-',
            Verdict::Tilde => '~',
        }
    }

    pub fn flipped(&self) -> Verdict {
        match self {
            Verdict::Plus => Verdict::Minus,
            Verdict::Minus => Verdict::Plus,
            Verdict::Tilde => Verdict::Tilde,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Pooled-variance two-sample test, `df = n_a + n_b - 2`.
    #[default]
    TwoSample,
    /// Test on the paired differences, `df = R - 1`.
    Paired,
}

impl TestKind {
    pub fn name(&self) -> &'static str {
        match self {
            TestKind::TwoSample => "two_sample",
            TestKind::Paired => "paired",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonVerdict {
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub mean_difference: f64,
    pub significant: bool,
    pub verdict: Verdict,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m).powi(2)).sum()
}

fn verdict_from(t: f64, df: usize, mean_difference: f64, alpha: f64) -> ComparisonVerdict {
    let p = two_tailed_p(t, df as f64);
    let significant = p < alpha;
    let verdict = match (significant, mean_difference > 0.0) {
        (false, _) => Verdict::Tilde,
        (true, true) => Verdict::Plus,
        (true, false) => Verdict::Minus,
    };
    ComparisonVerdict {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p,
        mean_difference,
        significant,
        verdict,
    }
}

/// `t` for a mean difference over a standard error, with the zero-variance
/// conventions: equal means give `t = 0`, unequal means give `±inf`.
fn t_of(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Pooled-variance two-sample t-test of `a` against `b`.
pub fn t_test_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<ComparisonVerdict> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Domain(format!(
            "two-sample t-test needs at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let df = a.len() + b.len() - 2;
    let pooled = (sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) / df as f64;
    let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let diff = ma - mb;
    Ok(verdict_from(t_of(diff, se), df, diff, alpha))
}

/// Paired t-test on the differences `a[i] - b[i]`.
pub fn t_test_paired(a: &[f64], b: &[f64], alpha: f64) -> Result<ComparisonVerdict> {
    check_len(a.len(), b.len())?;
    if a.len() < 2 {
        return Err(Error::Domain(format!(
            "paired t-test needs at least 2 pairs, got {}",
            a.len()
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let md = mean(&d);
    let var = sum_sq_dev(&d, md) / (n - 1.0);
    let se = (var / n).sqrt();
    Ok(verdict_from(t_of(md, se), d.len() - 1, md, alpha))
}

pub fn t_test(kind: TestKind, a: &[f64], b: &[f64], alpha: f64) -> Result<ComparisonVerdict> {
    match kind {
        TestKind::TwoSample => t_test_two_sample(a, b, alpha),
        TestKind::Paired => t_test_paired(a, b, alpha),
    }
}
