// Copyright 2026 qdiff Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small statistical helpers used by tests and the evaluation harness.

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::NAN;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Median of a sample (mean of the middle pair for even sizes).
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One-sided sign-test p-value `P(X ≥ k)` for `X ~ Binomial(n, 1/2)`.
pub fn sign_test_p(positives: usize, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    // Accumulate in log space to stay finite for large n.
    let ln_half_n = n as f64 * 0.5f64.ln();
    let mut ln_c = 0.0; // ln C(n, 0)
    let mut total = 0.0;
    for k in 0..=n {
        if k > 0 {
            ln_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= positives {
            total += (ln_c + ln_half_n).exp();
        }
    }
    total.min(1.0)
}

/// Paired-difference summary of `after − before`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PairedSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub std_error: f64,
    pub positive: usize,
    pub negative: usize,
    /// One-sided sign-test p-value for a positive median difference; ties
    /// are dropped.
    pub sign_test_p: f64,
}

pub fn paired_summary(before: &[f64], after: &[f64]) -> PairedSummary {
    let diffs: Vec<f64> = after.iter().zip(before).map(|(a, b)| a - b).collect();
    let (mean, sd) = mean_sd(&diffs);
    let positive = diffs.iter().filter(|d| **d > 0.0).count();
    let negative = diffs.iter().filter(|d| **d < 0.0).count();
    PairedSummary {
        n: diffs.len(),
        mean,
        median: median(&diffs),
        std_error: if diffs.is_empty() { f64::NAN } else { sd / (diffs.len() as f64).sqrt() },
        positive,
        negative,
        sign_test_p: sign_test_p(positive, positive + negative),
    }
}
