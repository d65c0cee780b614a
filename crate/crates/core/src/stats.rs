//! Small statistics toolkit: moments, bootstrap intervals, least-squares
//! fits and the two-sample Kolmogorov–Smirnov test.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

pub fn std_error(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

pub fn weighted_mean(x: &[f64], w: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// Percentile bootstrap interval for the mean of `x`.
pub fn bootstrap_mean_ci(x: &[f64], level: f64, resamples: usize, seed: u64) -> Interval {
    bootstrap_ci(x.len(), level, resamples, seed, |idx| {
        idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64
    }, mean(x))
}

/// Percentile bootstrap over row indices: `stat` receives a resampled index set.
pub fn bootstrap_ci<F>(n: usize, level: f64, resamples: usize, seed: u64, mut stat: F, estimate: f64) -> Interval
where
    F: FnMut(&[usize]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = vec![0usize; n];
    let mut values: Vec<f64> = (0..resamples)
        .map(|_| {
            idx.iter_mut().for_each(|i| *i = rng.gen_range(0..n));
            stat(&idx)
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Interval {
        estimate,
        lower: quantile_sorted(&values, tail),
        upper: quantile_sorted(&values, 1.0 - tail),
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(x: &[f64], q: f64) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (x.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    x[lo] + (pos - lo as f64) * (x[hi] - x[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit { slope, intercept: my - slope * mx, r_squared }
}

/// Least-squares slope of `y ≈ c·x`.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonFit {
    pub slope: f64,
    pub intercept: f64,
    pub deviance: f64,
}

/// Maximum likelihood for `k_i ~ Poisson(n_i·exp(a + b·x_i))`.
///
/// Zero counts take part in the fit. Returns `None` when the positive counts
/// sit at fewer than two distinct `x`, where no finite maximiser exists.
pub fn poisson_log_linear(x: &[f64], counts: &[u64], exposure: &[f64]) -> Option<PoissonFit> {
    let mut support: Vec<f64> = x.iter().zip(counts).filter(|(_, &k)| k > 0).map(|(x, _)| *x).collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    if support.len() < 2 {
        return None;
    }
    let k: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let loglik = |a: f64, b: f64| -> f64 {
        x.iter().zip(&k).zip(exposure).map(|((x, k), n)| k * (a + b * x) - n * (a + b * x).exp()).sum()
    };
    let mut a = (k.iter().sum::<f64>() / exposure.iter().sum::<f64>()).ln();
    let mut b = 0.0;
    let mut current = loglik(a, b);
    for _ in 0..200 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ((x, k), n) in x.iter().zip(&k).zip(exposure) {
            let mu = n * (a + b * x).exp();
            ga += k - mu;
            gb += x * (k - mu);
            haa += mu;
            hab += x * mu;
            hbb += x * x * mu;
        }
        let det = haa * hbb - hab * hab;
        let da = (hbb * ga - hab * gb) / det;
        let db = (haa * gb - hab * ga) / det;
        let mut step = 1.0;
        let mut next = loglik(a + da, b + db);
        while !(next >= current) && step > 1e-10 {
            step *= 0.5;
            next = loglik(a + step * da, b + step * db);
        }
        a += step * da;
        b += step * db;
        let done = (next - current).abs() < 1e-13 * current.abs().max(1.0);
        current = next;
        if done {
            break;
        }
    }
    let deviance = 2.0
        * x.iter()
            .zip(&k)
            .zip(exposure)
            .map(|((x, k), n)| {
                let mu = n * (a + b * x).exp();
                let sat = if *k > 0.0 { k * (k / mu).ln() } else { 0.0 };
                sat - (k - mu)
            })
            .sum::<f64>();
    Some(PoissonFit { slope: b, intercept: a, deviance })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov statistic with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return KsResult { statistic: 0.0, p_value: 1.0 };
    }
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let sq = ne.sqrt();
    // Stephens' small-sample correction
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    KsResult { statistic: d, p_value: kolmogorov_sf(lambda) }
}

/// KS statistic between two weighted samples. The p-value uses the
/// effective sizes `(Σw)²/Σw²`; with equal weights this is [`ks_two_sample`].
pub fn ks_weighted(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64]) -> KsResult {
    let sorted = |x: &[f64], w: &[f64]| {
        let total: f64 = w.iter().sum();
        let mut v: Vec<(f64, f64)> = x.iter().zip(w).map(|(x, w)| (*x, w / total)).collect();
        v.sort_by(|p, q| p.0.total_cmp(&q.0));
        v
    };
    let (a, b) = (sorted(a, wa), sorted(b, wb));
    if a.is_empty() || b.is_empty() {
        return KsResult { statistic: 0.0, p_value: 1.0 };
    }
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].0.min(b[j].0);
        while i < a.len() && a[i].0 <= x {
            fa += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 <= x {
            fb += b[j].1;
            j += 1;
        }
        d = d.max((fa - fb).abs());
    }
    let eff = |v: &[(f64, f64)]| 1.0 / v.iter().map(|p| p.1 * p.1).sum::<f64>();
    let (n, m) = (eff(&a), eff(&b));
    let sq = (n * m / (n + m)).sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    KsResult { statistic: d, p_value: kolmogorov_sf(lambda) }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small arguments
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let s: f64 = (0..50).map(|k| y.powi((2 * k + 1) * (2 * k + 1))).sum();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * s;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
