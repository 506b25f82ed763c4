//! Estimation helpers shared by the diagnostics: means with error bars,
//! batch-means standard errors for dependent series, autocovariance,
//! two-sample Kolmogorov–Smirnov, a Hill tail-index screen, and a small
//! least-squares fit with propagated errors.

use serde::{Deserialize, Serialize};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance. A sample of bit-identical values has exactly
/// zero dispersion; short-circuiting keeps cancellation noise out of the
/// deterministic-verdict path.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 || xs.iter().all(|x| x.to_bits() == xs[0].to_bits()) {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean for independent samples.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Mean and batch-means standard error: robust for dependent but
/// stationary series. `batches` contiguous blocks, remainder dropped.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let b = batches.max(2).min(xs.len().max(1));
    let len = xs.len() / b;
    if len == 0 {
        return (mean(xs), 0.0);
    }
    let block_means: Vec<f64> = (0..b).map(|i| mean(&xs[i * len..(i + 1) * len])).collect();
    (mean(&block_means), std_error(&block_means))
}

/// Sample autocovariance at the given lag (biased 1/n normalization).
pub fn autocovariance(xs: &[f64], lag: usize) -> f64 {
    if xs.len() <= lag {
        return 0.0;
    }
    let m = mean(xs);
    let n = xs.len();
    (0..n - lag).map(|i| (xs[i] - m) * (xs[i + lag] - m)).sum::<f64>() / n as f64
}

/// Autocovariance at a lag with a batch-means standard error, for
/// "zero within 3 sigma" style verdicts on dependent series.
pub fn autocovariance_with_se(xs: &[f64], lag: usize, batches: usize) -> (f64, f64) {
    if xs.len() <= lag + 1 {
        return (0.0, 0.0);
    }
    let m = mean(xs);
    let products: Vec<f64> = (0..xs.len() - lag)
        .map(|i| (xs[i] - m) * (xs[i + lag] - m))
        .collect();
    batch_mean_se(&products, batches)
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut stat = 0.0f64;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        stat = stat.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    stat
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Hill estimate of the tail index from the top `fraction` of the positive
/// samples. Returns `None` when there are too few positive samples to say
/// anything; `f64::INFINITY` when the upper order statistics are ties
/// (bounded-looking tail).
pub fn hill_tail_index(samples: &[f64], fraction: f64) -> Option<f64> {
    let mut xs: Vec<f64> = samples.iter().copied().filter(|x| *x > 0.0).collect();
    if xs.len() < 50 {
        return None;
    }
    xs.sort_by(|a, b| b.total_cmp(a));
    let k = ((xs.len() as f64 * fraction).ceil() as usize).clamp(10, xs.len() - 1);
    let threshold = xs[k];
    let h: f64 = xs[..k].iter().map(|x| (x / threshold).ln()).sum::<f64>() / k as f64;
    if h < 1e-12 {
        Some(f64::INFINITY)
    } else {
        Some(1.0 / h)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Least squares of `y` on `x`. The slope standard error combines the
/// propagated per-point errors `y_se` with the residual-based classical
/// term, so ill-fitting (non-affine) data widens the band instead of
/// producing overconfident verdicts.
pub fn linear_fit(x: &[f64], y: &[f64], y_se: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), y_se.len());
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let propagated: f64 = x
        .iter()
        .zip(y_se)
        .map(|(xi, se)| {
            let c = (xi - mx) / sxx;
            c * c * se * se
        })
        .sum();
    let residual_var: f64 = if x.len() > 2 {
        x.iter()
            .zip(y)
            .map(|(xi, yi)| {
                let r = yi - (intercept + slope * xi);
                r * r
            })
            .sum::<f64>()
            / (n - 2.0)
    } else {
        0.0
    };
    let classical = residual_var / sxx;
    LinearFit {
        slope,
        intercept,
        slope_se: (propagated + classical).sqrt(),
    }
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}
