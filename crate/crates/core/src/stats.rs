//! Shared statistics helpers: sample moments, the normal CDF, a tie-aware
//! Kolmogorov-Smirnov statistic and two least-squares fits.

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1) as f64)
}

/// Standard error of the sample variance via the asymptotic formula
/// Var(s^2) ~ (m4 - s^4) / n.
pub fn variance_stderr(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let (mean, var) = mean_var(xs);
    let m4: f64 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
    ((m4 - var * var).max(0.0) / n as f64).sqrt()
}

/// Unbiased sample covariance of two equal-length series.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let s: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    s / (n - 1) as f64
}

/// CDF of the centered normal law with variance `sigma2`.
pub fn normal_cdf(x: f64, sigma2: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / (2.0 * sigma2).sqrt()))
}

/// Two-sided Kolmogorov-Smirnov distance between the empirical law of
/// `samples` and a continuous CDF. Ties are handled by comparing the CDF
/// against the empirical CDF both before and at each distinct value.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut d = 0.0_f64;
    let mut i = 0;
    while i < n {
        let v = samples[i];
        let mut j = i;
        while j < n && samples[j] == v {
            j += 1;
        }
        let f = cdf(v);
        let below = i as f64 / nf;
        let at = j as f64 / nf;
        d = d.max((f - below).abs()).max((at - f).abs());
        i = j;
    }
    d
}

/// Least squares line y = a + b x. Returns (slope, intercept, relative RMS
/// residual), the latter normalized by the RMS of y.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return (0.0, sy / n, 0.0);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_y: f64 = ys.iter().map(|y| y * y).sum();
    let rel = if ss_y > 0.0 {
        (ss_res / ss_y).sqrt()
    } else {
        0.0
    };
    (slope, intercept, rel)
}

/// Least squares slope of y = b x (line through the origin).
pub fn slope_through_origin(xs: &[f64], ys: &[f64]) -> f64 {
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx <= 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_known_sample() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let (m, v) = mean_var(&xs);
        assert!((m - 2.5).abs() < 1e-15);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn normal_cdf_symmetry() {
        assert!((normal_cdf(0.0, 3.0) - 0.5).abs() < 1e-15);
        let a = normal_cdf(-1.2, 2.0);
        let b = normal_cdf(1.2, 2.0);
        assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_reference_value() {
        // Phi(1) for the standard normal
        assert!((normal_cdf(1.0, 1.0) - 0.8413447460685429).abs() < 1e-12);
    }

    #[test]
    fn ks_of_point_mass_against_normal_is_half() {
        let mut xs = vec![0.0; 1000];
        let d = ks_statistic(&mut xs, |x| normal_cdf(x, 1.0));
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ks_of_exact_uniform_grid_is_small() {
        // midpoints of n equal cells have KS = 1/(2n) against U[0,1]
        let n = 100;
        let mut xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let (slope, intercept, resid) = linear_fit(&xs, &ys);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept - 1.0).abs() < 1e-12);
        assert!(resid < 1e-12);
    }

    #[test]
    fn origin_slope_exact() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [1.5, 3.0, 4.5];
        assert!((slope_through_origin(&xs, &ys) - 1.5).abs() < 1e-12);
    }
}
