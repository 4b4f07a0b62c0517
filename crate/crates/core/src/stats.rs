//! Small order-statistics helpers shared by several modules.
//!
//! Two median conventions live here on purpose: entry-wise templates use the
//! *lower* median (a sample value, never an average), while consensus timing
//! uses the ordinary midpoint median.

/// Lower median: the `(n-1)/2`-th order statistic. Returns `None` when empty.
pub fn lower_median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let k = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(k, f64::total_cmp);
    Some(*m)
}

/// Midpoint median (mean of the two central values for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Linear-interpolation sample quantile (the "type 7" rule): with the sorted
/// sample `x[0..n]`, `h = (n-1)·alpha`, result `x[⌊h⌋] + (h-⌊h⌋)(x[⌊h⌋+1]-x[⌊h⌋])`.
pub fn quantile(values: &[f64], alpha: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&alpha) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * alpha;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Sample standard deviation (n-1 denominator); zero for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values).unwrap();
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(lower_median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(lower_median(&mut [4.0, 1.0, 3.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(lower_median(&mut []), None);
    }

    #[test]
    fn quantile_type7() {
        let v = [0.8, 0.9, 1.0];
        assert_eq!(quantile(&v, 1.0), Some(1.0));
        assert_eq!(quantile(&v, 0.5), Some(0.9));
        assert_eq!(quantile(&v, 0.0), Some(0.8));
        assert!((quantile(&[1.0, 2.0, 3.0, 4.0], 0.25).unwrap() - 1.75).abs() < 1e-12);
        assert_eq!(quantile(&[], 0.5), None);
    }
}
