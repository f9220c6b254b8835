//! Small empirical-statistics helpers shared by the simulation and pricing code.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Inverse-ECDF (type 1) quantile of an ascending slice: `x_(⌈n p⌉)`.
pub fn quantile_sorted<T: Copy>(sorted: &[T], p: f64) -> Option<T> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&p) {
        return None;
    }
    let n = sorted.len();
    let k = ((n as f64 * p).ceil() as usize).clamp(1, n);
    Some(sorted[k - 1])
}

/// Pearson χ² test that two count histograms come from the same law.
/// Cells empty in both samples are dropped. Returns `(statistic, df, p-value)`.
pub fn chi2_homogeneity(a: &[u64], b: &[u64]) -> (f64, usize, f64) {
    let na: f64 = a.iter().sum::<u64>() as f64;
    let nb: f64 = b.iter().sum::<u64>() as f64;
    let total = na + nb;
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let col = (x + y) as f64;
        if col == 0.0 {
            continue;
        }
        cells += 1;
        for (obs, rowsum) in [(x as f64, na), (y as f64, nb)] {
            let expected = rowsum * col / total;
            stat += (obs - expected).powi(2) / expected;
        }
    }
    let df = cells.saturating_sub(1);
    if df == 0 {
        return (0.0, 0, 1.0);
    }
    let p = ChiSquared::new(df as f64)
        .map(|c| c.sf(stat))
        .unwrap_or(f64::NAN);
    (stat, df, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_one_quantiles() {
        let xs = [1, 2, 3, 4];
        assert_eq!(quantile_sorted(&xs, 0.5), Some(2));
        assert_eq!(quantile_sorted(&xs, 0.51), Some(3));
        assert_eq!(quantile_sorted(&xs, 0.0), Some(1));
        assert_eq!(quantile_sorted(&xs, 1.0), Some(4));
        assert_eq!(quantile_sorted::<i32>(&[], 0.5), None);
    }

    #[test]
    fn chi2_identical_histograms() {
        let (s, df, p) = chi2_homogeneity(&[10, 20, 30, 0], &[10, 20, 30, 0]);
        assert_eq!((s, df, p), (0.0, 2, 1.0));
    }

    #[test]
    fn chi2_by_hand() {
        // 2x2 table [[10, 20], [20, 10]]: expected 15 everywhere
        let (s, df, p) = chi2_homogeneity(&[10, 20], &[20, 10]);
        assert!((s - 4.0 * 25.0 / 15.0).abs() < 1e-12);
        assert_eq!(df, 1);
        assert!((p - 0.009_823).abs() < 1e-5);
    }
}
