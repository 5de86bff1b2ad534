use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
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

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const EPS: f64 = 1e-15;
const MAX_ITER: usize = 500;

/// Regularized upper incomplete gamma `Q(a, x) = Gamma(a, x) / Gamma(a)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64> {
    if !a.is_finite() || a <= 0.0 || x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!(
            "incomplete gamma needs a > 0 and x >= 0, got a={a}, x={x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        Ok((1.0 - sum * log_prefactor.exp()).clamp(0.0, 1.0))
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = f64::MIN_POSITIVE / EPS;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        Ok((log_prefactor.exp() * h).clamp(0.0, 1.0))
    }
}

/// Upper tail probability of the chi-squared distribution.
pub fn chi2_sf(x: f64, df: f64) -> Result<f64> {
    if df.is_nan() || df <= 0.0 {
        return Err(Error::domain(format!("degrees of freedom must be > 0, got {df}")));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    regularized_gamma_q(df / 2.0, x / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub p: f64,
    pub df: usize,
    pub n_subjects: usize,
}

/// Average ranks (1-based) of `row`, plus the row's `sum(t^3 - t)` over tie groups.
fn rank_row(row: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    (ranks, ties)
}

/// Friedman rank test over a complete block design.
///
/// `blocks[i][j]` is subject `i`'s value under condition `j`. Ties within a
/// subject receive average ranks and the statistic carries the usual tie
/// correction. When every subject ties across all conditions the statistic
/// is 0 with p = 1.
pub fn friedman_test(blocks: &[Vec<f64>]) -> Result<FriedmanResult> {
    let n = blocks.len();
    if n < 2 {
        return Err(Error::Degenerate("Friedman test needs at least two subjects".into()));
    }
    let m = blocks[0].len();
    if m < 2 {
        return Err(Error::Degenerate("Friedman test needs at least two conditions".into()));
    }
    let mut rank_sums = vec![0.0; m];
    let mut tie_sum = 0.0;
    for (i, row) in blocks.iter().enumerate() {
        if row.len() != m {
            return Err(Error::domain(format!(
                "subject {i} has {} conditions, expected {m}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("subject {i} has a non-finite value")));
        }
        let (ranks, ties) = rank_row(row);
        for (s, r) in rank_sums.iter_mut().zip(ranks) {
            *s += r;
        }
        tie_sum += ties;
    }
    let (nf, mf) = (n as f64, m as f64);
    let correction = 1.0 - tie_sum / (nf * (mf * mf * mf - mf));
    let df = m - 1;
    if correction <= 0.0 {
        return Ok(FriedmanResult {
            chi2: 0.0,
            p: 1.0,
            df,
            n_subjects: n,
        });
    }
    let sum_sq: f64 = rank_sums.iter().map(|r| r * r).sum();
    let numerator = 12.0 * sum_sq - 3.0 * nf * nf * mf * (mf + 1.0) * (mf + 1.0);
    let chi2 = (numerator / (nf * mf * (mf + 1.0) * correction)).max(0.0);
    Ok(FriedmanResult {
        chi2,
        p: chi2_sf(chi2, df as f64)?,
        df,
        n_subjects: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn ln_gamma_at_integers_and_half() {
        let mut fact = 1.0f64;
        for k in 1..20 {
            assert_relative_eq!(ln_gamma(k as f64), fact.ln(), epsilon = 1e-12, max_relative = 1e-13);
            fact *= k as f64;
        }
        assert_relative_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-14);
    }

    #[test]
    fn chi2_df2_is_exponential() {
        for x in [0.1, 1.0, 2.8, 5.0, 10.0, 30.0, 80.0] {
            assert_relative_eq!(chi2_sf(x, 2.0).unwrap(), (-x / 2.0f64).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn chi2_matches_independent_implementation() {
        for df in [1.0, 2.0, 3.0, 4.5, 10.0, 25.0] {
            let reference = ChiSquared::new(df).unwrap();
            for x in [0.01, 0.5, 1.0, 3.0, 7.0, 15.0, 40.0] {
                let ours = chi2_sf(x, df).unwrap();
                let theirs = reference.sf(x);
                assert!((ours - theirs).abs() < 1e-10, "df={df} x={x}: {ours} vs {theirs}");
            }
        }
    }

    #[test]
    fn chi2_edges() {
        assert_eq!(chi2_sf(0.0, 2.0).unwrap(), 1.0);
        assert_eq!(chi2_sf(f64::INFINITY, 2.0).unwrap(), 0.0);
        assert!(chi2_sf(1.0, 0.0).is_err());
        assert!(regularized_gamma_q(1.0, f64::NAN).is_err());
    }

    fn unanimous(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| vec![60.0 + i as f64, 50.0 + i as f64, 45.0 - i as f64])
            .collect()
    }

    #[test]
    fn unanimous_five_by_three() {
        let r = friedman_test(&unanimous(5)).unwrap();
        assert_eq!(r.chi2, 10.0);
        assert_eq!(r.df, 2);
        assert_relative_eq!(r.p, (-5.0f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(r.p, 0.006738, epsilon = 1e-6);
    }

    #[test]
    fn mixed_rankings() {
        // Rank sums 12, 9, 9 -> chi2 = 12 * 306 / 60 - 60 = 1.2
        let blocks = vec![
            vec![3.0, 2.0, 1.0],
            vec![3.0, 1.0, 2.0],
            vec![3.0, 2.0, 1.0],
            vec![1.0, 3.0, 2.0],
            vec![2.0, 1.0, 3.0],
        ];
        let r = friedman_test(&blocks).unwrap();
        assert_relative_eq!(r.chi2, 1.2, epsilon = 1e-12);
        assert_relative_eq!(r.p, 0.5488, epsilon = 1e-4);

        // Rank sums 13, 9, 8 -> chi2 = 12 * 314 / 60 - 60 = 2.8
        let blocks = vec![
            vec![3.0, 2.0, 1.0],
            vec![3.0, 2.0, 1.0],
            vec![3.0, 1.0, 2.0],
            vec![2.0, 3.0, 1.0],
            vec![2.0, 1.0, 3.0],
        ];
        let r = friedman_test(&blocks).unwrap();
        assert_relative_eq!(r.chi2, 2.8, epsilon = 1e-12);
        assert_relative_eq!(r.p, 0.2466, epsilon = 1e-4);
    }

    #[test]
    fn ties_are_corrected() {
        let all_tied = vec![vec![1.0, 1.0, 1.0]; 4];
        let r = friedman_test(&all_tied).unwrap();
        assert_eq!((r.chi2, r.p), (0.0, 1.0));

        // Average ranks {1.5, 1.5, 3} and {1, 2, 3} across 2 subjects:
        // R = (2.5, 3.5, 6), C = 1 - 6 / (2 * 24) = 0.875.
        let blocks = vec![vec![1.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]];
        let r = friedman_test(&blocks).unwrap();
        let raw = (12.0 * (6.25 + 12.25 + 36.0) - 3.0 * 4.0 * 3.0 * 16.0) / (2.0 * 3.0 * 4.0);
        assert_relative_eq!(r.chi2, raw / 0.875, epsilon = 1e-12);
    }

    #[test]
    fn rejects_ragged_or_tiny_designs() {
        assert!(friedman_test(&[]).is_err());
        assert!(friedman_test(&[vec![1.0], vec![2.0]]).is_err());
        assert!(friedman_test(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(friedman_test(&[vec![1.0, 2.0]]).is_err());
        assert!(friedman_test(&[vec![1.0, f64::NAN], vec![1.0, 2.0]]).is_err());
    }

    proptest! {
        #[test]
        fn invariant_under_monotone_transform(
            blocks in proptest::collection::vec(proptest::collection::vec(0.0f64..100.0, 3), 2..8),
            scale in 0.1f64..10.0,
            shift in -50.0f64..50.0,
        ) {
            let a = friedman_test(&blocks).unwrap();
            let transformed: Vec<Vec<f64>> = blocks
                .iter()
                .map(|row| row.iter().map(|v| v.powi(3) * scale + shift).collect())
                .collect();
            // The transform is strictly increasing but can collapse distinct
            // values to equal floats; only compare when ranks are preserved.
            let same_ties = blocks.iter().zip(&transformed).all(|(r, t)| rank_row(r) == rank_row(t));
            prop_assume!(same_ties);
            let b = friedman_test(&transformed).unwrap();
            prop_assert!((a.chi2 - b.chi2).abs() <= 1e-12 * (1.0 + a.chi2));
        }

        #[test]
        fn p_value_in_unit_interval(blocks in proptest::collection::vec(proptest::collection::vec(0u8..4, 4), 2..10)) {
            let blocks: Vec<Vec<f64>> = blocks.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
            let r = friedman_test(&blocks).unwrap();
            prop_assert!(r.chi2 >= 0.0);
            prop_assert!((0.0..=1.0).contains(&r.p));
        }
    }
}
