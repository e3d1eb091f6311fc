//! Separation histograms, log-linear decay fits, and the cross-checkpoint
//! decay-constant regression.
//!
//! The separation distribution at a fixed census bound is close to
//! `A * exp(-m s)`; `fit_decay` estimates `m` as the negated slope of an
//! ordinary least-squares fit of `ln(count)` against `s`. Fitted `m`
//! values from several checkpoints are then regressed through the origin
//! against `1 / ln(pi1)` to estimate the scale-free constant `m0`.

use serde::Serialize;
use thiserror::Error;

use crate::twins::SeparationRecord;

/// Default minimum bin occupancy admitted to a decay fit.
pub const DEFAULT_MIN_COUNT: u64 = 10;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("fit insufficient: {qualifying} bins with count >= {min_count}, need at least 3")]
    FitInsufficient { qualifying: usize, min_count: u64 },
    #[error("degenerate fit: decay parameter must be positive, got {m}")]
    DegenerateFit { m: f64 },
    #[error("no checkpoint fits with positive decay parameter")]
    NoValidFits,
    #[error("empty histogram")]
    EmptyHistogram,
}

/// Occurrence counts of each separation value over a census window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationHistogram {
    /// `counts[s]` = number of gaps with separation `s`.
    counts: Vec<u64>,
    /// Census bound of the snapshot.
    pub n_limit: u64,
    /// Primes at or below the bound.
    pub pi1: u64,
    /// Twins fully at or below the bound.
    pub pi2: u64,
}

impl SeparationHistogram {
    pub fn new(counts: Vec<u64>, n_limit: u64, pi1: u64, pi2: u64) -> Self {
        let mut counts = counts;
        while counts.last() == Some(&0) {
            counts.pop();
        }
        SeparationHistogram { counts, n_limit, pi1, pi2 }
    }

    pub fn count(&self, s: u64) -> u64 {
        self.counts.get(s as usize).copied().unwrap_or(0)
    }

    /// Total number of gaps.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Largest separation with a nonzero count.
    pub fn max_s(&self) -> Option<u64> {
        if self.counts.is_empty() {
            None
        } else {
            Some(self.counts.len() as u64 - 1)
        }
    }

    /// Occupied bins in ascending `s` order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| (s as u64, c))
    }

    /// `count(s) / total()`.
    pub fn frequency(&self, s: u64) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.count(s) as f64 / total as f64
        }
    }

    /// Most frequent separation; ties break toward the smallest `s`.
    pub fn mode(&self) -> Result<u64, StatsError> {
        high_jumper(self)
    }
}

/// Decay parameter fitted at one checkpoint.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    /// Decay parameter (negated log-frequency slope).
    pub m: f64,
    /// Standard error of the slope estimate.
    pub stderr_m: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    /// Smallest and largest separation admitted to the fit.
    pub fit_range: (u64, u64),
    /// Primes at or below the checkpoint bound.
    pub pi1: u64,
    /// Checkpoint bound.
    pub n_limit: u64,
    /// Bins admitted to the fit.
    pub bins_used: usize,
    /// Zero-count bins below the largest observed separation.
    pub interior_zero_bins: usize,
}

/// Cross-checkpoint estimate of the decay constant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct M0Estimate {
    pub m0: f64,
    pub stderr_m0: f64,
    pub checkpoints_used: usize,
}

/// One histogram per snapshot bound, each covering every gap whose
/// closing twin lies fully at or below the bound.
///
/// Bounds are sorted and deduplicated. `pi1`/`pi2` of each snapshot are
/// inferred from the records themselves (prime count at the last closing
/// twin's upper member); a census runner that tracks the sieve position
/// fills in exact values instead.
pub fn build_histogram<I>(seps: I, snapshot_at: &[u64]) -> Vec<SeparationHistogram>
where
    I: Iterator<Item = SeparationRecord>,
{
    let mut bounds: Vec<u64> = snapshot_at.to_vec();
    bounds.sort_unstable();
    bounds.dedup();

    let mut out = Vec::with_capacity(bounds.len());
    let mut counts: Vec<u64> = Vec::new();
    let mut gaps = 0u64;
    let mut last: Option<SeparationRecord> = None;
    let mut next = 0usize;

    let snapshot = |bound: u64,
                        counts: &[u64],
                        gaps: u64,
                        last: &Option<SeparationRecord>| {
        let (pi1, pi2) = match last {
            Some(rec) => (rec.right.pi1_at_p + 1, gaps + 1),
            None => (0, 0),
        };
        SeparationHistogram::new(counts.to_vec(), bound, pi1, pi2)
    };

    for rec in seps {
        let upper = rec.right.second();
        while next < bounds.len() && bounds[next] < upper {
            out.push(snapshot(bounds[next], &counts, gaps, &last));
            next += 1;
        }
        let s = rec.s as usize;
        if counts.len() <= s {
            counts.resize(s + 1, 0);
        }
        counts[s] += 1;
        gaps += 1;
        last = Some(rec);
    }
    while next < bounds.len() {
        out.push(snapshot(bounds[next], &counts, gaps, &last));
        next += 1;
    }
    out
}

/// Ordinary least squares of `ln(count)` against `s` over real-valued
/// points. Returns the decay fit without checkpoint metadata; callers
/// that fit a histogram use [`fit_decay`].
///
/// Points with non-positive count are rejected by the caller; this
/// routine assumes every `count > 0`.
pub fn fit_log_linear(points: &[(f64, f64)], min_count: u64) -> Result<DecayFit, StatsError> {
    let qualifying: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, c)| *c >= min_count as f64)
        .map(|&(s, c)| (s, c.ln()))
        .collect();
    if qualifying.len() < 3 {
        return Err(StatsError::FitInsufficient {
            qualifying: qualifying.len(),
            min_count,
        });
    }

    let n = qualifying.len() as f64;
    let mean_x = qualifying.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = qualifying.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = qualifying.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = qualifying
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(StatsError::DegenerateFit { m: f64::NAN });
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;

    let sse: f64 = qualifying
        .iter()
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let sst: f64 = qualifying.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        0.0
    };
    let stderr_m = if qualifying.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };

    let m = -slope;
    if m.is_nan() || m <= 0.0 {
        return Err(StatsError::DegenerateFit { m });
    }

    let s_min = qualifying.iter().map(|(x, _)| *x).fold(f64::INFINITY, f64::min);
    let s_max = qualifying
        .iter()
        .map(|(x, _)| *x)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayFit {
        m,
        stderr_m,
        r_squared,
        fit_range: (s_min as u64, s_max as u64),
        pi1: 0,
        n_limit: 0,
        bins_used: qualifying.len(),
        interior_zero_bins: 0,
    })
}

/// Fit the decay parameter of a separation histogram.
///
/// Zero-count bins are excluded (their logarithm is undefined); bins
/// below `min_count` are excluded as too noisy. Requires at least three
/// qualifying bins and a strictly positive decay estimate.
pub fn fit_decay(
    hist: &SeparationHistogram,
    min_count: u64,
) -> Result<DecayFit, StatsError> {
    let points: Vec<(f64, f64)> = hist.iter().map(|(s, c)| (s as f64, c as f64)).collect();
    let mut fit = fit_log_linear(&points, min_count.max(1))?;
    fit.pi1 = hist.pi1;
    fit.n_limit = hist.n_limit;
    fit.interior_zero_bins = match hist.max_s() {
        Some(max_s) => (0..=max_s).filter(|&s| hist.count(s) == 0).count(),
        None => 0,
    };
    Ok(fit)
}

/// Regression through the origin of `m` against `1 / ln(pi1)`.
///
/// Fits with non-positive or non-finite `m`, or with `pi1 < 2`, are
/// ignored; at least one usable fit is required.
pub fn fit_m0(fits: &[DecayFit]) -> Result<M0Estimate, StatsError> {
    let weights = vec![1.0; fits.len()];
    fit_m0_weighted(fits, &weights)
}

/// Weighted variant of [`fit_m0`]. The point estimate is invariant under
/// uniform scaling of the weights.
pub fn fit_m0_weighted(fits: &[DecayFit], weights: &[f64]) -> Result<M0Estimate, StatsError> {
    assert_eq!(fits.len(), weights.len(), "one weight per fit");
    let usable: Vec<(f64, f64, f64)> = fits
        .iter()
        .zip(weights)
        .filter(|(f, &w)| f.m > 0.0 && f.m.is_finite() && f.pi1 >= 2 && w > 0.0)
        .map(|(f, &w)| (1.0 / (f.pi1 as f64).ln(), f.m, w))
        .collect();
    if usable.is_empty() {
        return Err(StatsError::NoValidFits);
    }

    let sxy: f64 = usable.iter().map(|(x, m, w)| w * x * m).sum();
    let sxx: f64 = usable.iter().map(|(x, _, w)| w * x * x).sum();
    let m0 = sxy / sxx;

    let n = usable.len() as f64;
    let stderr_m0 = if usable.len() > 1 {
        let sse: f64 = usable.iter().map(|(x, m, w)| w * (m - m0 * x).powi(2)).sum();
        let mean_w = usable.iter().map(|(_, _, w)| w).sum::<f64>() / n;
        (sse / (n - 1.0) / (sxx / mean_w) / mean_w).sqrt()
    } else {
        0.0
    };

    Ok(M0Estimate { m0, stderr_m0, checkpoints_used: usable.len() })
}

/// The separation with the greatest count; ties break toward the
/// smallest separation. Errors on an empty histogram.
pub fn high_jumper(hist: &SeparationHistogram) -> Result<u64, StatsError> {
    if hist.total() == 0 {
        return Err(StatsError::EmptyHistogram);
    }
    let mut best = (0u64, 0u64);
    for (s, c) in hist.iter() {
        if c > best.1 {
            best = (s, c);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::{primes_up_to, SieveConfig};
    use crate::twins::{enumerate_twins, separations};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn hist_from(counts: &[(u64, u64)]) -> SeparationHistogram {
        let max = counts.iter().map(|(s, _)| *s).max().unwrap_or(0);
        let mut v = vec![0u64; max as usize + 1];
        for &(s, c) in counts {
            v[s as usize] = c;
        }
        SeparationHistogram::new(v, 0, 0, 0)
    }

    fn census_histograms(limit: u64, bounds: &[u64]) -> Vec<SeparationHistogram> {
        let primes = primes_up_to(SieveConfig::new(limit)).unwrap();
        build_histogram(separations(enumerate_twins(primes, true)), bounds)
    }

    #[test]
    fn histogram_sums_below_100() {
        // 7 twins fully below 100 -> 6 gaps
        let hists = census_histograms(100, &[100]);
        assert_eq!(hists.len(), 1);
        assert_eq!(hists[0].total(), 6);
        assert_eq!(hists[0].pi2, 7);
    }

    #[test]
    fn histogram_single_twin_is_empty() {
        // only (5,7) lies fully below 10: no gaps yet
        let hists = census_histograms(100, &[10]);
        assert_eq!(hists[0].total(), 0);
        assert_eq!(hists[0].max_s(), None);
    }

    #[test]
    fn histogram_sums_below_1e6() {
        // 8169 twins below 1e6 including (3,5); 8168 after the discard;
        // one fewer gaps
        let hists = census_histograms(1_000_000, &[1_000_000]);
        assert_eq!(hists[0].pi2, 8_168);
        assert_eq!(hists[0].total(), 8_167);
    }

    #[test]
    fn histogram_snapshots_are_cumulative() {
        let hists = census_histograms(10_000, &[100, 1_000, 10_000]);
        assert_eq!(hists.len(), 3);
        assert!(hists[0].total() < hists[1].total());
        assert!(hists[1].total() < hists[2].total());
        // every gap fully below 1_000 is also fully below 10_000
        for s in 0..=hists[1].max_s().unwrap() {
            assert!(hists[2].count(s) >= hists[1].count(s));
        }
    }

    #[test]
    fn exact_log_linear_recovery() {
        let points: Vec<(f64, f64)> =
            (0..=10).map(|s| (s as f64, 1000.0 * (-0.5 * s as f64).exp())).collect();
        let fit = fit_log_linear(&points, 1).unwrap();
        assert!((fit.m - 0.5).abs() < 1e-9, "m = {}", fit.m);
        assert!(fit.stderr_m < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.fit_range, (0, 10));
    }

    #[test]
    fn flat_counts_are_degenerate() {
        let hist = hist_from(&[(0, 50), (1, 50), (2, 50), (3, 50)]);
        assert!(matches!(
            fit_decay(&hist, 10),
            Err(StatsError::DegenerateFit { .. })
        ));
    }

    #[test]
    fn growing_counts_are_degenerate() {
        let hist = hist_from(&[(0, 10), (1, 20), (2, 40), (3, 80)]);
        assert!(matches!(
            fit_decay(&hist, 10),
            Err(StatsError::DegenerateFit { m }) if m < 0.0
        ));
    }

    #[test]
    fn too_few_bins_is_insufficient() {
        let hist = hist_from(&[(0, 100), (1, 50), (2, 5), (3, 2)]);
        assert!(matches!(
            fit_decay(&hist, 10),
            Err(StatsError::FitInsufficient { qualifying: 2, .. })
        ));
    }

    #[test]
    fn interior_zero_bins_reported() {
        let hist = hist_from(&[(0, 100), (1, 60), (3, 20), (6, 12)]);
        let fit = fit_decay(&hist, 10).unwrap();
        assert_eq!(fit.interior_zero_bins, 3); // s = 2, 4, 5
        assert_eq!(fit.bins_used, 4);
    }

    #[test]
    fn multinomial_noise_within_three_stderr() {
        // geometric separations are exactly log-linear in expectation
        let m_true = 0.25f64;
        let q = (-m_true).exp();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(427);
        let mut counts = vec![0u64; 80];
        for _ in 0..100_000 {
            let u: f64 = rng.gen();
            let s = ((1.0 - u).ln() / q.ln()).floor() as usize;
            if s < counts.len() {
                counts[s] += 1;
            }
        }
        let hist = SeparationHistogram::new(counts, 0, 0, 0);
        let fit = fit_decay(&hist, 10).unwrap();
        assert!(
            (fit.m - m_true).abs() <= 3.0 * fit.stderr_m,
            "m = {} +/- {}, true {}",
            fit.m,
            fit.stderr_m,
            m_true
        );
    }

    #[test]
    fn m0_single_point_inversion() {
        // ln(546147) is within a hair of 13.21, so m = 0.1 inverts to ~1.321
        let pi1 = 546_147u64;
        let fit = DecayFit {
            m: 0.1,
            stderr_m: 0.0,
            r_squared: 1.0,
            fit_range: (0, 10),
            pi1,
            n_limit: 0,
            bins_used: 3,
            interior_zero_bins: 0,
        };
        let est = fit_m0(&[fit]).unwrap();
        let expected = 0.1 * (pi1 as f64).ln();
        assert!((est.m0 - expected).abs() < 1e-12);
        assert!((est.m0 - 1.321).abs() < 1e-4);
        assert_eq!(est.checkpoints_used, 1);
        assert_eq!(est.stderr_m0, 0.0);
    }

    #[test]
    fn m0_exact_model_recovery() {
        let fits: Vec<DecayFit> = [10_000u64, 1_000_000, 100_000_000]
            .iter()
            .map(|&pi1| DecayFit {
                m: 1.321 / (pi1 as f64).ln(),
                stderr_m: 0.0,
                r_squared: 1.0,
                fit_range: (0, 10),
                pi1,
                n_limit: 0,
                bins_used: 3,
                interior_zero_bins: 0,
            })
            .collect();
        let est = fit_m0(&fits).unwrap();
        assert!((est.m0 - 1.321).abs() < 1e-9, "m0 = {}", est.m0);
        assert!(est.stderr_m0 < 1e-9);
        assert_eq!(est.checkpoints_used, 3);
    }

    #[test]
    fn m0_requires_a_valid_fit() {
        assert!(matches!(fit_m0(&[]), Err(StatsError::NoValidFits)));
    }

    #[test]
    fn high_jumper_cases() {
        assert_eq!(high_jumper(&hist_from(&[(0, 5), (1, 5)])).unwrap(), 0);
        assert_eq!(high_jumper(&hist_from(&[(3, 7)])).unwrap(), 3);
        assert!(matches!(
            high_jumper(&SeparationHistogram::new(vec![], 0, 0, 0)),
            Err(StatsError::EmptyHistogram)
        ));
    }

    #[test]
    fn high_jumper_census_1e6() {
        let hists = census_histograms(1_000_000, &[1_000_000]);
        assert_eq!(high_jumper(&hists[0]).unwrap(), 0);
    }

    #[test]
    fn census_fit_tracks_decay_model_at_1e6() {
        let hists = census_histograms(1_000_000, &[1_000_000]);
        let fit = fit_decay(&hists[0], DEFAULT_MIN_COUNT).unwrap();
        // prototype census value; also within 10% of 1.321 / ln(pi1)
        assert!((fit.m - 0.1238).abs() < 0.002, "m = {}", fit.m);
        let model = 1.321 / (78_498f64).ln();
        assert!((fit.m - model).abs() / model < 0.10);
        assert!(fit.r_squared > 0.98);
    }

    fn dummy_fit(pi1: u64, m: f64) -> DecayFit {
        DecayFit {
            m,
            stderr_m: 0.0,
            r_squared: 1.0,
            fit_range: (0, 10),
            pi1,
            n_limit: 0,
            bins_used: 3,
            interior_zero_bins: 0,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_decay_recovered(m in 0.01f64..2.0, a in 1.0f64..1e6) {
            let points: Vec<(f64, f64)> =
                (0..12).map(|s| (s as f64, a * (-m * s as f64).exp())).collect();
            let fit = fit_log_linear(&points, 0).unwrap();
            prop_assert!((fit.m - m).abs() <= 1e-9 * m.max(1.0));
        }

        #[test]
        fn m0_invariant_under_weight_scaling(
            ms in proptest::collection::vec(0.01f64..1.0, 1..6),
            scale in 0.001f64..1000.0,
        ) {
            let fits: Vec<DecayFit> = ms
                .iter()
                .enumerate()
                .map(|(i, &m)| dummy_fit(10u64.pow(3 + i as u32), m))
                .collect();
            let w1 = vec![1.0; fits.len()];
            let w2 = vec![scale; fits.len()];
            let a = fit_m0_weighted(&fits, &w1).unwrap();
            let b = fit_m0_weighted(&fits, &w2).unwrap();
            prop_assert!((a.m0 - b.m0).abs() <= 1e-12 * a.m0.abs().max(1.0));
        }

        #[test]
        fn histogram_conservation(limit in 100u64..40_000) {
            // gap total equals the independently counted twins minus one
            let hists = census_histograms(limit, &[limit]);
            let twins = enumerate_twins(
                primes_up_to(SieveConfig::new(limit)).unwrap(),
                true,
            )
            .count() as u64;
            prop_assert_eq!(hists[0].total(), twins.saturating_sub(1));
            if twins > 1 {
                prop_assert_eq!(hists[0].pi2, twins);
            }
        }
    }
}
