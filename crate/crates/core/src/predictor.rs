//! Analytic model for the separation distribution and the onset of large
//! gaps between twins.
//!
//! At a census with `pi1` primes, separations follow the density
//! `P(s) = m exp(-m s)` with `m = m0 / ln(pi1)`. Demanding that a
//! separation `>= s_l` occurs about `f` times among `pi2` gaps gives the
//! threshold `s_l = ln(pi1) (ln(pi2) - ln f) / m0`; substituting the
//! classic `N / ln N` and `2 c2 N / (ln N)^2` count approximations turns
//! that into a curve in `N` alone, evaluable and (numerically)
//! invertible in either direction.

use serde::Serialize;
use thiserror::Error;

/// Default decay constant fitted across checkpoints.
pub const DEFAULT_M0: f64 = 1.321;

/// One-sigma uncertainty band on [`DEFAULT_M0`].
pub const M0_UNCERTAINTY: f64 = 0.008;

/// Hardy-Littlewood twin constant; the twin-count approximation uses
/// twice this value.
pub const TWIN_CONSTANT_C2: f64 = 0.6601618158;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("out of model range: {0}")]
    OutOfModelRange(String),
    #[error("no solution: {0}")]
    NoSolution(String),
}

/// Parameters of the analytic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Decay constant.
    pub m0: f64,
    /// Twin constant `c2`.
    pub c2: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { m0: DEFAULT_M0, c2: TWIN_CONSTANT_C2 }
    }
}

impl ModelParams {
    pub fn new(m0: f64, c2: f64) -> Result<Self, PredictorError> {
        if m0 <= 0.0 || !m0.is_finite() {
            return Err(PredictorError::Domain(format!("m0 must be positive, got {m0}")));
        }
        if c2 <= 0.0 || !c2.is_finite() {
            return Err(PredictorError::Domain(format!("c2 must be positive, got {c2}")));
        }
        Ok(ModelParams { m0, c2 })
    }

    /// The central value plus the low/high ends of the uncertainty band.
    pub fn m0_band(&self) -> [f64; 3] {
        [self.m0 - M0_UNCERTAINTY, self.m0, self.m0 + M0_UNCERTAINTY]
    }
}

/// Prime-count approximations at a real-valued bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountEstimates {
    /// `n / ln n`.
    pub pi1: f64,
    /// `2 c2 n / (ln n)^2`.
    pub pi2: f64,
}

/// A gap threshold, clamped at zero when the requested event count
/// exceeds the number of gaps available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapThreshold {
    pub s_l: f64,
    pub clamped: bool,
}

/// One evaluated point of the gap-onset curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPrediction {
    /// Census bound.
    pub n: f64,
    /// Risk factor of this curve.
    pub f: f64,
    /// Predicted threshold separation.
    pub s_l: f64,
    /// Risk band covered by the table this point belongs to.
    pub f_min: f64,
    pub f_max: f64,
}

/// Grid evaluation of the gap-onset curve, with per-point domain
/// failures collected rather than aborting the table.
#[derive(Debug, Clone)]
pub struct PredictionTable {
    pub rows: Vec<GapPrediction>,
    /// `(n, f, reason)` triples for points outside the model range.
    pub skipped: Vec<(f64, f64, String)>,
}

fn check_pi1(pi1: u64) -> Result<f64, PredictorError> {
    if pi1 < 3 {
        return Err(PredictorError::Domain(format!("pi1 must be >= 3, got {pi1}")));
    }
    Ok((pi1 as f64).ln())
}

/// Separation density `m exp(-m s)` with `m = m0 / ln(pi1)`.
///
/// Integrates to one over `[0, inf)`; its mode sits at zero for every
/// positive decay parameter.
pub fn density(s: f64, pi1: u64, params: &ModelParams) -> Result<f64, PredictorError> {
    if s < 0.0 || !s.is_finite() {
        return Err(PredictorError::Domain(format!("separation must be >= 0, got {s}")));
    }
    let log_pi1 = check_pi1(pi1)?;
    let m = params.m0 / log_pi1;
    Ok(m * (-m * s).exp())
}

/// Tail probability of a separation `>= s_l`: `exp(-m0 s_l / ln(pi1))`.
pub fn prob_ge(s_l: f64, pi1: u64, params: &ModelParams) -> Result<f64, PredictorError> {
    if s_l < 0.0 || !s_l.is_finite() {
        return Err(PredictorError::Domain(format!("threshold must be >= 0, got {s_l}")));
    }
    let log_pi1 = check_pi1(pi1)?;
    Ok((-params.m0 * s_l / log_pi1).exp())
}

/// Threshold separation expected to occur about `f` times among `pi2`
/// gaps: `ln(pi1) (ln(pi2) - ln f) / m0`.
///
/// Counts may be real-valued so that the analytic approximations of
/// [`approx_counts`] can be substituted directly. When `f >= pi2` the
/// threshold would be negative and is clamped to zero with a flag.
pub fn gap_threshold(
    pi1: f64,
    pi2: f64,
    f: f64,
    params: &ModelParams,
) -> Result<GapThreshold, PredictorError> {
    if pi1.is_nan() || pi1 < 3.0 {
        return Err(PredictorError::Domain(format!("pi1 must be >= 3, got {pi1}")));
    }
    if pi2.is_nan() || pi2 < 2.0 {
        return Err(PredictorError::Domain(format!("pi2 must be >= 2, got {pi2}")));
    }
    if f <= 0.0 || !f.is_finite() {
        return Err(PredictorError::Domain(format!("risk factor must be positive, got {f}")));
    }
    if f >= pi2 {
        return Ok(GapThreshold { s_l: 0.0, clamped: true });
    }
    let s_l = pi1.ln() * (pi2.ln() - f.ln()) / params.m0;
    Ok(GapThreshold { s_l, clamped: false })
}

/// Prime and twin count approximations `n / ln n` and `2 c2 n / (ln n)^2`.
pub fn approx_counts(n: f64, params: &ModelParams) -> Result<CountEstimates, PredictorError> {
    if n.is_nan() || n <= std::f64::consts::E {
        return Err(PredictorError::Domain(format!(
            "bound must exceed e so that ln(n) > 1, got {n}"
        )));
    }
    let log_n = n.ln();
    Ok(CountEstimates {
        pi1: n / log_n,
        pi2: 2.0 * params.c2 * n / (log_n * log_n),
    })
}

/// The gap-onset curve
/// `s_l(n, f) = [ln n - ln ln n] [ln n - 2 ln ln n + ln(2 c2) - ln f] / m0`,
/// i.e. [`gap_threshold`] with the count approximations substituted.
pub fn gap_curve(n: f64, f: f64, params: &ModelParams) -> Result<f64, PredictorError> {
    if f <= 0.0 || !f.is_finite() {
        return Err(PredictorError::Domain(format!("risk factor must be positive, got {f}")));
    }
    if n.is_nan() || n <= std::f64::consts::E {
        return Err(PredictorError::Domain(format!(
            "bound must exceed e so that ln(n) > 1, got {n}"
        )));
    }
    let log_n = n.ln();
    let log_log_n = log_n.ln();
    let first = log_n - log_log_n;
    let second = log_n - 2.0 * log_log_n + (2.0 * params.c2).ln() - f.ln();
    if first <= 0.0 || second <= 0.0 {
        return Err(PredictorError::OutOfModelRange(format!(
            "bracket factors must be positive at n={n}, f={f} (got {first:.6}, {second:.6})"
        )));
    }
    Ok(first * second / params.m0)
}

/// Smallest and largest bound tried when inverting the curve.
const INVERT_BRACKET: (f64, f64) = (1e2, 1e18);
const INVERT_MAX_ITER: usize = 200;

/// Numeric inverse of [`gap_curve`] in `n` at fixed `f`: the bound at
/// which the curve reaches `s_l`. Bisection on `ln n` over a bracket
/// where the curve is monotone increasing.
pub fn invert_gap_curve(s_l: f64, f: f64, params: &ModelParams) -> Result<f64, PredictorError> {
    if s_l <= 0.0 || !s_l.is_finite() {
        return Err(PredictorError::Domain(format!("threshold must be positive, got {s_l}")));
    }
    let (mut lo, hi) = (INVERT_BRACKET.0.ln(), INVERT_BRACKET.1.ln());

    // walk past the domain edge where the second bracket factor is
    // still negative (large f pushes the edge upward)
    let mut lo_val = gap_curve(lo.exp(), f, params);
    let mut guard = 0;
    while lo_val.is_err() && lo < hi {
        lo += 0.5;
        lo_val = gap_curve(lo.exp(), f, params);
        guard += 1;
        if guard > 200 {
            break;
        }
    }
    let lo_val = lo_val.map_err(|_| {
        PredictorError::NoSolution(format!("curve undefined on the whole bracket for f={f}"))
    })?;
    if s_l < lo_val {
        return Err(PredictorError::NoSolution(format!(
            "threshold {s_l} lies below the curve value {lo_val:.6} at the domain edge"
        )));
    }
    let hi_val = gap_curve(hi.exp(), f, params)?;
    if s_l > hi_val {
        return Err(PredictorError::NoSolution(format!(
            "threshold {s_l} exceeds the curve value at n = 1e18"
        )));
    }

    let (mut a, mut b) = (lo, hi);
    for _ in 0..INVERT_MAX_ITER {
        let mid = 0.5 * (a + b);
        let val = gap_curve(mid.exp(), f, params)?;
        if (val - s_l).abs() <= 1e-12 * s_l.max(1.0) {
            return Ok(mid.exp());
        }
        if val < s_l {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a) <= f64::EPSILON * b.abs() {
            break;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// The risk factor that places the gap-onset curve through `(n, s_l)`.
pub fn implied_risk_factor(n: f64, s_l: f64, params: &ModelParams) -> Result<f64, PredictorError> {
    if n.is_nan() || n <= std::f64::consts::E {
        return Err(PredictorError::Domain(format!(
            "bound must exceed e so that ln(n) > 1, got {n}"
        )));
    }
    if s_l < 0.0 || !s_l.is_finite() {
        return Err(PredictorError::Domain(format!("threshold must be >= 0, got {s_l}")));
    }
    let log_n = n.ln();
    let log_log_n = log_n.ln();
    let first = log_n - log_log_n;
    if first <= 0.0 {
        return Err(PredictorError::OutOfModelRange(format!(
            "ln(n) - ln(ln(n)) must be positive at n={n}"
        )));
    }
    let log_f = log_n - 2.0 * log_log_n + (2.0 * params.c2).ln() - s_l * params.m0 / first;
    Ok(log_f.exp())
}

/// Evaluate the curve over the Cartesian product of bounds and risk
/// factors. Rows are grouped by risk factor (one curve at a time) with
/// ascending bounds inside each curve; out-of-range points are skipped
/// and reported.
pub fn prediction_table(n_grid: &[f64], f_values: &[f64], params: &ModelParams) -> PredictionTable {
    let f_min = f_values.iter().copied().fold(f64::INFINITY, f64::min);
    let f_max = f_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rows = Vec::with_capacity(n_grid.len() * f_values.len());
    let mut skipped = Vec::new();
    for &f in f_values {
        for &n in n_grid {
            match gap_curve(n, f, params) {
                Ok(s_l) => rows.push(GapPrediction { n, f, s_l, f_min, f_max }),
                Err(e) => skipped.push((n, f, e.to_string())),
            }
        }
    }
    PredictionTable { rows, skipped }
}
