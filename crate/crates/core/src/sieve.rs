//! Segmented sieve of Eratosthenes producing a strictly ascending prime
//! stream with periodic position checkpoints.
//!
//! The sieve works on fixed, absolute windows of `segment_size` numbers
//! (segment `k` covers `[k*S + 1, (k+1)*S]`), so the emitted stream is
//! identical for every segment size and a run can be resumed from any
//! whole-segment boundary without re-emitting a prime. Odd numbers are
//! tracked one bit each; 2 is emitted specially.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

/// Upper bound accepted for a census limit.
pub const MAX_LIMIT: u64 = i64::MAX as u64;

/// Default numbers per segment (fits comfortably in L2/L3 cache as a
/// half-size odd bitmap).
pub const DEFAULT_SEGMENT_SIZE: u64 = 1 << 22;

/// Version tag written into checkpoint files.
pub const CHECKPOINT_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum SieveError {
    #[error("invalid sieve config: {0}")]
    InvalidConfig(String),
    #[error("invalid checkpoint: {0}")]
    InvalidCheckpoint(String),
    #[error("checkpoint file: {0}")]
    Io(#[from] std::io::Error),
}

/// Bounds and granularity of one sieve run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    /// Largest number examined (inclusive).
    pub limit: u64,
    /// Numbers per segment.
    pub segment_size: u64,
    /// Emit a [`PrimeCounter`] checkpoint after each segment in which
    /// the processed bound crosses a multiple of this value.
    pub checkpoint_every: u64,
}

impl SieveConfig {
    /// Config with default segment size and a checkpoint after every segment.
    pub fn new(limit: u64) -> Self {
        SieveConfig {
            limit,
            segment_size: DEFAULT_SEGMENT_SIZE,
            checkpoint_every: DEFAULT_SEGMENT_SIZE,
        }
    }

    /// Set the segment size; checkpoint cadence follows it (one
    /// checkpoint per segment) unless overridden afterwards.
    pub fn with_segment_size(mut self, segment_size: u64) -> Self {
        self.segment_size = segment_size;
        self.checkpoint_every = segment_size;
        self
    }

    pub fn validate(&self) -> Result<(), SieveError> {
        if self.limit > MAX_LIMIT {
            return Err(SieveError::InvalidConfig(format!(
                "limit {} exceeds maximum {}",
                self.limit, MAX_LIMIT
            )));
        }
        if self.segment_size < 2 {
            return Err(SieveError::InvalidConfig(format!(
                "segment_size must be >= 2, got {}",
                self.segment_size
            )));
        }
        if self.checkpoint_every == 0 {
            return Err(SieveError::InvalidConfig(
                "checkpoint_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Position of a sieve run: everything up to `n_processed` has been
/// examined and `pi1` primes were found there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct PrimeCounter {
    /// Largest integer fully sieved.
    pub n_processed: u64,
    /// Count of primes `<= n_processed`.
    pub pi1: u64,
}

/// One element of the sieve output stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SieveEvent {
    /// The next prime, in strictly ascending order.
    Prime(u64),
    /// A whole-segment boundary suitable for checkpoint/resume.
    Checkpoint(PrimeCounter),
}

/// Streaming segmented sieve. Iterates [`SieveEvent`]s.
pub struct SegmentedSieve {
    limit: u64,
    segment_size: u64,
    checkpoint_every: u64,
    /// Odd base primes up to sqrt(limit).
    base: Vec<u64>,
    /// Composite bitmap for odd numbers in the current segment.
    bits: Vec<u64>,
    /// First number of the current segment.
    seg_low: u64,
    /// Last number of the current segment (inclusive).
    seg_high: u64,
    /// First odd number of the current segment.
    first_odd: u64,
    /// Odd slots in the current segment.
    odd_count: usize,
    /// Next odd slot to inspect.
    scan: usize,
    n_processed: u64,
    pi1: u64,
    emit_two: bool,
    pending: Option<PrimeCounter>,
    in_segment: bool,
    done: bool,
}

impl SegmentedSieve {
    /// Fresh sieve over `[2, config.limit]`.
    pub fn new(config: SieveConfig) -> Result<Self, SieveError> {
        config.validate()?;
        Self::start(config, PrimeCounter { n_processed: 0, pi1: 0 })
    }

    /// Resume from a previously emitted checkpoint. The checkpoint must
    /// lie on a whole-segment boundary of the same `segment_size`.
    pub fn resume(config: SieveConfig, from: PrimeCounter) -> Result<Self, SieveError> {
        config.validate()?;
        if from.n_processed > config.limit {
            return Err(SieveError::InvalidCheckpoint(format!(
                "checkpoint position {} is beyond limit {}",
                from.n_processed, config.limit
            )));
        }
        if !from.n_processed.is_multiple_of(config.segment_size) && from.n_processed != config.limit {
            return Err(SieveError::InvalidCheckpoint(format!(
                "checkpoint position {} is not a multiple of segment_size {}",
                from.n_processed, config.segment_size
            )));
        }
        if from.pi1 > from.n_processed {
            return Err(SieveError::InvalidCheckpoint(format!(
                "pi1 {} exceeds n_processed {}",
                from.pi1, from.n_processed
            )));
        }
        Self::start(config, from)
    }

    fn start(config: SieveConfig, from: PrimeCounter) -> Result<Self, SieveError> {
        let base = if config.limit >= 9 {
            odd_primes_up_to(isqrt(config.limit))
        } else {
            Vec::new()
        };
        Ok(SegmentedSieve {
            limit: config.limit,
            segment_size: config.segment_size,
            checkpoint_every: config.checkpoint_every,
            base,
            bits: Vec::new(),
            seg_low: 0,
            seg_high: from.n_processed,
            first_odd: 0,
            odd_count: 0,
            scan: 0,
            n_processed: from.n_processed,
            pi1: from.pi1,
            emit_two: from.n_processed < 2 && config.limit >= 2,
            pending: None,
            in_segment: false,
            done: from.n_processed >= config.limit || config.limit < 2,
        })
    }

    /// Current position (valid at whole-segment boundaries).
    pub fn counter(&self) -> PrimeCounter {
        PrimeCounter { n_processed: self.n_processed, pi1: self.pi1 }
    }

    fn load_next_segment(&mut self) {
        let low = self.seg_high + 1;
        let high = (self.seg_high + self.segment_size).min(self.limit);
        self.seg_low = low;
        self.seg_high = high;
        let first_odd = if low.is_multiple_of(2) { low + 1 } else { low };
        self.first_odd = first_odd;
        self.odd_count = if first_odd > high {
            0
        } else {
            ((high - first_odd) / 2 + 1) as usize
        };
        self.scan = 0;

        let words = self.odd_count.div_ceil(64);
        self.bits.clear();
        self.bits.resize(words, 0);

        // 1 is not prime
        if first_odd == 1 {
            self.bits[0] |= 1;
        }

        for &p in &self.base {
            let p2 = p * p;
            if p2 > high {
                break;
            }
            let mut m = p2.max(low.div_ceil(p) * p);
            if m % 2 == 0 {
                m += p;
            }
            while m <= high {
                let idx = ((m - first_odd) / 2) as usize;
                self.bits[idx / 64] |= 1 << (idx % 64);
                m += 2 * p;
            }
        }
        self.in_segment = true;
    }

    fn finish_segment(&mut self) {
        let prev = self.n_processed;
        self.n_processed = self.seg_high;
        self.in_segment = false;
        let crossed = self.n_processed / self.checkpoint_every > prev / self.checkpoint_every;
        if crossed || self.n_processed >= self.limit {
            self.pending = Some(self.counter());
        }
        if self.n_processed >= self.limit {
            self.done = true;
        }
    }
}

impl Iterator for SegmentedSieve {
    type Item = SieveEvent;

    fn next(&mut self) -> Option<SieveEvent> {
        loop {
            if let Some(c) = self.pending.take() {
                return Some(SieveEvent::Checkpoint(c));
            }
            if self.emit_two {
                self.emit_two = false;
                self.pi1 += 1;
                return Some(SieveEvent::Prime(2));
            }
            if self.done {
                return None;
            }
            if !self.in_segment {
                self.load_next_segment();
            }
            while self.scan < self.odd_count {
                let idx = self.scan;
                self.scan += 1;
                if self.bits[idx / 64] & (1 << (idx % 64)) == 0 {
                    self.pi1 += 1;
                    return Some(SieveEvent::Prime(self.first_odd + 2 * idx as u64));
                }
            }
            self.finish_segment();
        }
    }
}

/// Just the primes of a [`SegmentedSieve`] event stream.
pub struct Primes {
    inner: SegmentedSieve,
}

impl Iterator for Primes {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            match self.inner.next()? {
                SieveEvent::Prime(p) => return Some(p),
                SieveEvent::Checkpoint(_) => {}
            }
        }
    }
}

/// All primes `<= config.limit` in strictly ascending order.
///
/// A limit below 2 yields an empty stream.
pub fn primes_up_to(config: SieveConfig) -> Result<Primes, SieveError> {
    Ok(Primes { inner: SegmentedSieve::new(config)? })
}

/// Count of primes `<= limit`, consistent with [`primes_up_to`].
pub fn prime_count(limit: u64) -> u64 {
    match primes_up_to(SieveConfig::new(limit)) {
        Ok(primes) => primes.count() as u64,
        Err(_) => 0,
    }
}

/// Trial-division primality check, independent of the segmented sieve.
///
/// Intended for tests and small-range verification; cost is O(sqrt n).
pub fn is_prime_oracle(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d <= n / d {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Floor of the square root.
fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r > 0 && r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

/// Simple in-memory sieve of the odd primes in `[3, bound]`.
fn odd_primes_up_to(bound: u64) -> Vec<u64> {
    if bound < 3 {
        return Vec::new();
    }
    let slots = ((bound - 3) / 2 + 1) as usize; // index i <-> 3 + 2i
    let mut composite = vec![false; slots];
    let mut i = 0usize;
    while {
        let p = 3 + 2 * i as u64;
        p * p <= bound
    } {
        if !composite[i] {
            let p = 3 + 2 * i as u64;
            let mut m = p * p;
            while m <= bound {
                composite[((m - 3) / 2) as usize] = true;
                m += 2 * p;
            }
        }
        i += 1;
    }
    composite
        .iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| 3 + 2 * i as u64)
        .collect()
}

/// Write a position checkpoint as a line-oriented `key=value` record.
pub fn write_checkpoint(path: &Path, counter: &PrimeCounter) -> Result<(), SieveError> {
    let mut body = String::new();
    let _ = writeln!(body, "format_version={}", CHECKPOINT_FORMAT_VERSION);
    let _ = writeln!(body, "n_processed={}", counter.n_processed);
    let _ = writeln!(body, "pi1={}", counter.pi1);
    write_atomic(path, body.as_bytes())?;
    Ok(())
}

/// Read a checkpoint written by [`write_checkpoint`] (or any superset
/// record carrying the same keys).
pub fn read_checkpoint(path: &Path) -> Result<PrimeCounter, SieveError> {
    let text = fs::read_to_string(path)?;
    let fields = parse_key_values(&text)?;
    let version = require_u64(&fields, "format_version")?;
    if version != CHECKPOINT_FORMAT_VERSION {
        return Err(SieveError::InvalidCheckpoint(format!(
            "unsupported format_version {version}"
        )));
    }
    let counter = PrimeCounter {
        n_processed: require_u64(&fields, "n_processed")?,
        pi1: require_u64(&fields, "pi1")?,
    };
    if counter.pi1 > counter.n_processed {
        return Err(SieveError::InvalidCheckpoint(format!(
            "pi1 {} exceeds n_processed {}",
            counter.pi1, counter.n_processed
        )));
    }
    Ok(counter)
}

pub(crate) fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, SieveError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                return Err(SieveError::InvalidCheckpoint(format!(
                    "line {}: expected key=value, got {:?}",
                    lineno + 1,
                    line
                )))
            }
        }
    }
    Ok(out)
}

pub(crate) fn require_u64(fields: &[(String, String)], key: &str) -> Result<u64, SieveError> {
    let raw = fields
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| SieveError::InvalidCheckpoint(format!("missing key {key}")))?;
    raw.parse::<u64>().map_err(|_| {
        SieveError::InvalidCheckpoint(format!("key {key}: invalid integer {raw:?}"))
    })
}

/// Write `bytes` to `path` via a temp file + rename in the same directory.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn collect_primes(limit: u64, segment_size: u64) -> Vec<u64> {
        primes_up_to(SieveConfig::new(limit).with_segment_size(segment_size))
            .unwrap()
            .collect()
    }

    #[test]
    fn small_limits() {
        assert_eq!(collect_primes(10, 1 << 22), vec![2, 3, 5, 7]);
        assert_eq!(collect_primes(1, 1 << 22), Vec::<u64>::new());
        assert_eq!(collect_primes(0, 1 << 22), Vec::<u64>::new());
        assert_eq!(collect_primes(2, 1 << 22), vec![2]);
        assert_eq!(collect_primes(3, 1 << 22), vec![2, 3]);
        assert_eq!(collect_primes(100, 1 << 22).len(), 25);
    }

    #[test]
    fn prime_counts() {
        assert_eq!(prime_count(0), 0);
        assert_eq!(prime_count(1), 0);
        assert_eq!(prime_count(2), 1);
        assert_eq!(prime_count(10), 4);
        assert_eq!(prime_count(1_000), 168);
        assert_eq!(prime_count(100_000), 9_592);
    }

    #[test]
    fn oracle_basics() {
        assert!(!is_prime_oracle(0));
        assert!(!is_prime_oracle(1));
        assert!(is_prime_oracle(2));
        assert!(is_prime_oracle(3));
        assert!(!is_prime_oracle(4));
        assert!(is_prime_oracle(999_983));
        assert!(!is_prime_oracle(999_984));
    }

    #[test]
    fn oracle_equivalence_to_1e5() {
        let mut primes = collect_primes(100_000, 1 << 14).into_iter().peekable();
        for n in 0..=100_000u64 {
            let in_stream = primes.peek() == Some(&n);
            if in_stream {
                primes.next();
            }
            assert_eq!(in_stream, is_prime_oracle(n), "disagreement at n={n}");
        }
        assert!(primes.next().is_none());
    }

    #[test]
    fn segment_size_independence() {
        let reference = collect_primes(50_000, 1 << 22);
        for seg in [2u64, 3, 7, 64, 1_000, 4_096, 49_999, 50_000, 1 << 20] {
            assert_eq!(collect_primes(50_000, seg), reference, "segment_size={seg}");
        }
    }

    #[test]
    fn checkpoints_monotone_and_consistent() {
        let sieve = SegmentedSieve::new(
            SieveConfig::new(100_000)
                .with_segment_size(4_096),
        )
        .unwrap();
        let mut seen = 0u64;
        let mut last: Option<PrimeCounter> = None;
        for event in sieve {
            match event {
                SieveEvent::Prime(p) => {
                    assert!(is_prime_oracle(p));
                    seen += 1;
                }
                SieveEvent::Checkpoint(c) => {
                    if let Some(prev) = last {
                        assert!(c.n_processed > prev.n_processed);
                        assert!(c.pi1 >= prev.pi1);
                    }
                    assert_eq!(c.pi1, seen, "pi1 disagrees with emitted primes");
                    last = Some(c);
                }
            }
        }
        let last = last.expect("final checkpoint");
        assert_eq!(last.n_processed, 100_000);
        assert_eq!(last.pi1, 9_592);
    }

    #[test]
    fn resume_matches_uninterrupted() {
        let config = SieveConfig::new(30_000).with_segment_size(1_024);
        let full: Vec<u64> = primes_up_to(config).unwrap().collect();

        // stop at an arbitrary checkpoint, then resume
        let mut head = Vec::new();
        let mut resume_at = None;
        for event in SegmentedSieve::new(config).unwrap() {
            match event {
                SieveEvent::Prime(p) => head.push(p),
                SieveEvent::Checkpoint(c) => {
                    if c.n_processed >= 10_000 {
                        resume_at = Some(c);
                        break;
                    }
                }
            }
        }
        let resume_at = resume_at.unwrap();
        let mut tail = Vec::new();
        for event in SegmentedSieve::resume(config, resume_at).unwrap() {
            if let SieveEvent::Prime(p) = event {
                tail.push(p);
            }
        }
        head.extend(tail);
        assert_eq!(head, full);
    }

    #[test]
    fn resume_rejects_misaligned_position() {
        let config = SieveConfig::new(10_000).with_segment_size(1_024);
        let bad = PrimeCounter { n_processed: 1_000, pi1: 168 };
        assert!(matches!(
            SegmentedSieve::resume(config, bad),
            Err(SieveError::InvalidCheckpoint(_))
        ));
    }

    #[test]
    fn checkpoint_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sieve.checkpoint");
        let counter = PrimeCounter { n_processed: 8_192, pi1: 1_028 };
        write_checkpoint(&path, &counter).unwrap();
        assert_eq!(read_checkpoint(&path).unwrap(), counter);
    }

    #[test]
    fn checkpoint_file_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sieve.checkpoint");
        std::fs::write(&path, "format_version=1\nn_processed=ten\npi1=4\n").unwrap();
        assert!(read_checkpoint(&path).is_err());
        std::fs::write(&path, "format_version=1\npi1=4\n").unwrap();
        assert!(read_checkpoint(&path).is_err());
        std::fs::write(&path, "format_version=99\nn_processed=10\npi1=4\n").unwrap();
        assert!(read_checkpoint(&path).is_err());
        std::fs::write(&path, "format_version=1\nn_processed=3\npi1=4\n").unwrap();
        assert!(read_checkpoint(&path).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SieveConfig::new(100).with_segment_size(1).validate().is_err());
        let mut c = SieveConfig::new(100);
        c.checkpoint_every = 0;
        assert!(c.validate().is_err());
        assert!(SieveConfig::new(100).validate().is_ok());
    }

    #[test]
    fn isqrt_edges() {
        assert_eq!(isqrt(0), 0);
        assert_eq!(isqrt(1), 1);
        assert_eq!(isqrt(3), 1);
        assert_eq!(isqrt(4), 2);
        assert_eq!(isqrt(999_999), 999);
        assert_eq!(isqrt(1_000_000), 1_000);
        assert_eq!(isqrt(u64::MAX), (1u64 << 32) - 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn stream_independent_of_segment_size(
            limit in 2u64..20_000,
            seg in 2u64..5_000,
        ) {
            prop_assert_eq!(collect_primes(limit, seg), collect_primes(limit, 1 << 22));
        }

        #[test]
        fn oracle_agrees_on_random_values(n in 0u64..2_000_000) {
            let by_sieve = collect_primes(n, 1 << 18).last().copied() == Some(n);
            prop_assert_eq!(by_sieve, is_prime_oracle(n));
        }
    }
}
