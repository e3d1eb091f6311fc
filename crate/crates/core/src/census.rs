//! End-to-end census: drive the sieve event stream through twin
//! enumeration and separation tracking, snapshot histograms at a grid of
//! bounds, record gap maxima, and persist everything as deterministic
//! CSV artifacts with whole-segment checkpoint/resume.
//!
//! All streaming state is saved after whole segments only, so a resumed
//! run re-processes nothing and produces byte-identical artifacts.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::sieve::{
    self, PrimeCounter, SegmentedSieve, SieveConfig, SieveError, SieveEvent,
    CHECKPOINT_FORMAT_VERSION, DEFAULT_SEGMENT_SIZE,
};
use crate::stats::SeparationHistogram;
use crate::twins::{RecordGap, RecordTracker, SeparationTracker, Twin, TwinFilter};

/// File holding the resumable census state (a superset of the sieve
/// checkpoint record).
pub const STATE_FILE: &str = "census.checkpoint";
/// Lock file marking the directory as owned by a running census.
pub const LOCK_FILE: &str = "census.lock";
/// Record-gap artifact.
pub const RECORD_GAPS_FILE: &str = "record_gaps.csv";
/// Per-checkpoint summary artifact.
pub const SUMMARY_FILE: &str = "summary.csv";
/// Optional full separation-stream artifact.
pub const SEPARATIONS_FILE: &str = "separations.csv";

#[derive(Debug, Error)]
pub enum CensusError {
    #[error("invalid census config: {0}")]
    Config(String),
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error("census io: {0}")]
    Io(#[from] std::io::Error),
    #[error("output directory is locked by another census (remove {0} if stale)")]
    Locked(PathBuf),
    #[error("census checkpoint: {0}")]
    Checkpoint(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// What to census and where to put the artifacts.
#[derive(Debug, Clone)]
pub struct CensusConfig {
    /// Census bound (inclusive).
    pub limit: u64,
    /// Sieve segment size.
    pub segment_size: u64,
    /// Persist resumable state each time this many numbers have been
    /// processed (rounded up to whole segments).
    pub checkpoint_every: u64,
    /// Snapshot bounds; the limit itself is always included.
    pub snapshots: Vec<u64>,
    /// Drop the overlapping pair (3, 5) so the twin sequence starts at
    /// (5, 7) and no prime belongs to two twins.
    pub discard_anomalous: bool,
    /// Also export the full separation stream (one row per gap).
    pub export_separations: bool,
    /// Artifact directory.
    pub out_dir: PathBuf,
}

impl CensusConfig {
    pub fn new(limit: u64, out_dir: impl Into<PathBuf>) -> Self {
        CensusConfig {
            limit,
            segment_size: DEFAULT_SEGMENT_SIZE,
            checkpoint_every: DEFAULT_SEGMENT_SIZE,
            snapshots: Self::default_snapshot_grid(limit),
            discard_anomalous: true,
            export_separations: false,
            out_dir: out_dir.into(),
        }
    }

    /// Decade bounds starting at 1e5, clipped to the limit. The limit
    /// itself is always snapshotted and need not be listed.
    pub fn default_snapshot_grid(limit: u64) -> Vec<u64> {
        let mut grid = Vec::new();
        let mut bound = 100_000u64;
        while bound <= limit {
            grid.push(bound);
            match bound.checked_mul(10) {
                Some(next) => bound = next,
                None => break,
            }
        }
        grid
    }

    /// Sorted, deduplicated snapshot bounds within the limit, with the
    /// limit appended.
    fn normalized_snapshots(&self) -> Vec<u64> {
        let mut bounds: Vec<u64> = self
            .snapshots
            .iter()
            .copied()
            .filter(|&b| b <= self.limit)
            .collect();
        bounds.push(self.limit);
        bounds.sort_unstable();
        bounds.dedup();
        bounds
    }

    fn sieve_config(&self) -> SieveConfig {
        SieveConfig {
            limit: self.limit,
            segment_size: self.segment_size,
            checkpoint_every: self.checkpoint_every,
        }
    }

    fn validate(&self) -> Result<(), CensusError> {
        if self.limit < 2 {
            return Err(CensusError::Config(format!(
                "census limit must be >= 2, got {}",
                self.limit
            )));
        }
        self.sieve_config().validate()?;
        Ok(())
    }
}

/// Histogram snapshot plus the bookkeeping that proves every prime was
/// classified exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusSnapshot {
    pub hist: SeparationHistogram,
    /// Singleton primes before the first twin.
    pub head_singletons: u64,
    /// Singleton primes after the last twin's upper member.
    pub tail_singletons: u64,
    /// Sum of all separations in the window (singletons between twins).
    pub sum_s: u64,
}

impl CensusSnapshot {
    /// Every prime is a twin member or exactly one kind of singleton.
    pub fn classification_balance(&self) -> (u64, u64) {
        let classified = self.head_singletons
            + self.sum_s
            + self.tail_singletons
            + 2 * self.hist.pi2;
        (classified, self.hist.pi1)
    }
}

/// Everything a finished census produced.
#[derive(Debug, Clone)]
pub struct CensusResult {
    pub snapshots: Vec<CensusSnapshot>,
    pub records: Vec<RecordGap>,
    pub counter: PrimeCounter,
}

/// Outcome of an interruptible run slice.
#[derive(Debug)]
pub enum CensusOutcome {
    Complete(CensusResult),
    /// State saved; more segments remain.
    Paused(PrimeCounter),
}

/// Reals in artifacts carry 12 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{:.11e}", x)
}

fn fmt_u64_opt(v: Option<u64>) -> String {
    v.map_or_else(|| "0".to_string(), |x| x.to_string())
}

/// Path of the histogram artifact for one snapshot bound.
pub fn histogram_path(dir: &Path, bound: u64) -> PathBuf {
    dir.join(format!("histogram_{bound}.csv"))
}

struct SeparationWriter {
    file: BufWriter<File>,
    rows: u64,
    bytes: u64,
}

/// Owns `census.lock` for the lifetime of a runner.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self, CensusError> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CensusError::Locked(path))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Streaming census over one output directory.
pub struct CensusRunner {
    config: CensusConfig,
    bounds: Vec<u64>,
    sieve: SegmentedSieve,
    filter: TwinFilter,
    tracker: SeparationTracker,
    records: RecordTracker,
    counts: Vec<u64>,
    sum_s: u64,
    pi2: u64,
    first_twin: Option<Twin>,
    snapshots: Vec<CensusSnapshot>,
    next_bound: usize,
    sep: Option<SeparationWriter>,
    complete: bool,
    _lock: DirLock,
}

impl CensusRunner {
    /// Start a fresh census; any previous state in the directory is
    /// superseded.
    pub fn create(config: CensusConfig) -> Result<Self, CensusError> {
        config.validate()?;
        fs::create_dir_all(&config.out_dir)?;
        let lock = DirLock::acquire(&config.out_dir)?;
        let bounds = config.normalized_snapshots();
        let sieve = SegmentedSieve::new(config.sieve_config())?;
        let discard = config.discard_anomalous;
        let sep = if config.export_separations {
            Some(Self::fresh_separation_writer(&config.out_dir)?)
        } else {
            None
        };
        Ok(CensusRunner {
            config,
            bounds,
            sieve,
            filter: TwinFilter::new(discard),
            tracker: SeparationTracker::new(),
            records: RecordTracker::new(),
            counts: Vec::new(),
            sum_s: 0,
            pi2: 0,
            first_twin: None,
            snapshots: Vec::new(),
            next_bound: 0,
            sep,
            complete: false,
            _lock: lock,
        })
    }

    /// Resume from the state file written by a previous run with an
    /// identical configuration.
    pub fn resume(config: CensusConfig) -> Result<Self, CensusError> {
        config.validate()?;
        fs::create_dir_all(&config.out_dir)?;
        let state_path = config.out_dir.join(STATE_FILE);
        if !state_path.exists() {
            return Err(CensusError::Checkpoint(format!(
                "no state file at {}",
                state_path.display()
            )));
        }
        let lock = DirLock::acquire(&config.out_dir)?;
        let state = CensusState::read(&state_path)?;
        state.check_compatible(&config)?;

        let bounds = config.normalized_snapshots();
        let sieve = SegmentedSieve::resume(config.sieve_config(), state.counter)?;
        let sep = if config.export_separations {
            Some(Self::reopened_separation_writer(
                &config.out_dir,
                state.sep_rows,
                state.sep_bytes,
            )?)
        } else {
            None
        };
        let next_bound = state.snapshots.len();
        if next_bound > bounds.len() {
            return Err(CensusError::Checkpoint(
                "state has more snapshots than the configured grid".into(),
            ));
        }
        Ok(CensusRunner {
            filter: TwinFilter::restore(
                config.discard_anomalous,
                state.prev_prime,
                state.counter.pi1,
                state.next_twin_index,
            ),
            tracker: SeparationTracker::restore(state.prev_twin),
            records: RecordTracker::restore(state.records),
            counts: state.counts,
            sum_s: state.sum_s,
            pi2: state.pi2,
            first_twin: state.first_twin,
            snapshots: state.snapshots,
            next_bound,
            sep,
            complete: state.complete,
            config,
            bounds,
            sieve,
            _lock: lock,
        })
    }

    /// Resume when a state file exists, otherwise start fresh.
    pub fn resume_or_create(config: CensusConfig) -> Result<Self, CensusError> {
        if config.out_dir.join(STATE_FILE).exists() {
            Self::resume(config)
        } else {
            Self::create(config)
        }
    }

    fn fresh_separation_writer(dir: &Path) -> Result<SeparationWriter, CensusError> {
        let path = dir.join(SEPARATIONS_FILE);
        let mut file = BufWriter::new(File::create(path)?);
        let header = "left_p,right_p,s\n";
        file.write_all(header.as_bytes())?;
        Ok(SeparationWriter {
            file,
            rows: 0,
            bytes: header.len() as u64,
        })
    }

    fn reopened_separation_writer(
        dir: &Path,
        rows: u64,
        bytes: u64,
    ) -> Result<SeparationWriter, CensusError> {
        let path = dir.join(SEPARATIONS_FILE);
        if !path.exists() {
            return Err(CensusError::Checkpoint(format!(
                "separations export enabled but {} is missing",
                path.display()
            )));
        }
        let file = OpenOptions::new().read(true).write(true).open(&path)?;
        // drop any rows written after the last saved state
        file.set_len(bytes)?;
        let mut file = BufWriter::new(file);
        file.seek(SeekFrom::Start(bytes))?;
        Ok(SeparationWriter { file, rows, bytes })
    }

    /// Run to completion.
    pub fn run(&mut self) -> Result<CensusResult, CensusError> {
        match self.run_until(None)? {
            CensusOutcome::Complete(result) => Ok(result),
            CensusOutcome::Paused(_) => unreachable!("unbounded run cannot pause"),
        }
    }

    /// Process the stream, pausing after `stop_after` more checkpoint
    /// saves if given. A paused census resumes via [`CensusRunner::resume`].
    pub fn run_until(
        &mut self,
        stop_after: Option<u64>,
    ) -> Result<CensusOutcome, CensusError> {
        if self.complete {
            // idempotent completion (e.g. re-running after the final
            // state save): re-emit the final artifacts
            return Ok(CensusOutcome::Complete(self.finish()?));
        }
        let mut saves = 0u64;
        while let Some(event) = self.sieve.next() {
            match event {
                SieveEvent::Prime(p) => self.observe_prime(p)?,
                SieveEvent::Checkpoint(counter) => {
                    if counter.pi1 != self.filter.primes_seen() {
                        return Err(CensusError::Internal(format!(
                            "sieve counted {} primes but the census saw {}",
                            counter.pi1,
                            self.filter.primes_seen()
                        )));
                    }
                    self.save_state(counter, false)?;
                    saves += 1;
                    if stop_after.is_some_and(|n| saves >= n)
                        && counter.n_processed < self.config.limit
                    {
                        return Ok(CensusOutcome::Paused(counter));
                    }
                }
            }
        }
        Ok(CensusOutcome::Complete(self.finish()?))
    }

    fn observe_prime(&mut self, p: u64) -> Result<(), CensusError> {
        while self.next_bound < self.bounds.len() && p > self.bounds[self.next_bound] {
            let bound = self.bounds[self.next_bound];
            self.finalize_snapshot(bound)?;
        }
        let Some(twin) = self.filter.push(p) else {
            return Ok(());
        };
        self.pi2 += 1;
        if self.first_twin.is_none() {
            self.first_twin = Some(twin);
        }
        let Some(rec) = self.tracker.push(twin) else {
            return Ok(());
        };
        let s = rec.s as usize;
        if self.counts.len() <= s {
            self.counts.resize(s + 1, 0);
        }
        self.counts[s] += 1;
        self.sum_s += rec.s;
        self.records.observe(&rec);
        if let Some(sep) = self.sep.as_mut() {
            let row = format!("{},{},{}\n", rec.left.p, rec.right.p, rec.s);
            sep.file.write_all(row.as_bytes())?;
            sep.rows += 1;
            sep.bytes += row.len() as u64;
        }
        Ok(())
    }

    /// Capture the state of the window `[2, bound]` and write its
    /// histogram artifact. Called once all primes `<= bound` have been
    /// seen and none beyond it.
    fn finalize_snapshot(&mut self, bound: u64) -> Result<(), CensusError> {
        let pi1 = self.filter.primes_seen();
        let hist = SeparationHistogram::new(self.counts.clone(), bound, pi1, self.pi2);
        let head_singletons = match self.first_twin {
            Some(t) => t.pi1_at_p - 1,
            None => pi1,
        };
        let tail_singletons = match self.tracker.prev_twin() {
            Some(t) => pi1 - (t.pi1_at_p + 1),
            None => 0,
        };
        let snapshot = CensusSnapshot {
            hist,
            head_singletons,
            tail_singletons,
            sum_s: self.sum_s,
        };
        write_histogram_csv(
            &histogram_path(&self.config.out_dir, bound),
            &snapshot.hist,
        )?;
        self.snapshots.push(snapshot);
        self.next_bound += 1;
        Ok(())
    }

    fn finish(&mut self) -> Result<CensusResult, CensusError> {
        while self.next_bound < self.bounds.len() {
            let bound = self.bounds[self.next_bound];
            self.finalize_snapshot(bound)?;
        }
        self.complete = true;
        let counter = self.sieve.counter();
        self.save_state(counter, true)?;
        write_record_gaps_csv(
            &self.config.out_dir.join(RECORD_GAPS_FILE),
            self.records.records(),
        )?;
        write_summary_csv(&self.config.out_dir.join(SUMMARY_FILE), &self.snapshots)?;
        Ok(CensusResult {
            snapshots: self.snapshots.clone(),
            records: self.records.records().to_vec(),
            counter,
        })
    }

    fn save_state(&mut self, counter: PrimeCounter, complete: bool) -> Result<(), CensusError> {
        if let Some(sep) = self.sep.as_mut() {
            sep.file.flush()?;
        }
        let state = CensusState {
            counter,
            prev_prime: self.filter.prev_prime(),
            next_twin_index: self.filter.next_index(),
            prev_twin: self.tracker.prev_twin(),
            first_twin: self.first_twin,
            counts: self.counts.clone(),
            sum_s: self.sum_s,
            pi2: self.pi2,
            records: self.records.records().to_vec(),
            snapshots: self.snapshots.clone(),
            sep_rows: self.sep.as_ref().map_or(0, |s| s.rows),
            sep_bytes: self.sep.as_ref().map_or(0, |s| s.bytes),
            complete,
        };
        state.write(&self.config.out_dir.join(STATE_FILE), &self.config)
    }
}

// ---------------------------------------------------------------------
// persistent state
// ---------------------------------------------------------------------

struct CensusState {
    counter: PrimeCounter,
    prev_prime: Option<u64>,
    next_twin_index: u64,
    prev_twin: Option<Twin>,
    first_twin: Option<Twin>,
    counts: Vec<u64>,
    sum_s: u64,
    pi2: u64,
    records: Vec<RecordGap>,
    snapshots: Vec<CensusSnapshot>,
    sep_rows: u64,
    sep_bytes: u64,
    complete: bool,
}

fn fmt_twin(t: &Twin) -> String {
    format!("{}:{}:{}", t.p, t.index, t.pi1_at_p)
}

fn parse_twin(raw: &str) -> Result<Twin, CensusError> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() != 3 {
        return Err(CensusError::Checkpoint(format!("malformed twin {raw:?}")));
    }
    let nums: Result<Vec<u64>, _> = parts.iter().map(|p| p.parse::<u64>()).collect();
    let nums =
        nums.map_err(|_| CensusError::Checkpoint(format!("malformed twin {raw:?}")))?;
    Ok(Twin { p: nums[0], index: nums[1], pi1_at_p: nums[2] })
}

fn fmt_counts(counts: &[u64]) -> String {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(s, c)| format!("{s}:{c}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_counts(raw: &str) -> Result<Vec<u64>, CensusError> {
    let mut counts = Vec::new();
    if raw.is_empty() {
        return Ok(counts);
    }
    for pair in raw.split(',') {
        let (s, c) = pair
            .split_once(':')
            .ok_or_else(|| CensusError::Checkpoint(format!("malformed counts {pair:?}")))?;
        let s: usize = s
            .parse()
            .map_err(|_| CensusError::Checkpoint(format!("malformed counts {pair:?}")))?;
        let c: u64 = c
            .parse()
            .map_err(|_| CensusError::Checkpoint(format!("malformed counts {pair:?}")))?;
        if counts.len() <= s {
            counts.resize(s + 1, 0);
        }
        counts[s] = c;
    }
    Ok(counts)
}

impl CensusState {
    fn write(&self, path: &Path, config: &CensusConfig) -> Result<(), CensusError> {
        let mut body = String::new();
        let w = &mut body;
        let _ = writeln!(w, "format_version={CHECKPOINT_FORMAT_VERSION}");
        let _ = writeln!(w, "n_processed={}", self.counter.n_processed);
        let _ = writeln!(w, "pi1={}", self.counter.pi1);
        let _ = writeln!(w, "limit={}", config.limit);
        let _ = writeln!(w, "segment_size={}", config.segment_size);
        let _ = writeln!(w, "discard_anomalous={}", config.discard_anomalous as u8);
        let _ = writeln!(w, "export_separations={}", config.export_separations as u8);
        let grid: Vec<String> = config
            .normalized_snapshots()
            .iter()
            .map(|b| b.to_string())
            .collect();
        let _ = writeln!(w, "snapshot_grid={}", grid.join(","));
        if let Some(p) = self.prev_prime {
            let _ = writeln!(w, "prev_prime={p}");
        }
        let _ = writeln!(w, "next_twin_index={}", self.next_twin_index);
        let _ = writeln!(w, "pi2={}", self.pi2);
        let _ = writeln!(w, "sum_s={}", self.sum_s);
        if let Some(t) = &self.prev_twin {
            let _ = writeln!(w, "prev_twin={}", fmt_twin(t));
        }
        if let Some(t) = &self.first_twin {
            let _ = writeln!(w, "first_twin={}", fmt_twin(t));
        }
        let _ = writeln!(w, "counts={}", fmt_counts(&self.counts));
        for r in &self.records {
            let _ = writeln!(w, "record={}:{}:{}", r.s, r.onset_n, r.twin_index);
        }
        for snap in &self.snapshots {
            let _ = writeln!(
                w,
                "snapshot={}|{}|{}|{}|{}|{}|{}",
                snap.hist.n_limit,
                snap.hist.pi1,
                snap.hist.pi2,
                snap.head_singletons,
                snap.tail_singletons,
                snap.sum_s,
                fmt_counts(&dense_counts(&snap.hist)),
            );
        }
        let _ = writeln!(w, "sep_rows={}", self.sep_rows);
        let _ = writeln!(w, "sep_bytes={}", self.sep_bytes);
        let _ = writeln!(w, "complete={}", self.complete as u8);
        sieve::write_atomic(path, body.as_bytes())?;
        Ok(())
    }

    fn read(path: &Path) -> Result<Self, CensusError> {
        let text = fs::read_to_string(path)?;
        let fields = sieve::parse_key_values(&text).map_err(to_checkpoint_err)?;
        let get = |key: &str| -> Option<&str> {
            fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
        };
        let int = |key: &str| -> Result<u64, CensusError> {
            sieve::require_u64(&fields, key).map_err(to_checkpoint_err)
        };
        let version = int("format_version")?;
        if version != CHECKPOINT_FORMAT_VERSION {
            return Err(CensusError::Checkpoint(format!(
                "unsupported format_version {version}"
            )));
        }
        let counter = PrimeCounter { n_processed: int("n_processed")?, pi1: int("pi1")? };
        let prev_prime = match get("prev_prime") {
            Some(raw) => Some(raw.parse::<u64>().map_err(|_| {
                CensusError::Checkpoint(format!("malformed prev_prime {raw:?}"))
            })?),
            None => None,
        };
        let prev_twin = get("prev_twin").map(parse_twin).transpose()?;
        let first_twin = get("first_twin").map(parse_twin).transpose()?;
        let counts = parse_counts(get("counts").unwrap_or(""))?;
        let mut records = Vec::new();
        for (k, v) in &fields {
            if k == "record" {
                let parts: Vec<&str> = v.split(':').collect();
                if parts.len() != 3 {
                    return Err(CensusError::Checkpoint(format!("malformed record {v:?}")));
                }
                let parse = |raw: &str| {
                    raw.parse::<u64>().map_err(|_| {
                        CensusError::Checkpoint(format!("malformed record {v:?}"))
                    })
                };
                records.push(RecordGap {
                    s: parse(parts[0])?,
                    onset_n: parse(parts[1])?,
                    twin_index: parse(parts[2])?,
                });
            }
        }
        let mut snapshots = Vec::new();
        for (k, v) in &fields {
            if k == "snapshot" {
                snapshots.push(parse_snapshot(v)?);
            }
        }
        if counter.pi1 > counter.n_processed {
            return Err(CensusError::Checkpoint(format!(
                "pi1 {} exceeds n_processed {}",
                counter.pi1, counter.n_processed
            )));
        }
        Ok(CensusState {
            counter,
            prev_prime,
            next_twin_index: int("next_twin_index")?,
            prev_twin,
            first_twin,
            counts,
            sum_s: int("sum_s")?,
            pi2: int("pi2")?,
            records,
            snapshots,
            sep_rows: int("sep_rows")?,
            sep_bytes: int("sep_bytes")?,
            complete: int("complete")? != 0,
        })
    }

    fn check_compatible(&self, config: &CensusConfig) -> Result<(), CensusError> {
        // the state file echoes the config it was produced under
        let text = fs::read_to_string(config.out_dir.join(STATE_FILE))?;
        let fields = sieve::parse_key_values(&text).map_err(to_checkpoint_err)?;
        let get = |key: &str| -> Result<String, CensusError> {
            fields
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| CensusError::Checkpoint(format!("missing key {key}")))
        };
        let expect = |key: &str, want: String| -> Result<(), CensusError> {
            let got = get(key)?;
            if got != want {
                return Err(CensusError::Checkpoint(format!(
                    "config mismatch on {key}: state has {got}, run has {want}"
                )));
            }
            Ok(())
        };
        expect("limit", config.limit.to_string())?;
        expect("segment_size", config.segment_size.to_string())?;
        expect("discard_anomalous", (config.discard_anomalous as u8).to_string())?;
        expect("export_separations", (config.export_separations as u8).to_string())?;
        let grid: Vec<String> = config
            .normalized_snapshots()
            .iter()
            .map(|b| b.to_string())
            .collect();
        expect("snapshot_grid", grid.join(","))?;
        Ok(())
    }
}

fn to_checkpoint_err(e: SieveError) -> CensusError {
    CensusError::Checkpoint(e.to_string())
}

fn dense_counts(hist: &SeparationHistogram) -> Vec<u64> {
    match hist.max_s() {
        Some(max) => (0..=max).map(|s| hist.count(s)).collect(),
        None => Vec::new(),
    }
}

fn parse_snapshot(raw: &str) -> Result<CensusSnapshot, CensusError> {
    let parts: Vec<&str> = raw.split('|').collect();
    if parts.len() != 7 {
        return Err(CensusError::Checkpoint(format!("malformed snapshot {raw:?}")));
    }
    let int = |raw: &str| -> Result<u64, CensusError> {
        raw.parse::<u64>()
            .map_err(|_| CensusError::Checkpoint(format!("malformed snapshot field {raw:?}")))
    };
    Ok(CensusSnapshot {
        hist: SeparationHistogram::new(
            parse_counts(parts[6])?,
            int(parts[0])?,
            int(parts[1])?,
            int(parts[2])?,
        ),
        head_singletons: int(parts[3])?,
        tail_singletons: int(parts[4])?,
        sum_s: int(parts[5])?,
    })
}

// ---------------------------------------------------------------------
// artifacts
// ---------------------------------------------------------------------

fn write_histogram_csv(path: &Path, hist: &SeparationHistogram) -> Result<(), CensusError> {
    let mut body = String::new();
    let _ = writeln!(body, "# n_limit={}", hist.n_limit);
    let _ = writeln!(body, "# pi1={}", hist.pi1);
    let _ = writeln!(body, "# pi2={}", hist.pi2);
    let _ = writeln!(body, "s,count,frequency");
    for (s, c) in hist.iter() {
        let _ = writeln!(body, "{s},{c},{}", fmt_real(hist.frequency(s)));
    }
    sieve::write_atomic(path, body.as_bytes())?;
    Ok(())
}

fn write_record_gaps_csv(path: &Path, records: &[RecordGap]) -> Result<(), CensusError> {
    let mut body = String::from("s,onset_N,twin_index\n");
    for r in records {
        let _ = writeln!(body, "{},{},{}", r.s, r.onset_n, r.twin_index);
    }
    sieve::write_atomic(path, body.as_bytes())?;
    Ok(())
}

fn write_summary_csv(path: &Path, snapshots: &[CensusSnapshot]) -> Result<(), CensusError> {
    let mut body =
        String::from("n,pi1,pi2,gaps,sum_s,head_singletons,tail_singletons,max_s\n");
    for snap in snapshots {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{},{},{}",
            snap.hist.n_limit,
            snap.hist.pi1,
            snap.hist.pi2,
            snap.hist.total(),
            snap.sum_s,
            snap.head_singletons,
            snap.tail_singletons,
            fmt_u64_opt(snap.hist.max_s()),
        );
    }
    sieve::write_atomic(path, body.as_bytes())?;
    Ok(())
}

/// Read back a histogram artifact.
pub fn read_histogram_csv(path: &Path) -> Result<SeparationHistogram, CensusError> {
    let text = fs::read_to_string(path)?;
    let mut n_limit = None;
    let mut pi1 = None;
    let mut pi2 = None;
    let mut counts: Vec<u64> = Vec::new();
    let mut saw_header = false;
    for line in text.lines() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                let v: u64 = v.parse().map_err(|_| {
                    CensusError::Checkpoint(format!("bad header value in {}", path.display()))
                })?;
                match k {
                    "n_limit" => n_limit = Some(v),
                    "pi1" => pi1 = Some(v),
                    "pi2" => pi2 = Some(v),
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            if line != "s,count,frequency" {
                return Err(CensusError::Checkpoint(format!(
                    "unexpected histogram header {line:?} in {}",
                    path.display()
                )));
            }
            saw_header = true;
            continue;
        }
        let mut cols = line.split(',');
        let (Some(s), Some(c)) = (cols.next(), cols.next()) else {
            return Err(CensusError::Checkpoint(format!(
                "short histogram row {line:?} in {}",
                path.display()
            )));
        };
        let s: usize = s.parse().map_err(|_| {
            CensusError::Checkpoint(format!("bad separation {s:?} in {}", path.display()))
        })?;
        let c: u64 = c.parse().map_err(|_| {
            CensusError::Checkpoint(format!("bad count {c:?} in {}", path.display()))
        })?;
        if counts.len() <= s {
            counts.resize(s + 1, 0);
        }
        counts[s] = c;
    }
    let missing = |what: &str| {
        CensusError::Checkpoint(format!("missing # {what}= header in {}", path.display()))
    };
    Ok(SeparationHistogram::new(
        counts,
        n_limit.ok_or_else(|| missing("n_limit"))?,
        pi1.ok_or_else(|| missing("pi1"))?,
        pi2.ok_or_else(|| missing("pi2"))?,
    ))
}

/// Read back the record-gap artifact.
pub fn read_record_gaps_csv(path: &Path) -> Result<Vec<RecordGap>, CensusError> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if i == 0 || line == "s,onset_N,twin_index" {
            if line != "s,onset_N,twin_index" {
                return Err(CensusError::Checkpoint(format!(
                    "unexpected record header {line:?} in {}",
                    path.display()
                )));
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(CensusError::Checkpoint(format!(
                "short record row {line:?} in {}",
                path.display()
            )));
        }
        let parse = |raw: &str| {
            raw.parse::<u64>().map_err(|_| {
                CensusError::Checkpoint(format!("bad record row {line:?} in {}", path.display()))
            })
        };
        records.push(RecordGap {
            s: parse(cols[0])?,
            onset_n: parse(cols[1])?,
            twin_index: parse(cols[2])?,
        });
    }
    Ok(records)
}

/// Snapshot bounds recorded in the summary artifact, in census order.
pub fn read_summary_bounds(path: &Path) -> Result<Vec<u64>, CensusError> {
    let text = fs::read_to_string(path)?;
    let mut bounds = Vec::new();
    for line in text.lines().skip(1) {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let first = line.split(',').next().unwrap_or("");
        bounds.push(first.parse::<u64>().map_err(|_| {
            CensusError::Checkpoint(format!("bad summary row {line:?} in {}", path.display()))
        })?);
    }
    Ok(bounds)
}
