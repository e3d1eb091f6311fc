//! Twin-pair enumeration over an ascending prime stream, separation
//! tracking between consecutive twins, and running-maximum gap records.
//!
//! A *separation* counts the singleton primes strictly between two
//! consecutive twin pairs; it is a distance within the prime sequence,
//! not an arithmetic difference. The pair (3, 5) overlaps (5, 7) and is
//! dropped by default so that every prime belongs to at most one twin.

/// A twin pair `(p, p + 2)` with its position in the twin sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Twin {
    /// First member of the pair.
    pub p: u64,
    /// 0-based position among emitted twins.
    pub index: u64,
    /// Count of primes `<= p`.
    pub pi1_at_p: u64,
}

impl Twin {
    /// Second member of the pair.
    pub fn second(&self) -> u64 {
        self.p + 2
    }
}

/// One gap event between consecutive twins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeparationRecord {
    /// Singleton primes strictly between `left` and `right`.
    pub s: u64,
    pub left: Twin,
    pub right: Twin,
}

/// A separation that exceeded every separation before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordGap {
    pub s: u64,
    /// First member of the twin that closes the record gap.
    pub onset_n: u64,
    /// Index of that twin in the twin sequence.
    pub twin_index: u64,
}

/// Streaming twin detector. Feed primes in strictly ascending order.
#[derive(Debug, Clone)]
pub struct TwinFilter {
    discard_anomalous: bool,
    prev_prime: Option<u64>,
    primes_seen: u64,
    next_index: u64,
}

impl TwinFilter {
    pub fn new(discard_anomalous: bool) -> Self {
        TwinFilter {
            discard_anomalous,
            prev_prime: None,
            primes_seen: 0,
            next_index: 0,
        }
    }

    /// Rebuild mid-stream state (checkpoint resume).
    pub fn restore(
        discard_anomalous: bool,
        prev_prime: Option<u64>,
        primes_seen: u64,
        next_index: u64,
    ) -> Self {
        TwinFilter { discard_anomalous, prev_prime, primes_seen, next_index }
    }

    pub fn prev_prime(&self) -> Option<u64> {
        self.prev_prime
    }

    pub fn primes_seen(&self) -> u64 {
        self.primes_seen
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// Observe the next prime; returns the twin it completes, if any.
    pub fn push(&mut self, p: u64) -> Option<Twin> {
        debug_assert!(self.prev_prime.is_none_or(|q| q < p));
        self.primes_seen += 1;
        let completes = match self.prev_prime {
            Some(q) if q + 2 == p => Some(q),
            _ => None,
        };
        self.prev_prime = Some(p);
        let q = completes?;
        if self.discard_anomalous && q == 3 {
            return None;
        }
        let twin = Twin {
            p: q,
            index: self.next_index,
            // primes_seen includes p itself; primes <= q is one less
            pi1_at_p: self.primes_seen - 1,
        };
        self.next_index += 1;
        Some(twin)
    }
}

/// Iterator adapter form of [`TwinFilter`].
pub struct Twins<I> {
    primes: I,
    filter: TwinFilter,
}

impl<I: Iterator<Item = u64>> Iterator for Twins<I> {
    type Item = Twin;

    fn next(&mut self) -> Option<Twin> {
        loop {
            let p = self.primes.next()?;
            if let Some(twin) = self.filter.push(p) {
                return Some(twin);
            }
        }
    }
}

/// Twin pairs of an ascending prime stream. Both members of an emitted
/// pair lie within the stream's bound, because a pair is only completed
/// when its upper member arrives.
pub fn enumerate_twins<I>(primes: I, discard_anomalous: bool) -> Twins<I>
where
    I: Iterator<Item = u64>,
{
    Twins { primes, filter: TwinFilter::new(discard_anomalous) }
}

/// Streaming separation tracker between consecutive twins.
#[derive(Debug, Clone)]
pub struct SeparationTracker {
    prev: Option<Twin>,
}

impl SeparationTracker {
    pub fn new() -> Self {
        SeparationTracker { prev: None }
    }

    pub fn restore(prev: Option<Twin>) -> Self {
        SeparationTracker { prev }
    }

    pub fn prev_twin(&self) -> Option<Twin> {
        self.prev
    }

    /// Observe the next twin; returns the gap it closes, if any.
    pub fn push(&mut self, twin: Twin) -> Option<SeparationRecord> {
        let left = self.prev.replace(twin)?;
        // primes in (left.p, right.p] are left.p+2, the singletons
        // between the pairs, and right.p itself
        let s = twin.pi1_at_p - left.pi1_at_p - 2;
        Some(SeparationRecord { s, left, right: twin })
    }
}

impl Default for SeparationTracker {
    fn default() -> Self {
        Self::new()
    }
}

/// Iterator adapter form of [`SeparationTracker`].
pub struct Separations<I> {
    twins: I,
    tracker: SeparationTracker,
}

impl<I: Iterator<Item = Twin>> Iterator for Separations<I> {
    type Item = SeparationRecord;

    fn next(&mut self) -> Option<SeparationRecord> {
        loop {
            let twin = self.twins.next()?;
            if let Some(rec) = self.tracker.push(twin) {
                return Some(rec);
            }
        }
    }
}

/// Gaps between consecutive twins of an ascending twin stream.
/// Fewer than two twins yield an empty stream.
pub fn separations<I>(twins: I) -> Separations<I>
where
    I: Iterator<Item = Twin>,
{
    Separations { twins, tracker: SeparationTracker::new() }
}

/// Running-maximum tracker over a separation stream. The first gap is
/// always a record; afterwards only strict increases are.
#[derive(Debug, Clone, Default)]
pub struct RecordTracker {
    current_max: Option<u64>,
    records: Vec<RecordGap>,
}

impl RecordTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn restore(records: Vec<RecordGap>) -> Self {
        RecordTracker {
            current_max: records.last().map(|r| r.s),
            records,
        }
    }

    /// Observe the next gap; returns the new record if one was set.
    pub fn observe(&mut self, rec: &SeparationRecord) -> Option<RecordGap> {
        if self.current_max.is_none_or(|m| rec.s > m) {
            self.current_max = Some(rec.s);
            let record = RecordGap {
                s: rec.s,
                onset_n: rec.right.p,
                twin_index: rec.right.index,
            };
            self.records.push(record);
            return Some(record);
        }
        None
    }

    pub fn records(&self) -> &[RecordGap] {
        &self.records
    }

    pub fn into_records(self) -> Vec<RecordGap> {
        self.records
    }
}

/// All record gaps of a separation stream, in onset order.
pub fn record_gaps<I>(seps: I) -> Vec<RecordGap>
where
    I: Iterator<Item = SeparationRecord>,
{
    let mut tracker = RecordTracker::new();
    for rec in seps {
        tracker.observe(&rec);
    }
    tracker.into_records()
}
