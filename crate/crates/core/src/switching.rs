//! Switching signals with bounded dwell times.
//!
//! A signal is a finite list of `(index, dwell)` segments. Every segment
//! except the last one must dwell between `δ` and `Δ` steps. The last one may
//! be cut short by the horizon, so only the upper bound applies to it. The
//! restricted class additionally requires dwell `>= m` on stable subsystems
//! and forbids an unstable subsystem from handing over to another unstable
//! one.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::family::{DerivedParams, IndexPartition, SwitchedFamily};

/// Largest horizon [`enumerate_signals`] accepts.
pub const MAX_ENUMERATION_LEN: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Segment {
    /// 0-based subsystem index.
    pub index: usize,
    pub dwell: u32,
}

impl Segment {
    pub fn new(index: usize, dwell: u32) -> Self {
        Self { index, dwell }
    }
}

/// Serialized as a JSON list of `[index, dwell]` pairs with 1-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SwitchingSignal {
    pub segments: Vec<Segment>,
}

impl SwitchingSignal {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    /// Total number of time steps covered.
    pub fn horizon(&self) -> usize {
        self.segments.iter().map(|s| s.dwell as usize).sum()
    }

    /// Active subsystem at each step `t = 0, 1, ...`.
    pub fn steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.index, s.dwell as usize))
    }

    /// First `len` steps; the last kept segment is cut short if needed.
    pub fn truncated(&self, len: usize) -> SwitchingSignal {
        let mut left = len;
        let mut segments = Vec::new();
        for s in &self.segments {
            if left == 0 {
                break;
            }
            let dwell = (s.dwell as usize).min(left);
            segments.push(Segment::new(s.index, dwell as u32));
            left -= dwell;
        }
        SwitchingSignal { segments }
    }

    /// Parses `"1:3,2:3"` (1-based index, dwell).
    pub fn parse_pattern(spec: &str) -> Result<Vec<Segment>> {
        spec.split(',')
            .map(|item| {
                let (i, d) = item.trim().split_once(':').ok_or_else(|| {
                    Error::InvalidSignal(format!("expected INDEX:DWELL, got {item:?}"))
                })?;
                let index: usize = i
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidSignal(format!("bad index {i:?}")))?;
                let dwell: u32 = d
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidSignal(format!("bad dwell {d:?}")))?;
                if index == 0 || dwell == 0 {
                    return Err(Error::InvalidSignal(format!(
                        "index and dwell must be positive in {item:?}"
                    )));
                }
                Ok(Segment::new(index - 1, dwell))
            })
            .collect()
    }
}

impl Serialize for SwitchingSignal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(
            self.segments
                .iter()
                .map(|s| [s.index as u64 + 1, u64::from(s.dwell)]),
        )
    }
}

impl<'de> Deserialize<'de> for SwitchingSignal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[u64; 2]>::deserialize(deserializer)?;
        let segments = pairs
            .into_iter()
            .map(|[i, d]| {
                if i == 0 {
                    return Err(serde::de::Error::custom("subsystem indices are 1-based"));
                }
                let dwell = u32::try_from(d).map_err(serde::de::Error::custom)?;
                Ok(Segment::new(i as usize - 1, dwell))
            })
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { segments })
    }
}

/// Membership rules for `S(δ, Δ)` or, when restricted, its subset that
/// dwells at least `m` on stable subsystems and never chains two unstable
/// subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalClass {
    pub num_subsystems: usize,
    pub min_dwell: u32,
    pub max_dwell: u32,
    /// `stable[i]` is true for Schur stable subsystems.
    pub stable: Vec<bool>,
    pub stable_min_dwell: u32,
    pub restricted: bool,
}

impl SignalClass {
    pub fn unrestricted(fam: &SwitchedFamily, part: &IndexPartition) -> Self {
        Self::build(fam, part, fam.min_dwell(), false)
    }

    pub fn restricted(fam: &SwitchedFamily, part: &IndexPartition, dp: &DerivedParams) -> Self {
        Self::build(fam, part, dp.m, true)
    }

    pub fn new(
        fam: &SwitchedFamily,
        part: &IndexPartition,
        dp: &DerivedParams,
        restricted: bool,
    ) -> Self {
        if restricted {
            Self::restricted(fam, part, dp)
        } else {
            Self::unrestricted(fam, part)
        }
    }

    fn build(fam: &SwitchedFamily, part: &IndexPartition, m: u32, restricted: bool) -> Self {
        let mut stable = vec![false; fam.len()];
        for &j in &part.stable {
            stable[j] = true;
        }
        Self {
            num_subsystems: fam.len(),
            min_dwell: fam.min_dwell(),
            max_dwell: fam.max_dwell(),
            stable,
            stable_min_dwell: m,
            restricted,
        }
    }

    /// Lower dwell bound for a complete segment on `index`.
    pub fn lower_dwell(&self, index: usize) -> u32 {
        if self.restricted && self.stable[index] {
            self.stable_min_dwell.max(self.min_dwell)
        } else {
            self.min_dwell
        }
    }

    /// Whether `next` may follow `current`.
    pub fn may_follow(&self, current: usize, next: usize) -> bool {
        next != current && !(self.restricted && !self.stable[current] && !self.stable[next])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    IndexOutOfRange { index: usize },
    ZeroDwell,
    RepeatedIndex,
    DwellTooShort { dwell: u32, min: u32 },
    DwellTooLong { dwell: u32, max: u32 },
    StableDwellBelowM { dwell: u32, m: u32 },
    UnstableFollowedByUnstable { next: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// 0-based segment position.
    pub segment: usize,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(sig: &SwitchingSignal, class: &SignalClass) -> ValidityReport {
    let mut violations = Vec::new();
    let mut flag =
        |segment: usize, kind: ViolationKind| violations.push(Violation { segment, kind });
    let last = sig.segments.len().saturating_sub(1);
    for (k, seg) in sig.segments.iter().enumerate() {
        if seg.index >= class.num_subsystems {
            flag(k, ViolationKind::IndexOutOfRange { index: seg.index });
            continue;
        }
        if seg.dwell == 0 {
            flag(k, ViolationKind::ZeroDwell);
        }
        if seg.dwell > class.max_dwell {
            flag(
                k,
                ViolationKind::DwellTooLong {
                    dwell: seg.dwell,
                    max: class.max_dwell,
                },
            );
        }
        if k < last {
            if seg.dwell < class.min_dwell {
                flag(
                    k,
                    ViolationKind::DwellTooShort {
                        dwell: seg.dwell,
                        min: class.min_dwell,
                    },
                );
            } else if class.restricted
                && class.stable[seg.index]
                && seg.dwell < class.stable_min_dwell
            {
                flag(
                    k,
                    ViolationKind::StableDwellBelowM {
                        dwell: seg.dwell,
                        m: class.stable_min_dwell,
                    },
                );
            }
        }
        if let Some(next) = sig.segments.get(k + 1) {
            if next.index == seg.index {
                flag(k + 1, ViolationKind::RepeatedIndex);
            } else if class.restricted
                && next.index < class.num_subsystems
                && !class.stable[seg.index]
                && !class.stable[next.index]
            {
                flag(
                    k + 1,
                    ViolationKind::UnstableFollowedByUnstable { next: next.index },
                );
            }
        }
    }
    ValidityReport { violations }
}

/// Random member of `class` with exactly `horizon` steps.
pub fn random_signal(class: &SignalClass, horizon: usize, seed: u64) -> Result<SwitchingSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_signal_with(class, horizon, &mut rng)
}

/// The first index is uniform over all subsystems. Each successor is uniform
/// over the indices allowed to follow; dwells are uniform over
/// `[lower_dwell, Δ]`. The final segment is cut at the horizon.
pub fn random_signal_with<R: Rng + ?Sized>(
    class: &SignalClass,
    horizon: usize,
    rng: &mut R,
) -> Result<SwitchingSignal> {
    if class.num_subsystems < 2 {
        return Err(Error::InvalidSignal(
            "a single subsystem admits no switching; at least two are required".into(),
        ));
    }
    if class.restricted && !class.stable.iter().any(|&s| s) {
        return Err(Error::AssumptionViolated(
            "restricted signals need at least one stable subsystem".into(),
        ));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let mut segments = Vec::new();
    let mut covered = 0usize;
    let mut current = rng.gen_range(0..class.num_subsystems);
    let mut successors = Vec::with_capacity(class.num_subsystems);
    loop {
        let dwell = rng.gen_range(class.lower_dwell(current)..=class.max_dwell);
        segments.push(Segment::new(current, dwell));
        covered += dwell as usize;
        if covered >= horizon {
            break;
        }
        successors.clear();
        successors.extend((0..class.num_subsystems).filter(|&n| class.may_follow(current, n)));
        current = *successors
            .choose(rng)
            .expect("a stable subsystem or a second index is always available");
    }
    Ok(SwitchingSignal { segments }.truncated(horizon))
}

/// `pattern` repeated `repetitions` times.
pub fn periodic_signal(pattern: &[Segment], repetitions: usize) -> Result<SwitchingSignal> {
    let (first, last) = match (pattern.first(), pattern.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::InvalidSignal("pattern is empty".into())),
    };
    if repetitions == 0 {
        return Err(Error::InvalidSignal("repetitions must be positive".into()));
    }
    if first.index == last.index {
        return Err(Error::InvalidSignal(format!(
            "pattern starts and ends on subsystem {}; repeated copies would merge",
            first.index + 1
        )));
    }
    if let Some(w) = pattern.windows(2).find(|w| w[0].index == w[1].index) {
        return Err(Error::InvalidSignal(format!(
            "adjacent segments share subsystem {}",
            w[0].index + 1
        )));
    }
    if pattern.iter().any(|s| s.dwell == 0) {
        return Err(Error::InvalidSignal("dwell must be positive".into()));
    }
    Ok(SwitchingSignal {
        segments: pattern
            .iter()
            .copied()
            .cycle()
            .take(pattern.len() * repetitions)
            .collect(),
    })
}

/// Number of members of `class` with horizon exactly `len`.
pub fn count_signals(class: &SignalClass, len: usize) -> f64 {
    // ways[r][i]: completions of `r` remaining steps given that a segment on
    // subsystem `i` starts now.
    let n = class.num_subsystems;
    let mut ways = vec![vec![0.0f64; n]; len + 1];
    for r in 1..=len {
        for i in 0..n {
            let mut total = 0.0;
            for d in 1..=(class.max_dwell as usize).min(r) {
                if d == r {
                    total += 1.0;
                } else if d >= class.lower_dwell(i) as usize {
                    total += (0..n)
                        .filter(|&j| class.may_follow(i, j))
                        .map(|j| ways[r - d][j])
                        .sum::<f64>();
                }
            }
            ways[r][i] = total;
        }
    }
    ways[len].iter().sum()
}

/// Every member of `class` with horizon exactly `max_len`, in lexicographic
/// order of the `(index, dwell)` sequence.
pub fn enumerate_signals(class: &SignalClass, max_len: usize) -> Result<SignalEnumerator<'_>> {
    if max_len > MAX_ENUMERATION_LEN {
        return Err(Error::EnumerationTooLarge {
            max_len,
            limit: MAX_ENUMERATION_LEN,
            estimate: count_signals(class, max_len),
        });
    }
    if max_len == 0 {
        return Err(Error::InvalidArgument("max_len must be positive".into()));
    }
    Ok(SignalEnumerator {
        class,
        max_len,
        stack: Vec::new(),
        started: false,
        done: false,
    })
}

/// Depth-first walk over segment sequences.
pub struct SignalEnumerator<'a> {
    class: &'a SignalClass,
    max_len: usize,
    stack: Vec<Segment>,
    started: bool,
    done: bool,
}

impl SignalEnumerator<'_> {
    fn covered(&self) -> usize {
        self.stack.iter().map(|s| s.dwell as usize).sum()
    }

    /// Whether `seg` may be appended when `covered` steps are already used.
    fn admissible(&self, seg: Segment, covered: usize) -> bool {
        let remaining = self.max_len - covered;
        let d = seg.dwell as usize;
        if d == 0 || d > remaining || seg.dwell > self.class.max_dwell {
            return false;
        }
        if let Some(prev) = self.stack.last() {
            if !self.class.may_follow(prev.index, seg.index) {
                return false;
            }
        }
        d == remaining || seg.dwell >= self.class.lower_dwell(seg.index)
    }

    /// Smallest admissible segment `>= start` in `(index, dwell)` order.
    fn first_from(&self, start: Segment, covered: usize) -> Option<Segment> {
        let mut seg = start;
        while seg.index < self.class.num_subsystems {
            while seg.dwell <= self.class.max_dwell {
                if self.admissible(seg, covered) {
                    return Some(seg);
                }
                seg.dwell += 1;
            }
            seg = Segment::new(seg.index + 1, 1);
        }
        None
    }

    /// Moves the stack to the next complete signal, if any.
    fn next_leaf(&mut self) -> bool {
        let mut extend = !self.started;
        self.started = true;
        loop {
            if extend {
                let covered = self.covered();
                if covered == self.max_len {
                    return true;
                }
                match self.first_from(Segment::new(0, 1), covered) {
                    Some(seg) => self.stack.push(seg),
                    None if self.stack.is_empty() => return false,
                    None => extend = false,
                }
            } else {
                let Some(mut top) = self.stack.pop() else {
                    return false;
                };
                top.dwell += 1;
                if let Some(seg) = self.first_from(top, self.covered()) {
                    self.stack.push(seg);
                    extend = true;
                }
            }
        }
    }
}

impl Iterator for SignalEnumerator<'_> {
    type Item = SwitchingSignal;

    fn next(&mut self) -> Option<SwitchingSignal> {
        if self.done {
            return None;
        }
        if self.next_leaf() {
            Some(SwitchingSignal::new(self.stack.clone()))
        } else {
            self.done = true;
            None
        }
    }
}
