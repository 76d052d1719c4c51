//! Per-state-action bucket ledger and hierarchical transition estimates.
//!
//! Samples observed at a pair `(s, a)` fill fixed-capacity buckets in a
//! strict order: the level-`j` main bucket `G(j)` (capacity `ceil(c0 * 2^j)`),
//! then the level-`j` correction bucket `H(j)` (capacity `h_cap`, split into
//! `horizon` equal sub-buckets filled slot by slot), then level `j + 1`.
//! A level is *full* once both of its buckets are at capacity; estimates are
//! only ever formed from full levels, so every estimating bucket holds a
//! fixed, value-independent number of samples.
//!
//! Only next-state counts are stored, never raw sample sequences: bucket
//! placement depends solely on the arrival index, so counts are a lossless
//! representation for estimation purposes.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

/// Largest representable bucket cap; formulas that blow past it saturate.
const CAP_LIMIT: usize = usize::MAX / 4;

/// Default `H`-bucket capacity: `c1 * ceil(L) * horizon^beta`, rounded up to
/// a multiple of `horizon` so the sub-buckets are equal.
pub fn default_h_cap(c1: f64, big_l: f64, horizon: usize, beta: u32) -> usize {
    let raw = c1 * big_l.ceil() * (horizon as f64).powi(beta as i32);
    let raw = if raw.is_finite() { raw.ceil().max(1.0) } else { CAP_LIMIT as f64 };
    let raw = if raw >= CAP_LIMIT as f64 { CAP_LIMIT } else { raw as usize };
    round_up_to_multiple(raw, horizon)
}

fn round_up_to_multiple(n: usize, m: usize) -> usize {
    debug_assert!(m > 0);
    n.div_ceil(m) * m
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleError {
    /// Requested an estimate above the pair's full level.
    LevelNotFull { state: usize, action: usize, requested: usize, full: usize },
}

impl core::fmt::Display for SampleError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SampleError::LevelNotFull { state, action, requested, full } => write!(
                f,
                "level {requested} at (s={state}, a={action}) is not full (full level {full})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct LevelBucket {
    /// Next-state counts in the level's main bucket.
    g_counts: Vec<u32>,
    g_len: usize,
    /// Next-state counts per sub-bucket slot, `horizon * num_states` flat.
    h_counts: Vec<u32>,
    h_len: usize,
}

impl LevelBucket {
    fn new(num_states: usize, horizon: usize) -> Self {
        LevelBucket {
            g_counts: vec![0; num_states],
            g_len: 0,
            h_counts: vec![0; horizon * num_states],
            h_len: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PairState {
    /// Level currently being filled; levels below it are full.
    level: usize,
    buckets: Vec<LevelBucket>,
    visits: u64,
    /// Deterministic rewards: the first observation pins the value.
    reward_seen: Option<f64>,
}

impl PairState {
    fn new() -> Self {
        PairState { level: 1, buckets: Vec::new(), visits: 0, reward_seen: None }
    }
}

/// The bucket ledger for every `(s, a)` pair of one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketLedger {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    c0: f64,
    h_cap: usize,
    pairs: Vec<PairState>,
}

/// Immutable planner-facing view: full levels and reward estimates per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerView {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    full: Vec<usize>,
    r_hat: Vec<f64>,
}

impl LedgerView {
    #[inline]
    pub fn full_level(&self, s: usize, a: usize) -> usize {
        self.full[s * self.num_actions + a]
    }

    #[inline]
    pub fn reward_estimate(&self, s: usize, a: usize) -> f64 {
        self.r_hat[s * self.num_actions + a]
    }

    pub fn max_full_level(&self) -> usize {
        self.full.iter().copied().max().unwrap_or(0)
    }
}

/// Per-level empirical transition estimates, defined for full levels only.
///
/// Level 0 is the all-zero estimator by convention.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelEstimates {
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    full: Vec<usize>,
    /// Per pair: `full * num_states` probabilities, level-major.
    p_g: Vec<Vec<f64>>,
    /// Per pair: `full * horizon * num_states` probabilities.
    p_h: Vec<Vec<f64>>,
    zeros: Vec<f64>,
}

impl LevelEstimates {
    #[inline]
    pub fn full_level(&self, s: usize, a: usize) -> usize {
        self.full[s * self.num_actions + a]
    }

    /// Main-bucket estimate `\hat P^{(j)}(· | s, a)`; the zero vector at `j = 0`.
    pub fn p_g(&self, j: usize, s: usize, a: usize) -> Result<&[f64], SampleError> {
        if j == 0 {
            return Ok(&self.zeros);
        }
        let pair = s * self.num_actions + a;
        let full = self.full[pair];
        if j > full {
            return Err(SampleError::LevelNotFull { state: s, action: a, requested: j, full });
        }
        let base = (j - 1) * self.num_states;
        Ok(&self.p_g[pair][base..base + self.num_states])
    }

    /// Sub-bucket estimate `\hat P_h^{(j)}(· | s, a)`; the zero vector at `j = 0`.
    pub fn p_h(&self, j: usize, h: usize, s: usize, a: usize) -> Result<&[f64], SampleError> {
        if j == 0 {
            return Ok(&self.zeros);
        }
        debug_assert!((1..=self.horizon).contains(&h));
        let pair = s * self.num_actions + a;
        let full = self.full[pair];
        if j > full {
            return Err(SampleError::LevelNotFull { state: s, action: a, requested: j, full });
        }
        let base = ((j - 1) * self.horizon + (h - 1)) * self.num_states;
        Ok(&self.p_h[pair][base..base + self.num_states])
    }
}

impl BucketLedger {
    /// Creates an empty ledger. `h_cap` must be a positive multiple of the
    /// horizon; `c0` must be positive.
    pub fn new(num_states: usize, num_actions: usize, horizon: usize, c0: f64, h_cap: usize) -> Self {
        assert!(c0 > 0.0, "c0 must be positive");
        assert!(horizon >= 1);
        assert!(h_cap >= horizon && h_cap % horizon == 0, "h_cap must be a positive multiple of H");
        BucketLedger {
            num_states,
            num_actions,
            horizon,
            c0,
            h_cap,
            pairs: vec![PairState::new(); num_states * num_actions],
        }
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn h_cap(&self) -> usize {
        self.h_cap
    }

    /// Main-bucket capacity at level `j`.
    pub fn g_cap(&self, j: usize) -> usize {
        let raw = self.c0 * (2.0f64).powi(j as i32);
        if raw >= CAP_LIMIT as f64 {
            CAP_LIMIT
        } else {
            (raw.ceil() as usize).max(1)
        }
    }

    fn h_sub_cap(&self) -> usize {
        self.h_cap / self.horizon
    }

    /// Records one observed transition. Returns `true` when the pair's level
    /// completed, i.e. the planner should refresh its policy at the next
    /// episode boundary.
    pub fn record_transition(&mut self, s: usize, a: usize, s_next: usize, r_obs: f64) -> bool {
        debug_assert!(s < self.num_states && a < self.num_actions && s_next < self.num_states);
        let g_cap = self.g_cap(self.pairs[s * self.num_actions + a].level);
        let h_cap = self.h_cap;
        let h_sub = self.h_sub_cap();
        let num_states = self.num_states;
        let horizon = self.horizon;
        let pair = &mut self.pairs[s * self.num_actions + a];
        if pair.reward_seen.is_none() {
            pair.reward_seen = Some(r_obs);
        }
        pair.visits += 1;
        if pair.buckets.len() < pair.level {
            pair.buckets.push(LevelBucket::new(num_states, horizon));
        }
        let bucket = &mut pair.buckets[pair.level - 1];
        if bucket.g_len < g_cap {
            bucket.g_counts[s_next] += 1;
            bucket.g_len += 1;
            return false;
        }
        let slot = bucket.h_len / h_sub;
        bucket.h_counts[slot * num_states + s_next] += 1;
        bucket.h_len += 1;
        if bucket.h_len == h_cap {
            pair.level += 1;
            return true;
        }
        false
    }

    /// Largest level with both buckets at capacity; 0 before any completes.
    #[inline]
    pub fn full_level(&self, s: usize, a: usize) -> usize {
        self.pairs[s * self.num_actions + a].level - 1
    }

    /// Max of [`Self::full_level`] over all pairs.
    pub fn max_full_level(&self) -> usize {
        self.pairs.iter().map(|p| p.level - 1).max().unwrap_or(0)
    }

    #[inline]
    pub fn visit_count(&self, s: usize, a: usize) -> u64 {
        self.pairs[s * self.num_actions + a].visits
    }

    pub fn total_samples(&self) -> u64 {
        self.pairs.iter().map(|p| p.visits).sum()
    }

    /// Observed `r(s, a)`, or 1 for an unvisited pair (maximal optimism).
    pub fn reward_estimate(&self, s: usize, a: usize) -> f64 {
        match self.pairs[s * self.num_actions + a].reward_seen {
            Some(bits) => f64::from_bits(bits),
            None => 1.0,
        }
    }

    pub fn view(&self) -> LedgerView {
        let mut full = Vec::with_capacity(self.pairs.len());
        let mut r_hat = Vec::with_capacity(self.pairs.len());
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                full.push(self.full_level(s, a));
                r_hat.push(self.reward_estimate(s, a));
            }
        }
        LedgerView {
            num_states: self.num_states,
            num_actions: self.num_actions,
            horizon: self.horizon,
            full,
            r_hat,
        }
    }

    /// Builds the per-level empirical estimates from every full bucket.
    pub fn estimate(&self) -> LevelEstimates {
        let mut p_g = Vec::with_capacity(self.pairs.len());
        let mut p_h = Vec::with_capacity(self.pairs.len());
        let mut full = Vec::with_capacity(self.pairs.len());
        let h_sub = self.h_sub_cap() as f64;
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let pair = &self.pairs[s * self.num_actions + a];
                let lv = pair.level - 1;
                full.push(lv);
                let mut g = Vec::with_capacity(lv * self.num_states);
                let mut h = Vec::with_capacity(lv * self.horizon * self.num_states);
                for j in 1..=lv {
                    let bucket = &pair.buckets[j - 1];
                    let g_cap = self.g_cap(j) as f64;
                    debug_assert_eq!(bucket.g_len, self.g_cap(j));
                    debug_assert_eq!(bucket.h_len, self.h_cap);
                    for sn in 0..self.num_states {
                        g.push(bucket.g_counts[sn] as f64 / g_cap);
                    }
                    for slot in 0..self.horizon {
                        for sn in 0..self.num_states {
                            h.push(bucket.h_counts[slot * self.num_states + sn] as f64 / h_sub);
                        }
                    }
                }
                p_g.push(g);
                p_h.push(h);
            }
        }
        LevelEstimates {
            num_states: self.num_states,
            num_actions: self.num_actions,
            horizon: self.horizon,
            full,
            p_g,
            p_h,
            zeros: vec![0.0; self.num_states],
        }
    }

    /// Debug dump: one line per `(s, a, j)` with bucket occupancies.
    pub fn snapshot_lines(&self) -> String {
        let mut out = String::new();
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let pair = &self.pairs[s * self.num_actions + a];
                for (idx, bucket) in pair.buckets.iter().enumerate() {
                    let j = idx + 1;
                    out.push_str(&format!(
                        "s={s} a={a} j={j} g={}/{} h={}/{} visits={}\n",
                        bucket.g_len,
                        self.g_cap(j),
                        bucket.h_len,
                        self.h_cap,
                        pair.visits,
                    ));
                }
            }
        }
        out
    }

    /// Closed-form sample count implied by the bucket occupancies; equals
    /// `visit_count` by construction and is asserted in tests.
    pub fn accounted_samples(&self, s: usize, a: usize) -> u64 {
        let pair = &self.pairs[s * self.num_actions + a];
        let mut total = 0u64;
        for j in 1..pair.level {
            total += self.g_cap(j) as u64 + self.h_cap as u64;
        }
        if let Some(bucket) = pair.buckets.get(pair.level - 1) {
            total += bucket.g_len as u64 + bucket.h_len as u64;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny_ledger() -> BucketLedger {
        // c0 = 1 makes the level-1 main bucket hold 2 samples; h_cap = 2
        // with H = 2 gives two single-sample sub-buckets.
        BucketLedger::new(2, 1, 2, 1.0, 2)
    }

    #[test]
    fn filling_order_hand_simulation() {
        let mut led = tiny_ledger();
        // Samples 1-2 go to G(1), 3-4 to the two H(1) sub-buckets, the level
        // completes on sample 4, and samples 5-6 land in G(2).
        assert!(!led.record_transition(0, 0, 1, 0.5));
        assert!(!led.record_transition(0, 0, 1, 0.5));
        assert_eq!(led.full_level(0, 0), 0);
        assert!(!led.record_transition(0, 0, 0, 0.5));
        assert!(led.record_transition(0, 0, 1, 0.5));
        assert_eq!(led.full_level(0, 0), 1);
        assert!(!led.record_transition(0, 0, 1, 0.5));
        assert!(!led.record_transition(0, 0, 1, 0.5));
        assert_eq!(led.full_level(0, 0), 1);
        assert_eq!(led.visit_count(0, 0), 6);
        assert_eq!(led.accounted_samples(0, 0), 6);
    }

    #[test]
    fn first_visit_records_reward_and_count() {
        let mut led = tiny_ledger();
        assert_eq!(led.reward_estimate(1, 0), 1.0);
        led.record_transition(1, 0, 0, 0.3);
        assert_eq!(led.reward_estimate(1, 0), 0.3);
        assert_eq!(led.visit_count(1, 0), 1);
        // Idempotent under repeat visits.
        led.record_transition(1, 0, 0, 0.3);
        assert_eq!(led.reward_estimate(1, 0), 0.3);
    }

    #[test]
    fn max_full_level_over_pairs() {
        let mut led = BucketLedger::new(2, 2, 2, 1.0, 2);
        assert_eq!(led.max_full_level(), 0);
        // Drive (0, 1) to full level 3: levels need 2+2, 4+2, 8+2 samples.
        for _ in 0..20 {
            led.record_transition(0, 1, 0, 0.0);
        }
        assert_eq!(led.full_level(0, 1), 3);
        assert_eq!(led.max_full_level(), 3);
        let total = led.total_samples();
        let bound = (total as f64).log2() + 1.0;
        assert!((led.max_full_level() as f64) <= bound);
    }

    #[test]
    fn estimates_from_full_buckets() {
        let mut led = tiny_ledger();
        // G(1) = {s1, s1}.
        led.record_transition(0, 0, 1, 0.5);
        led.record_transition(0, 0, 1, 0.5);
        led.record_transition(0, 0, 0, 0.5);
        led.record_transition(0, 0, 1, 0.5);
        let est = led.estimate();
        assert_eq!(est.p_g(1, 0, 0).unwrap(), &[0.0, 1.0]);
        assert_eq!(est.p_h(1, 1, 0, 0).unwrap(), &[1.0, 0.0]);
        assert_eq!(est.p_h(1, 2, 0, 0).unwrap(), &[0.0, 1.0]);
        // Level 0 is the zero vector; above the full level is an error.
        assert_eq!(est.p_g(0, 0, 0).unwrap(), &[0.0, 0.0]);
        assert_eq!(
            est.p_g(2, 0, 0),
            Err(SampleError::LevelNotFull { state: 0, action: 0, requested: 2, full: 1 })
        );
    }

    #[test]
    fn estimate_counts_split_evenly() {
        let mut led = tiny_ledger();
        led.record_transition(0, 0, 0, 0.5);
        led.record_transition(0, 0, 1, 0.5);
        led.record_transition(0, 0, 0, 0.5);
        led.record_transition(0, 0, 0, 0.5);
        let est = led.estimate();
        assert_eq!(est.p_g(1, 0, 0).unwrap(), &[0.5, 0.5]);
    }

    #[test]
    fn default_h_cap_rounds_to_horizon_multiple() {
        assert_eq!(default_h_cap(1.0, 1.0, 3, 3), 27);
        assert_eq!(default_h_cap(1.0, 1.2, 3, 3), 54); // ceil(L) = 2
        assert_eq!(default_h_cap(0.5, 1.0, 4, 3), 32);
        assert_eq!(default_h_cap(1.0, 1.0, 5, 0) % 5, 0);
    }

    #[test]
    fn placement_ignores_sample_values() {
        // Two ledgers fed different next-state sequences level up at the
        // same visit indices.
        let mut a = BucketLedger::new(3, 1, 3, 1.5, 6);
        let mut b = BucketLedger::new(3, 1, 3, 1.5, 6);
        let mut level_events_a = Vec::new();
        let mut level_events_b = Vec::new();
        for n in 0..200usize {
            if a.record_transition(0, 0, n % 3, 0.1) {
                level_events_a.push(n);
            }
            if b.record_transition(0, 0, (n * 7 + 1) % 3, 0.1) {
                level_events_b.push(n);
            }
        }
        assert_eq!(level_events_a, level_events_b);
        assert!(!level_events_a.is_empty());
    }

    proptest! {
        #[test]
        fn ledger_accounting_matches_closed_form(
            seed in 0u64..512,
            n in 0usize..400,
            c0 in 1usize..4,
            h_cap_units in 1usize..4,
        ) {
            use rand::{Rng, SeedableRng};
            let horizon = 3;
            let mut led = BucketLedger::new(3, 2, horizon, c0 as f64, h_cap_units * horizon);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..n {
                let s = rng.gen_range(0..3);
                let a = rng.gen_range(0..2);
                let sn = rng.gen_range(0..3);
                led.record_transition(s, a, sn, 0.25);
            }
            let mut total = 0u64;
            for s in 0..3 {
                for a in 0..2 {
                    prop_assert_eq!(led.visit_count(s, a), led.accounted_samples(s, a));
                    let visits = led.visit_count(s, a);
                    let full = led.full_level(s, a);
                    if visits > 0 {
                        let bound = (visits as f64).log2().floor() + 1.0;
                        prop_assert!((full as f64) <= bound);
                    } else {
                        prop_assert_eq!(full, 0);
                    }
                    total += visits;
                }
            }
            prop_assert_eq!(total, n as u64);
        }

        #[test]
        fn estimated_rows_sum_to_one(seed in 0u64..128, n in 50usize..600) {
            use rand::{Rng, SeedableRng};
            let mut led = BucketLedger::new(4, 1, 2, 1.0, 4);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..n {
                let sn = rng.gen_range(0..4);
                led.record_transition(0, 0, sn, 0.9);
            }
            let est = led.estimate();
            for j in 1..=led.full_level(0, 0) {
                let sum: f64 = est.p_g(j, 0, 0).unwrap().iter().sum();
                prop_assert!((sum - 1.0).abs() <= 1e-12);
                for h in 1..=2 {
                    let sum: f64 = est.p_h(j, h, 0, 0).unwrap().iter().sum();
                    prop_assert!((sum - 1.0).abs() <= 1e-12);
                }
            }
        }
    }
}
