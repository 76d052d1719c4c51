//! Finite-horizon tabular MDPs and the exact dynamic-programming oracles.
//!
//! These oracles serve double duty: the experiment harness computes true
//! regret with them, and the test suites use them as ground truth against
//! brute-force policy enumeration.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

/// Tolerance for a transition row summing to one.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A finite-horizon MDP with deterministic rewards in `[0, 1]`.
///
/// Transition rows are stored dense row-major: `transition[(s*A + a)*S + s']`
/// is `P(s' | s, a)`. Stages are 1-based throughout (`h` in `1..=horizon`),
/// matching the backward-induction conventions of the planners.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
}

/// A violated [`Mdp`] invariant, naming the offending entry.
#[derive(Debug, Clone, PartialEq)]
pub enum MdpError {
    ZeroStates,
    ZeroActions,
    ZeroHorizon,
    RowSum { state: usize, action: usize, sum: f64 },
    NegativeProbability { state: usize, action: usize, next_state: usize, value: f64 },
    RewardOutOfRange { state: usize, action: usize, value: f64 },
    ShapeMismatch { field: &'static str, expected: usize, actual: usize },
}

impl core::fmt::Display for MdpError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MdpError::ZeroStates => write!(f, "num_states must be positive"),
            MdpError::ZeroActions => write!(f, "num_actions must be positive"),
            MdpError::ZeroHorizon => write!(f, "horizon must be at least 1"),
            MdpError::RowSum { state, action, sum } => {
                write!(f, "transition row (s={state}, a={action}) sums to {sum}, expected 1")
            }
            MdpError::NegativeProbability { state, action, next_state, value } => write!(
                f,
                "transition P({next_state} | s={state}, a={action}) = {value} is negative"
            ),
            MdpError::RewardOutOfRange { state, action, value } => {
                write!(f, "reward r(s={state}, a={action}) = {value} outside [0, 1]")
            }
            MdpError::ShapeMismatch { field, expected, actual } => {
                write!(f, "{field} has length {actual}, expected {expected}")
            }
        }
    }
}

impl Mdp {
    /// Builds and validates an MDP from flat row-major tables.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
    ) -> Result<Self, MdpError> {
        let m = Mdp { num_states, num_actions, horizon, transition, reward };
        m.validate()?;
        Ok(m)
    }

    /// Checks every invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), MdpError> {
        if self.num_states == 0 {
            return Err(MdpError::ZeroStates);
        }
        if self.num_actions == 0 {
            return Err(MdpError::ZeroActions);
        }
        if self.horizon == 0 {
            return Err(MdpError::ZeroHorizon);
        }
        let (ns, na) = (self.num_states, self.num_actions);
        if self.transition.len() != ns * na * ns {
            return Err(MdpError::ShapeMismatch {
                field: "transition",
                expected: ns * na * ns,
                actual: self.transition.len(),
            });
        }
        if self.reward.len() != ns * na {
            return Err(MdpError::ShapeMismatch {
                field: "reward",
                expected: ns * na,
                actual: self.reward.len(),
            });
        }
        for s in 0..ns {
            for a in 0..na {
                let row = self.row(s, a);
                let mut sum = 0.0;
                for (sn, &p) in row.iter().enumerate() {
                    if p < 0.0 {
                        return Err(MdpError::NegativeProbability {
                            state: s,
                            action: a,
                            next_state: sn,
                            value: p,
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(MdpError::RowSum { state: s, action: a, sum });
                }
                let r = self.reward(s, a);
                if !(0.0..=1.0).contains(&r) {
                    return Err(MdpError::RewardOutOfRange { state: s, action: a, value: r });
                }
            }
        }
        Ok(())
    }

    /// The transition row `P(· | s, a)`.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let base = (s * self.num_actions + a) * self.num_states;
        &self.transition[base..base + self.num_states]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    /// Draws the next state by inverse-CDF over the row in ascending state
    /// order, consuming exactly one uniform from `rng`.
    pub fn sample_next_state<R: Rng>(&self, s: usize, a: usize, rng: &mut R) -> usize {
        let row = self.row(s, a);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (sn, &p) in row.iter().enumerate() {
            if p > 0.0 {
                last_positive = sn;
            }
            acc += p;
            if u < acc {
                return sn;
            }
        }
        // Row sums to 1 - eps; attribute the residual to the last support point.
        last_positive
    }
}

/// Deterministic nonstationary policy: `action(s, h)` for stages `1..=H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    num_states: usize,
    horizon: usize,
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(num_states: usize, horizon: usize, actions: Vec<usize>) -> Self {
        assert_eq!(actions.len(), num_states * horizon, "policy table shape");
        Policy { num_states, horizon, actions }
    }

    /// Constant policy playing `a` at every state and stage.
    pub fn constant(num_states: usize, horizon: usize, a: usize) -> Self {
        Policy::new(num_states, horizon, vec![a; num_states * horizon])
    }

    #[inline]
    pub fn action(&self, s: usize, h: usize) -> usize {
        debug_assert!((1..=self.horizon).contains(&h));
        self.actions[(h - 1) * self.num_states + s]
    }

    pub fn is_valid_for(&self, m: &Mdp) -> bool {
        self.num_states == m.num_states
            && self.horizon == m.horizon
            && self.actions.iter().all(|&a| a < m.num_actions)
    }
}

/// Stage-indexed value tables, `h` in `1..=H+1` with the `H+1` layer zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTables {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl ValueTables {
    fn zeros(m: &Mdp) -> Self {
        ValueTables {
            num_states: m.num_states,
            num_actions: m.num_actions,
            horizon: m.horizon,
            q: vec![0.0; (m.horizon + 1) * m.num_states * m.num_actions],
            v: vec![0.0; (m.horizon + 1) * m.num_states],
        }
    }

    #[inline]
    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        debug_assert!((1..=self.horizon + 1).contains(&h));
        self.q[((h - 1) * self.num_states + s) * self.num_actions + a]
    }

    #[inline]
    pub fn v(&self, h: usize, s: usize) -> f64 {
        debug_assert!((1..=self.horizon + 1).contains(&h));
        self.v[(h - 1) * self.num_states + s]
    }

    #[inline]
    fn set_q(&mut self, h: usize, s: usize, a: usize, val: f64) {
        self.q[((h - 1) * self.num_states + s) * self.num_actions + a] = val;
    }

    #[inline]
    fn set_v(&mut self, h: usize, s: usize, val: f64) {
        self.v[(h - 1) * self.num_states + s] = val;
    }

    /// Greedy policy, ties broken toward the lowest action index.
    pub fn greedy_policy(&self) -> Policy {
        let mut actions = Vec::with_capacity(self.num_states * self.horizon);
        for h in 1..=self.horizon {
            for s in 0..self.num_states {
                let mut best = 0;
                let mut best_q = self.q(h, s, 0);
                for a in 1..self.num_actions {
                    let q = self.q(h, s, a);
                    if q > best_q {
                        best_q = q;
                        best = a;
                    }
                }
                actions.push(best);
            }
        }
        Policy::new(self.num_states, self.horizon, actions)
    }
}

fn dot(p: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in p.iter().zip(v) {
        acc += a * b;
    }
    acc
}

/// Backward induction for the optimal tables:
/// `q(h,s,a) = r(s,a) + P(·|s,a)·v(h+1)`, `v(h,s) = max_a q(h,s,a)`.
pub fn value_iteration(m: &Mdp) -> ValueTables {
    let mut t = ValueTables::zeros(m);
    for h in (1..=m.horizon).rev() {
        for s in 0..m.num_states {
            let mut best = f64::NEG_INFINITY;
            for a in 0..m.num_actions {
                let mut exp_v = 0.0;
                for sn in 0..m.num_states {
                    exp_v += m.row(s, a)[sn] * t.v(h + 1, sn);
                }
                let q = m.reward(s, a) + exp_v;
                t.set_q(h, s, a, q);
                if q > best {
                    best = q;
                }
            }
            t.set_v(h, s, best);
        }
    }
    t
}

/// Exact evaluation of a fixed policy:
/// `q(h,s,a) = r(s,a) + P(·|s,a)·v(h+1)`, `v(h,s) = q(h, s, pi(s,h))`.
pub fn policy_evaluation(m: &Mdp, pi: &Policy) -> ValueTables {
    assert!(pi.is_valid_for(m), "policy shape does not match the MDP");
    let mut t = ValueTables::zeros(m);
    for h in (1..=m.horizon).rev() {
        for s in 0..m.num_states {
            for a in 0..m.num_actions {
                let mut exp_v = 0.0;
                for sn in 0..m.num_states {
                    exp_v += m.row(s, a)[sn] * t.v(h + 1, sn);
                }
                t.set_q(h, s, a, m.reward(s, a) + exp_v);
            }
            let v = t.q(h, s, pi.action(s, h));
            t.set_v(h, s, v);
        }
    }
    t
}

/// One-step next-value variance of `pi` at `(s, a)` in stage `h`:
/// `Var_{s' ~ P(·|s,a)}[ V^pi_{h+1}(s') ]`.
pub fn stage_variance(m: &Mdp, tables: &ValueTables, h: usize, s: usize, a: usize) -> f64 {
    let row = m.row(s, a);
    let mut mean = 0.0;
    let mut mean_sq = 0.0;
    for sn in 0..m.num_states {
        let v = tables.v(h + 1, sn);
        mean += row[sn] * v;
        mean_sq += row[sn] * v * v;
    }
    (mean_sq - mean * mean).max(0.0)
}

/// Sums the per-stage next-value variances of `pi` along a trajectory of
/// exactly `H` state-action pairs.
pub fn policy_variance(m: &Mdp, pi: &Policy, trajectory: &[(usize, usize)]) -> f64 {
    assert_eq!(trajectory.len(), m.horizon, "trajectory must have H entries");
    let tables = policy_evaluation(m, pi);
    let mut total = 0.0;
    for (i, &(s, a)) in trajectory.iter().enumerate() {
        total += stage_variance(m, &tables, i + 1, s, a);
    }
    total
}

/// Formats `V*_1` and `Q*` tables as CSV (`kind,h,s,a,value` rows); the
/// harness `oracle` subcommand prints this.
pub fn oracle_csv(m: &Mdp) -> String {
    let t = value_iteration(m);
    let mut out = String::from("kind,h,s,a,value\n");
    for h in 1..=m.horizon {
        for s in 0..m.num_states {
            out.push_str(&format!("v,{h},{s},,{:.12e}\n", t.v(h, s)));
            for a in 0..m.num_actions {
                out.push_str(&format!("q,{h},{s},{a},{:.12e}\n", t.q(h, s, a)));
            }
        }
    }
    out
}
