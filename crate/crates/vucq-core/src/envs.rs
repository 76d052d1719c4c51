//! Synthetic environment generators.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mdp::{Mdp, MdpError};

/// Dense random MDP: every transition row is a normalized vector of
/// independent positive draws, rewards are uniform in `reward_range`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomDenseSpec {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// Dirichlet-style concentration: 1.0 gives flat rows, larger values
    /// concentrate mass near uniform, smaller values make rows spiky.
    pub concentration: f64,
    /// Reward draw range, must be contained in `[0, 1]`.
    pub reward_range: (f64, f64),
    pub gen_seed: u64,
}

impl Default for RandomDenseSpec {
    fn default() -> Self {
        RandomDenseSpec {
            num_states: 5,
            num_actions: 2,
            horizon: 5,
            concentration: 1.0,
            reward_range: (0.0, 1.0),
            gen_seed: 0,
        }
    }
}

/// Hard-exploration chain on a line of states.
///
/// Action 0 (`LEFT`) moves left deterministically and self-loops at state 0;
/// action 1 (`RIGHT`) advances with probability `p_forward`, else stays.
/// Reward `r_left` at `(state 0, LEFT)`, `r_right` at `(state n-1, RIGHT)`,
/// zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub num_states: usize,
    pub horizon: usize,
    pub p_forward: f64,
    pub r_left: f64,
    pub r_right: f64,
}

pub const CHAIN_LEFT: usize = 0;
pub const CHAIN_RIGHT: usize = 1;

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec { num_states: 5, horizon: 5, p_forward: 0.7, r_left: 0.05, r_right: 1.0 }
    }
}

/// Environment selector used by the harness.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    RandomDense(RandomDenseSpec),
    Chain(ChainSpec),
}

impl EnvSpec {
    pub fn build(&self) -> Result<Mdp, MdpError> {
        match self {
            EnvSpec::RandomDense(s) => make_random_mdp(s),
            EnvSpec::Chain(s) => make_chain_mdp(s),
        }
    }
}

/// Draws a dense random MDP, deterministic in `gen_seed`.
pub fn make_random_mdp(spec: &RandomDenseSpec) -> Result<Mdp, MdpError> {
    assert!(spec.concentration > 0.0, "concentration must be positive");
    let (lo, hi) = spec.reward_range;
    assert!(
        (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi,
        "reward range must be an ordered subrange of [0, 1]"
    );
    let ns = spec.num_states;
    let na = spec.num_actions;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.gen_seed);
    let mut transition = Vec::with_capacity(ns * na * ns);
    for _ in 0..ns * na {
        let mut row = vec![0.0f64; ns];
        let mut sum = 0.0;
        for x in row.iter_mut() {
            // Exponential draw raised to 1/concentration keeps entries
            // positive while letting the knob sharpen or flatten rows.
            let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
            *x = (-u.ln()).powf(1.0 / spec.concentration).max(f64::MIN_POSITIVE);
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
        // Exact renormalization of the largest entry so the row sums to 1
        // within the validator's tolerance.
        let residual: f64 = 1.0 - row.iter().sum::<f64>();
        let argmax = (0..ns).max_by(|&i, &j| row[i].total_cmp(&row[j])).unwrap();
        row[argmax] += residual;
        transition.extend_from_slice(&row);
    }
    let reward: Vec<f64> = (0..ns * na).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect();
    Mdp::new(ns, na, spec.horizon, transition, reward)
}

/// Builds the chain environment.
pub fn make_chain_mdp(spec: &ChainSpec) -> Result<Mdp, MdpError> {
    let n = spec.num_states;
    assert!(n >= 1, "chain needs at least one state");
    assert!((0.0..=1.0).contains(&spec.p_forward), "p_forward must be a probability");
    let na = 2;
    let mut transition = vec![0.0f64; n * na * n];
    let mut reward = vec![0.0f64; n * na];
    for s in 0..n {
        // LEFT: deterministic step left, self-loop at the boundary.
        let left_target = s.saturating_sub(1);
        transition[(s * na + CHAIN_LEFT) * n + left_target] = 1.0;
        // RIGHT: advance with p_forward, stay otherwise; pure self-loop at
        // the right end.
        if s + 1 < n {
            transition[(s * na + CHAIN_RIGHT) * n + s + 1] = spec.p_forward;
            transition[(s * na + CHAIN_RIGHT) * n + s] = 1.0 - spec.p_forward;
        } else {
            transition[(s * na + CHAIN_RIGHT) * n + s] = 1.0;
        }
    }
    reward[CHAIN_LEFT] = spec.r_left; // (state 0, LEFT)
    reward[(n - 1) * na + CHAIN_RIGHT] = spec.r_right;
    Mdp::new(n, na, spec.horizon, transition, reward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::value_iteration;

    #[test]
    fn random_mdp_is_deterministic_in_seed() {
        let spec = RandomDenseSpec { gen_seed: 123, ..Default::default() };
        assert_eq!(make_random_mdp(&spec).unwrap(), make_random_mdp(&spec).unwrap());
    }

    #[test]
    fn random_mdp_rows_sum_to_one() {
        for seed in 0..20 {
            let spec = RandomDenseSpec {
                num_states: 4,
                num_actions: 3,
                gen_seed: seed,
                ..Default::default()
            };
            let m = make_random_mdp(&spec).unwrap();
            for s in 0..4 {
                for a in 0..3 {
                    let sum: f64 = m.row(s, a).iter().sum();
                    assert!((sum - 1.0).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_state_rows_are_point_masses() {
        let spec = RandomDenseSpec { num_states: 1, num_actions: 2, ..Default::default() };
        let m = make_random_mdp(&spec).unwrap();
        assert_eq!(m.row(0, 0), &[1.0]);
        assert_eq!(m.row(0, 1), &[1.0]);
    }

    #[test]
    fn chain_left_self_loops_at_origin() {
        let m = make_chain_mdp(&ChainSpec::default()).unwrap();
        assert_eq!(m.row(0, CHAIN_LEFT)[0], 1.0);
    }

    #[test]
    fn chain_rewards_in_unit_interval() {
        let m = make_chain_mdp(&ChainSpec::default()).unwrap();
        for s in 0..m.num_states {
            for a in 0..m.num_actions {
                let r = m.reward(s, a);
                assert!((0.0..=1.0).contains(&r));
            }
        }
    }

    #[test]
    fn deterministic_chain_optimal_value() {
        // p_forward = 1, H >= n, and the right reward dominating the left:
        // the optimal run walks right for n-1 steps then harvests r_right.
        let spec =
            ChainSpec { num_states: 4, horizon: 6, p_forward: 1.0, r_left: 0.05, r_right: 1.0 };
        let m = make_chain_mdp(&spec).unwrap();
        let t = value_iteration(&m);
        let expected = (spec.horizon - spec.num_states + 1) as f64 * spec.r_right;
        assert!(expected > spec.r_left * spec.horizon as f64);
        assert!((t.v(1, 0) - expected).abs() < 1e-12);
    }
}
