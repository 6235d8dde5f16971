//! Regret estimation from TD errors.

use crate::error::{Error, Result};
use crate::learner::td_errors;
use crate::trajectory::{RegretScore, Trajectory};

/// Mean over `t` of `max(sum_{k>=t} (gamma*lambda)^(k-t) delta_k, 0)`,
/// computed by one backward pass.
pub fn positive_value_loss(td_errors: &[f64], gamma: f64, lambda: f64) -> Result<RegretScore> {
    if td_errors.is_empty() {
        return Err(Error::invalid("positive value loss of an empty trajectory"));
    }
    let discount = gamma * lambda;
    let mut acc = 0.0;
    let mut total = 0.0;
    for &d in td_errors.iter().rev() {
        acc = d + discount * acc;
        total += acc.max(0.0);
    }
    RegretScore::new(total / td_errors.len() as f64)
}

/// Score a rollout: each episode separately, then averaged.
pub fn trajectory_regret(traj: &Trajectory, gamma: f64, lambda: f64) -> Result<RegretScore> {
    traj.validate()?;
    let td = td_errors(traj, gamma);
    let spans = traj.episode_spans();
    let mut sum = 0.0;
    for &(lo, hi) in &spans {
        sum += positive_value_loss(&td[lo..hi], gamma, lambda)?.value();
    }
    RegretScore::new(sum / spans.len() as f64)
}

/// Return minus regret; higher is easier.
pub fn easy_score(mean_return: f64, regret: RegretScore) -> f64 {
    mean_return - regret.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(td: &[f64], gl: f64) -> f64 {
        let t_len = td.len();
        let mut total = 0.0;
        for t in 0..t_len {
            let mut inner = 0.0;
            for (k, d) in td.iter().enumerate().skip(t) {
                inner += gl.powi((k - t) as i32) * d;
            }
            total += inner.max(0.0);
        }
        total / t_len as f64
    }

    #[test]
    fn two_step_example() {
        let s = positive_value_loss(&[1.0, -0.5], 0.5, 1.0).unwrap();
        assert!((s.value() - 0.375).abs() < 1e-15);
        assert_eq!(brute(&[1.0, -0.5], 0.5), 0.375);
    }

    #[test]
    fn all_negative_is_zero() {
        assert_eq!(positive_value_loss(&[-1.0, -0.2, 0.0], 0.9, 0.9).unwrap().value(), 0.0);
    }

    #[test]
    fn terminal_reward_example() {
        assert_eq!(positive_value_loss(&[0.0, 0.0, 0.5], 1.0, 1.0).unwrap().value(), 0.5);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(positive_value_loss(&[], 0.9, 0.9).is_err());
    }

    #[test]
    fn easy_score_examples() {
        assert!((easy_score(0.8, RegretScore::new(0.1).unwrap()) - 0.7).abs() < 1e-15);
        assert_eq!(easy_score(0.0, RegretScore::new(0.3).unwrap()), -0.3);
    }

    #[test]
    fn easy_ranking_prefers_lower_regret() {
        let levels = [(0.5, 0.4), (0.5, 0.1), (0.5, 0.2)];
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            let sa = easy_score(levels[a].0, RegretScore::new(levels[a].1).unwrap());
            let sb = easy_score(levels[b].0, RegretScore::new(levels[b].1).unwrap());
            sb.total_cmp(&sa)
        });
        assert_eq!(order, vec![1, 2, 0]);
    }
}
