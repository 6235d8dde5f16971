use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct Gae {
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub td_errors: Vec<f64>,
}

/// TD errors with episode-boundary masking: the successor value is dropped
/// after a done step.
pub fn td_errors(traj: &Trajectory, gamma: f64) -> Vec<f64> {
    let t_len = traj.len();
    (0..t_len)
        .map(|t| {
            let next = if traj.dones[t] {
                0.0
            } else if t + 1 < t_len {
                traj.values[t + 1]
            } else {
                traj.bootstrap_value
            };
            traj.rewards[t] + gamma * next - traj.values[t]
        })
        .collect()
}

pub fn compute_gae(traj: &Trajectory, gamma: f64, lambda: f64) -> Gae {
    let td = td_errors(traj, gamma);
    let mut advantages = vec![0.0; td.len()];
    let mut acc = 0.0;
    for t in (0..td.len()).rev() {
        if traj.dones[t] {
            acc = 0.0;
        }
        acc = td[t] + gamma * lambda * acc;
        advantages[t] = acc;
    }
    let returns = advantages.iter().zip(&traj.values).map(|(a, v)| a + v).collect();
    Gae { advantages, returns, td_errors: td }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::LevelId;
    use crate::trajectory::{Action, Origin};

    pub(crate) fn traj(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64) -> Trajectory {
        let mut t = Trajectory::new(LevelId(0), Origin::Replay);
        t.rewards = rewards.to_vec();
        t.values = values.to_vec();
        t.dones = dones.to_vec();
        t.bootstrap_value = bootstrap;
        t.observations = vec![vec![]; rewards.len()];
        t.actions = vec![Action::Discrete(0); rewards.len()];
        t.log_probs = vec![0.0; rewards.len()];
        t
    }

    #[test]
    fn hand_recursion() {
        let t = traj(&[0.0, 0.0, 1.0], &[0.5; 3], &[false, false, true], 0.0);
        let g = compute_gae(&t, 1.0, 1.0);
        assert_eq!(g.td_errors, vec![0.0, 0.0, 0.5]);
        assert_eq!(g.advantages, vec![0.5, 0.5, 0.5]);
        assert_eq!(g.returns, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_signal() {
        let t = traj(&[0.0; 5], &[0.0; 5], &[false, false, true, false, false], 0.0);
        assert!(compute_gae(&t, 0.99, 0.95).advantages.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn lambda_zero_is_td() {
        let t = traj(&[0.3, -1.0, 2.0, 0.1], &[0.2, 0.4, -0.3, 1.0], &[false, true, false, false], 0.7);
        let g = compute_gae(&t, 0.9, 0.0);
        assert_eq!(g.advantages, g.td_errors);
    }

    #[test]
    fn bootstrap_used_when_truncated() {
        let t = traj(&[0.0], &[0.0], &[false], 2.0);
        assert_eq!(compute_gae(&t, 0.5, 1.0).advantages, vec![1.0]);
    }
}
