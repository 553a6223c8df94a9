use crate::rl::RlError;

fn check(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lam: f64) -> Result<(), RlError> {
    if values.len() != rewards.len() || dones.len() != rewards.len() {
        return Err(RlError::LengthMismatch {
            rewards: rewards.len(),
            values: values.len(),
            dones: dones.len(),
        });
    }
    if !(0.0..=1.0).contains(&gamma) || !(0.0..=1.0).contains(&lam) {
        return Err(RlError::InvalidConfig(format!(
            "gamma and lambda must lie in [0, 1], got {gamma} and {lam}"
        )));
    }
    Ok(())
}

/// GAE(lambda) advantages of one trajectory segment.
///
/// `delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t`, with `V_T` the
/// bootstrap value, and `A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}`.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap_value: f64,
    dones: &[bool],
    gamma: f64,
    lam: f64,
) -> Result<Vec<f64>, RlError> {
    check(rewards, values, dones, gamma, lam)?;
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = bootstrap_value;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lam * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    Ok(adv)
}

/// TD(lambda) value targets, by the backward recursion
/// `G_t = r_t + gamma (1 - done_t) [(1 - lambda) V_{t+1} + lambda G_{t+1}]`
/// with `G_T = V_T` the bootstrap value.
pub fn td_lambda_targets(
    rewards: &[f64],
    values: &[f64],
    bootstrap_value: f64,
    dones: &[bool],
    gamma: f64,
    lam: f64,
) -> Result<Vec<f64>, RlError> {
    check(rewards, values, dones, gamma, lam)?;
    let n = rewards.len();
    let mut targets = vec![0.0; n];
    let mut next_return = bootstrap_value;
    let mut next_value = bootstrap_value;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let g = rewards[t] + gamma * live * ((1.0 - lam) * next_value + lam * next_return);
        targets[t] = g;
        next_return = g;
        next_value = values[t];
    }
    Ok(targets)
}
