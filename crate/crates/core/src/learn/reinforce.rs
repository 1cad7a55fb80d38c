//! Linear softmax policy trained with the episodic policy gradient.

use rand::Rng;

use crate::model::{ActionId, ActionSet};

/// `π(a | x) ∝ exp(θ_a · x)` restricted to a mask. Parameters are stored
/// feature-major: `θ[f * num_actions + a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxPolicy {
    num_actions: usize,
    theta: Vec<f64>,
}

/// One decision of an episode, enough to replay its gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub features: Vec<u32>,
    pub mask: ActionSet,
    pub action: ActionId,
    pub reward: f64,
}

impl SoftmaxPolicy {
    pub fn new(dim: usize, num_actions: usize) -> Self {
        SoftmaxPolicy { num_actions, theta: vec![0.0; dim * num_actions] }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn logit(&self, x: &[u32], a: ActionId) -> f64 {
        x.iter().map(|&f| self.theta[f as usize * self.num_actions + a]).sum()
    }

    /// Probabilities indexed by action; exactly 0 outside `mask`.
    pub fn probs(&self, x: &[u32], mask: ActionSet) -> Vec<f64> {
        let mut p = vec![0.0; self.num_actions];
        let max = mask.iter().map(|a| self.logit(x, a)).fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for a in mask.iter() {
            p[a] = (self.logit(x, a) - max).exp();
            z += p[a];
        }
        for a in mask.iter() {
            p[a] /= z;
        }
        p
    }

    pub fn log_prob(&self, x: &[u32], mask: ActionSet, a: ActionId) -> f64 {
        let max = mask.iter().map(|b| self.logit(x, b)).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = mask.iter().map(|b| (self.logit(x, b) - max).exp()).sum();
        self.logit(x, a) - max - z.ln()
    }

    pub fn sample<R: Rng>(&self, x: &[u32], mask: ActionSet, rng: &mut R) -> ActionId {
        let p = self.probs(x, mask);
        let mut u: f64 = rng.gen();
        let mut last = None;
        for a in mask.iter() {
            if u < p[a] {
                return a;
            }
            u -= p[a];
            last = Some(a);
        }
        last.expect("mask is nonempty")
    }

    /// Most likely action, lowest index on ties.
    pub fn mode(&self, x: &[u32], mask: ActionSet) -> ActionId {
        let mut best = None;
        for a in mask.iter() {
            let l = self.logit(x, a);
            if best.map_or(true, |(_, bl)| l > bl) {
                best = Some((a, l));
            }
        }
        best.expect("mask is nonempty").0
    }

    /// `∇_θ log π(a | x)` as sparse `(index, value)` pairs. Only masked-in
    /// actions get entries.
    pub fn grad_log_prob(&self, x: &[u32], mask: ActionSet, a: ActionId) -> Vec<(usize, f64)> {
        let p = self.probs(x, mask);
        let mut g = Vec::with_capacity(x.len() * mask.len());
        for &f in x {
            for b in mask.iter() {
                let indicator = if b == a { 1.0 } else { 0.0 };
                g.push((f as usize * self.num_actions + b, indicator - p[b]));
            }
        }
        g
    }
}

/// `θ += η Σ_t G_t ∇log π(a_t | x_t)` with `G_t` the discounted
/// return-to-go. Gradients are taken at the pre-update parameters. Leaves
/// the policy untouched and reports the first bad step if anything turns
/// non-finite.
pub fn reinforce_update(policy: &mut SoftmaxPolicy, episode: &[Step], gamma: f64, lr: f64) -> Result<(), String> {
    let mut returns = vec![0.0; episode.len()];
    let mut g = 0.0;
    for (t, step) in episode.iter().enumerate().rev() {
        g = step.reward + gamma * g;
        returns[t] = g;
    }
    let mut delta: Vec<(usize, f64)> = Vec::new();
    for (t, step) in episode.iter().enumerate() {
        if returns[t] == 0.0 {
            continue;
        }
        for (i, v) in policy.grad_log_prob(&step.features, step.mask, step.action) {
            let d = lr * returns[t] * v;
            if !d.is_finite() {
                return Err(format!("step {t}: return {} gradient {v}", returns[t]));
            }
            delta.push((i, d));
        }
    }
    let mut next = policy.theta.clone();
    for (i, d) in delta {
        next[i] += d;
    }
    if let Some(i) = next.iter().position(|v| !v.is_finite()) {
        return Err(format!("parameter {i} became {}", next[i]));
    }
    policy.theta = next;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_policy(rng: &mut ChaCha8Rng, dim: usize, na: usize) -> SoftmaxPolicy {
        let mut p = SoftmaxPolicy::new(dim, na);
        p.theta_mut().iter_mut().for_each(|v| *v = rng.gen_range(-2.0..2.0));
        p
    }

    #[test]
    fn zero_return_leaves_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = random_policy(&mut rng, 4, 3);
        let before = p.clone();
        let ep = [Step { features: vec![0, 2], mask: ActionSet::full(3), action: 1, reward: 0.0 }];
        reinforce_update(&mut p, &ep, 1.0, 0.5).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn masked_actions_get_zero_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = random_policy(&mut rng, 3, 4);
        let mask = ActionSet::from_bits(0b1010);
        let pr = p.probs(&[0, 1], mask);
        assert_eq!(pr[0], 0.0);
        assert_eq!(pr[2], 0.0);
        assert!((pr[1] + pr[3] - 1.0).abs() < 1e-12);
        for _ in 0..200 {
            assert!(mask.contains(p.sample(&[0, 1], mask, &mut rng)));
        }
        assert!(p.grad_log_prob(&[0, 1], mask, 3).iter().all(|&(i, _)| mask.contains(i % 4)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (dim, na) = (5, 4);
            let mut p = random_policy(&mut rng, dim, na);
            let x: Vec<u32> = vec![0, rng.gen_range(1..3), rng.gen_range(3..5)];
            let mask = ActionSet::from_bits(rng.gen_range(1..16u64));
            let a = mask.nth(rng.gen_range(0..mask.len())).unwrap();
            let mut analytic = vec![0.0; dim * na];
            for (i, v) in p.grad_log_prob(&x, mask, a) {
                analytic[i] += v;
            }
            let h = 1e-5;
            for i in 0..dim * na {
                let orig = p.theta()[i];
                p.theta_mut()[i] = orig + h;
                let up = p.log_prob(&x, mask, a);
                p.theta_mut()[i] = orig - h;
                let down = p.log_prob(&x, mask, a);
                p.theta_mut()[i] = orig;
                let numeric = (up - down) / (2.0 * h);
                let scale = numeric.abs().max(analytic[i].abs()).max(1e-3);
                assert!((numeric - analytic[i]).abs() / scale < 1e-5, "param {i}: {numeric} vs {}", analytic[i]);
            }
        }
    }

    #[test]
    fn update_uses_return_to_go() {
        // Two steps on disjoint features: the first sees G = r0 + γ r1.
        let mut p = SoftmaxPolicy::new(2, 2);
        let ep = [
            Step { features: vec![0], mask: ActionSet::full(2), action: 0, reward: 1.0 },
            Step { features: vec![1], mask: ActionSet::full(2), action: 1, reward: 2.0 },
        ];
        reinforce_update(&mut p, &ep, 0.5, 1.0).unwrap();
        // at θ = 0 every gradient entry is ±1/2
        assert_eq!(p.theta(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn non_finite_update_is_rejected() {
        let mut p = SoftmaxPolicy::new(1, 2);
        let ep = [Step { features: vec![0], mask: ActionSet::full(2), action: 0, reward: f64::INFINITY }];
        assert!(reinforce_update(&mut p, &ep, 1.0, 1.0).is_err());
        assert_eq!(p.theta(), &[0.0, 0.0]);
    }
}
