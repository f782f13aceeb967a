//! Semi-gradient Q-learning, linear in the flattened channel features.
//! The value-based counterpart to the actor-critic learner: a distinct
//! algorithm with the same observation interface.
//!
//! The feature map (standardized flattened channels, see
//! [`crate::agents::linq_features`]) keeps one salient feature per moving
//! entity, which makes position-to-action maps exactly linear in this basis.

/// Linear action values over normalized flattened-channel features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinqNet {
    pub input_dim: usize,
    pub n_actions: usize,
    /// Learned action weights, n_actions x input_dim.
    pub w: Vec<f64>,
    /// Learned action biases.
    pub b: Vec<f64>,
}

impl LinqNet {
    pub fn init(input_dim: usize, n_actions: usize) -> LinqNet {
        LinqNet {
            input_dim,
            n_actions,
            w: vec![0.0; n_actions * input_dim],
            b: vec![0.0; n_actions],
        }
    }

    pub fn q_values(&self, phi: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.n_actions];
        for a in 0..self.n_actions {
            let row = &self.w[a * self.input_dim..(a + 1) * self.input_dim];
            let mut v = self.b[a];
            for j in 0..self.input_dim {
                v += row[j] * phi[j];
            }
            q[a] = v;
        }
        q
    }

    /// Greedy action over the feature vector, ties to the lowest index.
    pub fn greedy(&self, phi: &[f64]) -> usize {
        let q = self.q_values(phi);
        let mut best = 0;
        for a in 1..self.n_actions {
            if q[a] > q[best] {
                best = a;
            }
        }
        best
    }
}

/// One semi-gradient Q-learning update:
/// w <- w + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)) * grad Q(s,a),
/// with bootstrap 0 at terminal successors. Returns the TD error.
pub fn q_update(
    net: &mut LinqNet,
    phi: &[f64],
    action: usize,
    reward: f64,
    phi_next: Option<&[f64]>,
    gamma: f64,
    alpha: f64,
) -> f64 {
    let q_sa = net.q_values(phi)[action];
    let bootstrap = match phi_next {
        Some(pn) => {
            let qn = net.q_values(pn);
            qn.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        }
        None => 0.0,
    };
    let delta = reward + gamma * bootstrap - q_sa;
    let row = &mut net.w[action * net.input_dim..(action + 1) * net.input_dim];
    for j in 0..net.input_dim {
        row[j] += alpha * delta * phi[j];
    }
    net.b[action] += alpha * delta;
    delta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_learning_rate_changes_nothing() {
        let mut net = LinqNet::init(4, 3);
        net.w[0] = 0.3;
        let before = net.clone();
        let phi = [0.1, 0.2, 0.3, 0.4];
        q_update(&mut net, &phi, 1, 5.0, Some(&phi), 0.99, 0.0);
        assert_eq!(net, before);
    }

    #[test]
    fn terminal_transitions_bootstrap_zero() {
        let mut net = LinqNet::init(2, 1);
        let phi = [1.0, 0.0];
        let delta = q_update(&mut net, &phi, 0, 1.0, None, 0.9, 0.5);
        assert!((delta - 1.0).abs() < 1e-12);
        // weight 0.5 on the unit feature plus bias 0.5
        assert!((net.q_values(&phi)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn updates_move_q_toward_target() {
        let mut net = LinqNet::init(3, 2);
        let phi = [0.5, -0.25, 1.0];
        for _ in 0..200 {
            q_update(&mut net, &phi, 0, 2.0, None, 0.9, 0.1);
        }
        assert!((net.q_values(&phi)[0] - 2.0).abs() < 0.01);
    }

    #[test]
    fn fresh_net_breaks_ties_toward_the_first_action() {
        let net = LinqNet::init(5, 4);
        assert_eq!(net.greedy(&[0.2; 5]), 0);
    }
}
