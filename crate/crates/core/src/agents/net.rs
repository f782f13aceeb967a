//! A small shared-trunk policy/value network with hand-written gradients,
//! stored as one flat f64 parameter vector so optimizers and finite
//! differences can treat it uniformly.
//!
//! Layout: input -> tanh hidden -> {action logits, state value}.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Shapes of the network; offsets into the flat parameter vector follow
/// the order w1, b1, wp, bp, wv, bv.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub input_dim: usize,
    pub hidden: usize,
    pub n_actions: usize,
}

impl Layout {
    pub fn n_params(&self) -> usize {
        let (d, h, a) = (self.input_dim, self.hidden, self.n_actions);
        h * d + h + a * h + a + h + 1
    }

    fn off_b1(&self) -> usize {
        self.hidden * self.input_dim
    }
    fn off_wp(&self) -> usize {
        self.off_b1() + self.hidden
    }
    fn off_bp(&self) -> usize {
        self.off_wp() + self.n_actions * self.hidden
    }
    fn off_wv(&self) -> usize {
        self.off_bp() + self.n_actions
    }
    fn off_bv(&self) -> usize {
        self.off_wv() + self.hidden
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub layout: Layout,
    pub params: Vec<f64>,
}

/// Forward-pass intermediates needed by the backward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub hidden: Vec<f64>,
    pub logits: Vec<f64>,
    pub value: f64,
}

impl Net {
    /// Xavier-uniform trunk, small-scale heads.
    pub fn init(layout: Layout, rng: &mut ChaCha8Rng) -> Net {
        let mut params = vec![0.0; layout.n_params()];
        let (d, h, a) = (layout.input_dim, layout.hidden, layout.n_actions);
        let trunk_scale = (6.0 / (d + h) as f64).sqrt();
        for p in params[..h * d].iter_mut() {
            *p = rng.gen_range(-trunk_scale..trunk_scale);
        }
        let head_scale = 0.01;
        let off = layout.off_wp();
        for p in params[off..off + a * h].iter_mut() {
            *p = rng.gen_range(-head_scale..head_scale);
        }
        let off = layout.off_wv();
        for p in params[off..off + h].iter_mut() {
            *p = rng.gen_range(-head_scale..head_scale);
        }
        Net { layout, params }
    }

    pub fn zeros(layout: Layout) -> Net {
        Net {
            params: vec![0.0; layout.n_params()],
            layout,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Activations {
        let (d, h, a) = (
            self.layout.input_dim,
            self.layout.hidden,
            self.layout.n_actions,
        );
        debug_assert_eq!(x.len(), d);
        let p = &self.params;
        let mut hidden = vec![0.0; h];
        for j in 0..h {
            let row = &p[j * d..(j + 1) * d];
            let mut z = p[self.layout.off_b1() + j];
            for i in 0..d {
                z += row[i] * x[i];
            }
            hidden[j] = z.tanh();
        }
        let mut logits = vec![0.0; a];
        let wp = self.layout.off_wp();
        for k in 0..a {
            let row = &p[wp + k * h..wp + (k + 1) * h];
            let mut z = p[self.layout.off_bp() + k];
            for j in 0..h {
                z += row[j] * hidden[j];
            }
            logits[k] = z;
        }
        let wv = self.layout.off_wv();
        let mut value = p[self.layout.off_bv()];
        for j in 0..h {
            value += p[wv + j] * hidden[j];
        }
        Activations {
            hidden,
            logits,
            value,
        }
    }

    /// Accumulates parameter gradients for one sample, given the loss
    /// gradients at the logits and the value output.
    pub fn backward_into(
        &self,
        x: &[f64],
        act: &Activations,
        dlogits: &[f64],
        dvalue: f64,
        grads: &mut [f64],
    ) {
        let (d, h, a) = (
            self.layout.input_dim,
            self.layout.hidden,
            self.layout.n_actions,
        );
        let p = &self.params;
        let wp = self.layout.off_wp();
        let wv = self.layout.off_wv();
        let mut dhidden = vec![0.0; h];
        for k in 0..a {
            let g = dlogits[k];
            if g == 0.0 {
                continue;
            }
            let row = wp + k * h;
            for j in 0..h {
                grads[row + j] += g * act.hidden[j];
                dhidden[j] += g * p[row + j];
            }
            grads[self.layout.off_bp() + k] += g;
        }
        if dvalue != 0.0 {
            for j in 0..h {
                grads[wv + j] += dvalue * act.hidden[j];
                dhidden[j] += dvalue * p[wv + j];
            }
            grads[self.layout.off_bv()] += dvalue;
        }
        let b1 = self.layout.off_b1();
        for j in 0..h {
            let dz = dhidden[j] * (1.0 - act.hidden[j] * act.hidden[j]);
            if dz == 0.0 {
                continue;
            }
            let row = j * d;
            for i in 0..d {
                grads[row + i] += dz * x[i];
            }
            grads[b1 + j] += dz;
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// log(softmax(logits))[k], stable.
pub fn log_softmax_at(logits: &[f64], k: usize) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse: f64 = logits.iter().map(|&z| (z - m).exp()).sum::<f64>().ln() + m;
    logits[k] - lse
}

/// Samples an index from a categorical distribution.
pub fn sample_categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Adam optimizer over the flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn forward_shapes_and_determinism() {
        let layout = Layout {
            input_dim: 4,
            hidden: 3,
            n_actions: 2,
        };
        let mut r = rng::stream(5);
        let net = Net::init(layout, &mut r);
        let x = [0.1, -0.2, 0.3, 0.4];
        let a = net.forward(&x);
        let b = net.forward(&x);
        assert_eq!(a.logits, b.logits);
        assert_eq!(a.value, b.value);
        assert_eq!(a.hidden.len(), 3);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1.0, 2.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[2] > p[1] && p[1] > p[0]);
    }

    #[test]
    fn zero_net_symmetric_inputs_give_symmetric_gradients() {
        let layout = Layout {
            input_dim: 2,
            hidden: 4,
            n_actions: 2,
        };
        let net = Net::zeros(layout);
        let x = [0.5, 0.5];
        let act = net.forward(&x);
        let mut grads = vec![0.0; layout.n_params()];
        net.backward_into(&x, &act, &[1.0, -1.0], 0.0, &mut grads);
        // both input weights of each hidden unit see the same signal
        for j in 0..4 {
            let a = grads[j * 2];
            let b = grads[j * 2 + 1];
            assert!((a - b).abs() < 1e-12);
        }
    }
}
