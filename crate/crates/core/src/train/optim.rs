use serde::{Deserialize, Serialize};

use crate::nnet::{Gradients, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// First-order optimizer over a network's parameter tensors. Moments are
/// kept in f64.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam(Adam),
    Sgd { lr: f64 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, net: &Network<f32>) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(lr, net)),
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
        }
    }

    pub fn step(&mut self, net: &mut Network<f32>, grads: &Gradients<f32>) {
        match self {
            Optimizer::Adam(a) => a.step(net, grads),
            Optimizer::Sgd { lr } => {
                for (p, g) in net.params_mut().iter_mut().zip(&grads.tensors) {
                    for (w, &d) in p.data.iter_mut().zip(g) {
                        *w = (*w as f64 - *lr * d as f64) as f32;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, net: &Network<f32>) -> Self {
        let zeros: Vec<Vec<f64>> = net.params().iter().map(|p| vec![0.0; p.data.len()]).collect();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, net: &mut Network<f32>, grads: &Gradients<f32>) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, (p, g)) in net.params_mut().iter_mut().zip(&grads.tensors).enumerate() {
            for (j, (w, &d)) in p.data.iter_mut().zip(g).enumerate() {
                let d = d as f64;
                let m = &mut self.m[i][j];
                let v = &mut self.v[i][j];
                *m = self.beta1 * *m + (1.0 - self.beta1) * d;
                *v = self.beta2 * *v + (1.0 - self.beta2) * d * d;
                let update = self.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
                *w = (*w as f64 - update) as f32;
            }
        }
    }
}
