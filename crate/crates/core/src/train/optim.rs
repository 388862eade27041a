//! Plain SGD and bias-corrected Adam over flat parameter groups.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl OptimizerKind {
    pub const ADAM: OptimizerKind = OptimizerKind::Adam {
        beta1: 0.9,
        beta2: 0.999,
        epsilon: 1e-8,
    };
}

/// Optimizer state. Each parameter group (a weight matrix, a bias vector)
/// keeps its own moment buffers, created on first use.
#[derive(Debug)]
pub(crate) struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    t: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Self {
            kind,
            lr,
            t: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// Advances the step counter; call once before updating the groups of a step.
    pub fn begin_step(&mut self) {
        self.t = self.t.saturating_add(1);
    }

    pub fn update(&mut self, group: usize, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), grads.len());
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                while self.first.len() <= group {
                    self.first.push(Vec::new());
                    self.second.push(Vec::new());
                }
                let (m, v) = (&mut self.first[group], &mut self.second[group]);
                if m.is_empty() {
                    m.resize(params.len(), 0.0);
                    v.resize(params.len(), 0.0);
                }
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                for k in 0..params.len() {
                    let g = grads[k];
                    m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                    v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                    let m_hat = m[k] / c1;
                    let v_hat = v[k] / c2;
                    params[k] -= self.lr * m_hat / (v_hat.sqrt() + epsilon);
                }
            }
        }
    }
}
