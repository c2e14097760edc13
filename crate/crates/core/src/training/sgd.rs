use crate::diff::{Array4, ParamStore};

/// Stochastic gradient descent with heavy-ball momentum:
/// `v ← μ·v + g`, `w ← w − λ·v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<Array4>,
}

impl Sgd {
    pub fn new(learning_rate: f64, momentum: f64) -> Self {
        Self { learning_rate, momentum, velocity: Vec::new() }
    }

    /// Apply one update and clear the gradients.
    pub fn step(&mut self, params: &mut ParamStore) {
        if self.velocity.len() != params.len() {
            self.velocity = params.iter().map(|p| Array4::zeros(p.value.shape())).collect();
        }
        for (p, v) in params.iter_mut().zip(&mut self.velocity) {
            for ((w, g), vel) in p.value.data_mut().iter_mut().zip(p.grad.data()).zip(v.data_mut()) {
                *vel = self.momentum * *vel + g;
                *w -= self.learning_rate * *vel;
            }
            p.grad.fill(0.0);
        }
    }
}
