//! Adam optimizer with bias correction over the SAGE parameter tensors.

use super::{SageParameters, TrainConfig};

/// First/second moment accumulators plus the timestep.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: SageParameters,
    v: SageParameters,
    t: u64,
}

impl AdamState {
    pub fn new(shape: &SageParameters) -> Self {
        AdamState {
            m: shape.zeros_like(),
            v: shape.zeros_like(),
            t: 0,
        }
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }
}

fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// One Adam update. Moments follow the standard recursions with bias
/// correction; the timestep advances by one on every call.
pub fn adam_step(
    params: &mut SageParameters,
    grads: &SageParameters,
    state: &mut AdamState,
    cfg: &TrainConfig,
) {
    state.t += 1;
    let bc1 = 1.0 - cfg.adam_beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.adam_beta2.powi(state.t as i32);

    update_slice(
        params.w1_self.as_mut_slice(),
        grads.w1_self.as_slice(),
        state.m.w1_self.as_mut_slice(),
        state.v.w1_self.as_mut_slice(),
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_eps,
        bc1,
        bc2,
    );
    update_slice(
        params.w1_neigh.as_mut_slice(),
        grads.w1_neigh.as_slice(),
        state.m.w1_neigh.as_mut_slice(),
        state.v.w1_neigh.as_mut_slice(),
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_eps,
        bc1,
        bc2,
    );
    update_slice(
        params.w2_self.as_mut_slice(),
        grads.w2_self.as_slice(),
        state.m.w2_self.as_mut_slice(),
        state.v.w2_self.as_mut_slice(),
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_eps,
        bc1,
        bc2,
    );
    update_slice(
        params.w2_neigh.as_mut_slice(),
        grads.w2_neigh.as_slice(),
        state.m.w2_neigh.as_mut_slice(),
        state.v.w2_neigh.as_mut_slice(),
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_eps,
        bc1,
        bc2,
    );
    update_slice(
        params.head_w.as_mut_slice(),
        grads.head_w.as_slice(),
        state.m.head_w.as_mut_slice(),
        state.v.head_w.as_mut_slice(),
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_eps,
        bc1,
        bc2,
    );

    let mut b = [params.head_b];
    update_slice(
        &mut b,
        &[grads.head_b],
        std::slice::from_mut(&mut state.m.head_b),
        std::slice::from_mut(&mut state.v.head_b),
        cfg.learning_rate,
        cfg.adam_beta1,
        cfg.adam_beta2,
        cfg.adam_eps,
        bc1,
        bc2,
    );
    params.head_b = b[0];
}
