use serde::{Deserialize, Serialize};

/// Linear warmup to the peak rate, then linear decay to zero at the last step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmupSchedule {
    pub warmup_steps: u64,
    pub total_steps: u64,
}

impl WarmupSchedule {
    /// Warmup longer than the run is clamped to the run length.
    pub fn new(warmup_steps: u64, total_steps: u64) -> Self {
        Self {
            warmup_steps: warmup_steps.min(total_steps),
            total_steps,
        }
    }

    /// Multiplier on the peak rate at 1-based `step`.
    pub fn multiplier(&self, step: u64) -> f64 {
        if self.warmup_steps > 0 && step <= self.warmup_steps {
            return step as f64 / self.warmup_steps as f64;
        }
        if step >= self.total_steps {
            return 0.0;
        }
        let remaining = (self.total_steps - step) as f64;
        let span = (self.total_steps - self.warmup_steps) as f64;
        remaining / span
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            // three epochs underfit below ~0.2 on sparse hashed features
            learning_rate: 0.5,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-step constants shared by every parameter.
#[derive(Debug, Clone, Copy)]
pub struct StepParams {
    pub lr: f64,
    /// Fraction of each decayed weight removed this step.
    pub decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub bias_correction1: f64,
    pub bias_correction2: f64,
    pub epsilon: f64,
}

impl StepParams {
    /// Constants for 1-based `step`. Decay follows the schedule multiplier
    /// but not the peak learning rate, so it still applies when that is zero.
    pub fn at(config: &AdamWConfig, schedule: &WarmupSchedule, step: u64) -> Self {
        let mult = schedule.multiplier(step);
        let t = i32::try_from(step).unwrap_or(i32::MAX);
        Self {
            lr: config.learning_rate * mult,
            decay: config.weight_decay * mult,
            beta1: config.beta1,
            beta2: config.beta2,
            bias_correction1: 1.0 - config.beta1.powi(t),
            bias_correction2: 1.0 - config.beta2.powi(t),
            epsilon: config.epsilon,
        }
    }
}

/// One AdamW update of a single parameter.
#[inline]
pub fn adamw_update(p: &mut f64, m: &mut f64, v: &mut f64, g: f64, s: &StepParams, decay: bool) {
    *m = s.beta1 * *m + (1.0 - s.beta1) * g;
    *v = s.beta2 * *v + (1.0 - s.beta2) * g * g;
    if decay {
        *p *= 1.0 - s.decay;
    }
    let m_hat = *m / s.bias_correction1;
    let v_hat = *v / s.bias_correction2;
    *p -= s.lr * m_hat / (v_hat.sqrt() + s.epsilon);
}
