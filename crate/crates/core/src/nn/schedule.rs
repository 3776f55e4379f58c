/// Exponentially decayed learning rate: `initial * decay_rate^(step / decay_steps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub initial_rate: f64,
    pub decay_rate: f64,
    pub decay_steps: u64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            initial_rate: 1e-3,
            decay_rate: 0.96,
            decay_steps: 1000,
        }
    }
}

impl LrSchedule {
    pub fn rate(&self, step: u64) -> f64 {
        let steps = self.decay_steps.max(1) as f64;
        self.initial_rate * libm::pow(self.decay_rate, step as f64 / steps)
    }

    pub fn is_valid(&self) -> bool {
        self.initial_rate > 0.0 && self.decay_rate > 0.0 && self.decay_rate <= 1.0
    }
}
