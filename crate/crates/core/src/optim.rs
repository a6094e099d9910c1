//! Adaptive moment estimation for gradient ascent.

use crate::math::sqrt;
use crate::model::{GradientSet, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 0.001, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Bias-corrected first/second moment state for one parameter set.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    step: i32,
    first: GradientSet,
    second: GradientSet,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ModelParams) -> Self {
        Self {
            config,
            step: 0,
            first: GradientSet::zeros_for(params),
            second: GradientSet::zeros_for(params),
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// Moves `params` along `grad` (ascent).
    pub fn ascend(&mut self, params: &mut ModelParams, grad: &GradientSet) {
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        self.step += 1;
        let c1 = 1.0 - libm::pow(beta1, self.step as f64);
        let c2 = 1.0 - libm::pow(beta2, self.step as f64);
        let arrays = params
            .arrays_mut()
            .into_iter()
            .zip(grad.0.arrays())
            .zip(self.first.0.arrays_mut())
            .zip(self.second.0.arrays_mut());
        for ((((_, p), (_, g)), (_, m)), (_, v)) in arrays {
            let it = p
                .as_mut_slice()
                .iter_mut()
                .zip(g.as_slice())
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice());
            for (((p, &g), m), v) in it {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p += learning_rate * (*m / c1) / (sqrt(*v / c2) + epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Hyper;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let hyper = Hyper { dim: 2, width: 1, labels: 2, vocab_size: 4, char_count: 2 };
        let mut params = ModelParams::zeros(hyper).unwrap();
        let mut grad = GradientSet::zeros_for(&params);
        grad.0.w_word.set(0, 0, 3.0);
        grad.0.w_word.set(1, 1, -0.5);
        let mut adam = Adam::new(AdamConfig::default(), &params);
        adam.ascend(&mut params, &grad);
        assert!((params.w_word.get(0, 0) - 0.001).abs() < 1e-9);
        assert!((params.w_word.get(1, 1) + 0.001).abs() < 1e-9);
        assert_eq!(params.w_word.get(0, 1), 0.0);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn ascends_a_concave_function() {
        // maximize -(x - 1)^2 over one coordinate
        let hyper = Hyper { dim: 2, width: 1, labels: 2, vocab_size: 4, char_count: 2 };
        let mut params = ModelParams::zeros(hyper).unwrap();
        let mut adam = Adam::new(AdamConfig { learning_rate: 0.05, ..AdamConfig::default() }, &params);
        for _ in 0..500 {
            let mut grad = GradientSet::zeros_for(&params);
            grad.0.w_char.set(0, 0, -2.0 * (params.w_char.get(0, 0) - 1.0));
            adam.ascend(&mut params, &grad);
        }
        assert!((params.w_char.get(0, 0) - 1.0).abs() < 1e-2);
    }
}
