use crate::error::{Error, Result};
use crate::neuralnet::NetworkParams;

/// Which validation signal drives early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopCriterion {
    /// Validation MSE, lower is better.
    #[default]
    ValLoss,
    /// Sentence-to-target R@1 on the validation set, higher is better.
    ValRecallAt1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub stop_on: StopCriterion,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 0.001,
            decay: 0.9,
            epsilon: 1e-6,
            batch_size: 64,
            max_epochs: 500,
            patience: 5,
            seed: 0,
            stop_on: StopCriterion::ValLoss,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::Config("decay must lie in (0, 1)".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Config(
                "batch size, max epochs and patience must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One scalar RMSprop update. Returns the new `(param, mean_square)`.
#[inline]
pub fn rmsprop_update(param: f64, grad: f64, mean_square: f64, config: &OptimizerConfig) -> (f64, f64) {
    let ms = config.decay * mean_square + (1.0 - config.decay) * grad * grad;
    (param - config.learning_rate * grad / (ms + config.epsilon).sqrt(), ms)
}

/// Running mean of squared gradients, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    config: OptimizerConfig,
    mean_square: NetworkParams,
}

impl RmsProp {
    pub fn new(params: &NetworkParams, config: OptimizerConfig) -> Self {
        RmsProp {
            mean_square: params.zeros_like(),
            config,
        }
    }

    pub fn state(&self) -> &NetworkParams {
        &self.mean_square
    }

    pub fn step(&mut self, params: &mut NetworkParams, grads: &NetworkParams) -> Result<()> {
        if !params.same_shape(grads) || !params.same_shape(&self.mean_square) {
            return Err(Error::Config("optimizer shapes do not match the network".into()));
        }
        let cfg = &self.config;
        for ((p, g), e) in params
            .iter_values_mut()
            .zip(grads.iter_values())
            .zip(self.mean_square.iter_values_mut())
        {
            let (np, ne) = rmsprop_update(*p, *g, *e, cfg);
            *p = np;
            *e = ne;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{Layer, NetworkParams};
    use proptest::prelude::*;

    #[test]
    fn defaults() {
        let c = OptimizerConfig::default();
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.decay, 0.9);
        assert_eq!(c.epsilon, 1e-6);
        assert_eq!(c.batch_size, 64);
        assert_eq!(c.max_epochs, 500);
        assert_eq!(c.patience, 5);
        assert!(c.validate().is_ok());
        assert!(OptimizerConfig {
            decay: 1.0,
            ..c.clone()
        }
        .validate()
        .is_err());
        assert!(OptimizerConfig { batch_size: 0, ..c }.validate().is_err());
    }

    #[test]
    fn single_step_by_hand() {
        let c = OptimizerConfig::default();
        let (p, e) = rmsprop_update(0.0, 1.0, 0.0, &c);
        assert!((e - 0.1).abs() < 1e-15);
        assert!((p - (-0.001 / 0.100001f64.sqrt())).abs() < 1e-12);
        assert!((p + 0.00316227).abs() < 1e-8);
    }

    #[test]
    fn zero_gradient_decays_state_only() {
        let c = OptimizerConfig::default();
        let (p, e) = rmsprop_update(0.7, 0.0, 0.5, &c);
        assert_eq!(p, 0.7);
        assert_eq!(e, 0.9 * 0.5);
    }

    #[test]
    fn two_steps_by_hand() {
        let c = OptimizerConfig::default();
        let (p1, e1) = rmsprop_update(0.0, 1.0, 0.0, &c);
        let (p2, e2) = rmsprop_update(p1, 1.0, e1, &c);
        assert!((e2 - 0.19).abs() < 1e-15);
        assert!((p2 - (p1 - 0.001 / 0.190001f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn network_step_updates_every_entry() {
        let mut params =
            NetworkParams::from_layers(vec![Layer::new(1, 2, vec![0.0, 1.0], vec![0.0]).unwrap()]).unwrap();
        let grads = NetworkParams::from_layers(vec![Layer::new(1, 2, vec![1.0, 0.0], vec![1.0]).unwrap()]).unwrap();
        let mut opt = RmsProp::new(&params, OptimizerConfig::default());
        opt.step(&mut params, &grads).unwrap();
        let (expected, _) = rmsprop_update(0.0, 1.0, 0.0, &OptimizerConfig::default());
        assert!((expected + 0.001 / 0.100001f64.sqrt()).abs() < 1e-12);
        assert_eq!(params.layers()[0].weights, [expected, 1.0]);
        assert_eq!(params.layers()[0].bias, [expected]);
        assert_eq!(opt.state().layers()[0].weights[1], 0.0);

        let wrong = NetworkParams::from_layers(vec![Layer::zeros(2, 2)]).unwrap();
        assert!(opt.step(&mut params, &wrong).is_err());
    }

    proptest! {
        #[test]
        fn accumulator_nonnegative_and_bounded(grads in prop::collection::vec(-10.0f64..10.0, 1..50)) {
            let c = OptimizerConfig::default();
            let (mut p, mut e) = (0.0, 0.0);
            let mut max_sq: f64 = 0.0;
            for g in grads {
                max_sq = max_sq.max(g * g);
                let next = rmsprop_update(p, g, e, &c);
                p = next.0;
                e = next.1;
                prop_assert!(e >= 0.0);
                prop_assert!(e <= max_sq * (1.0 + 1e-12));
            }
        }
    }
}
