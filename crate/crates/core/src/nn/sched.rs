//! Reduce-on-plateau learning-rate schedule.

/// Improvements smaller than this do not reset the stagnation counter.
const IMPROVEMENT_THRESHOLD: f64 = 1e-6;

/// Multiplies the learning rate by `factor` after `patience` consecutive
/// epochs without meaningful validation improvement.
#[derive(Clone, Debug)]
pub struct PlateauScheduler {
    pub lr: f64,
    patience: usize,
    factor: f64,
    best: f64,
    stagnant: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, patience: usize, factor: f64) -> Self {
        assert!(patience >= 1);
        assert!(factor > 0.0 && factor < 1.0);
        PlateauScheduler { lr, patience, factor, best: f64::INFINITY, stagnant: 0 }
    }

    /// Feed one validation loss; returns the (possibly reduced) rate.
    ///
    /// The rate drops once `patience` consecutive stagnant calls have
    /// fully elapsed, i.e. on the `(patience + 1)`-th stagnant call.
    pub fn step(&mut self, validation_loss: f64) -> f64 {
        if validation_loss < self.best - IMPROVEMENT_THRESHOLD {
            self.best = validation_loss;
            self.stagnant = 0;
        } else {
            self.stagnant += 1;
            if self.stagnant > self.patience {
                self.lr *= self.factor;
                self.stagnant = 0;
            }
        }
        self.lr
    }
}
