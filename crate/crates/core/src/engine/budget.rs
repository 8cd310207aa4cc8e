use serde::{Deserialize, Serialize};

/// Kinds of work charged against the evaluation budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Charge {
    /// One fitness evaluation of a discrete tree on the full training set.
    Fitness,
    /// One DST training epoch.
    Epoch,
}

/// Shared evaluation counter with the early-stop flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_evaluations: u64,
    pub used: u64,
    pub epoch_cost: u64,
    pub early_stop_nrmse: f64,
    pub stopped: bool,
}

impl Budget {
    pub fn new(max_evaluations: u64, epoch_cost: u64, early_stop_nrmse: f64) -> Self {
        Self {
            max_evaluations,
            used: 0,
            epoch_cost,
            early_stop_nrmse,
            stopped: false,
        }
    }

    /// Charges `count` events and returns the remaining budget.
    pub fn account(&mut self, kind: Charge, count: u64) -> u64 {
        let unit = match kind {
            Charge::Fitness => 1,
            Charge::Epoch => self.epoch_cost,
        };
        self.used += unit * count;
        self.remaining()
    }

    pub fn remaining(&self) -> u64 {
        self.max_evaluations.saturating_sub(self.used)
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.max_evaluations
    }

    /// True once the budget is spent or a tree reached the early-stop level.
    pub fn done(&self) -> bool {
        self.stopped || self.exhausted()
    }

    /// Charges one fitness evaluation and checks the early-stop threshold.
    pub fn record_fitness(&mut self, nrmse: f64) {
        self.account(Charge::Fitness, 1);
        if nrmse < self.early_stop_nrmse {
            self.stopped = true;
        }
    }
}
