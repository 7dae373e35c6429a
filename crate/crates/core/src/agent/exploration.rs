use std::collections::VecDeque;

/// Multiplicative ε decay with a floor: `max(floor, start * decay^k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSchedule {
    start: f64,
    decay: f64,
    floor: f64,
    steps: u64,
    resets: u32,
}

impl EpsilonSchedule {
    pub fn new(start: f64, decay: f64, floor: f64) -> Self {
        assert!((0.0..=1.0).contains(&floor) && floor <= start && start <= 1.0, "need 0 <= floor <= start <= 1");
        assert!(decay > 0.0 && decay <= 1.0, "decay must lie in (0, 1]");
        EpsilonSchedule { start, decay, floor, steps: 0, resets: 0 }
    }

    pub fn value(&self) -> f64 {
        (self.start * self.decay.powf(self.steps as f64)).max(self.floor)
    }

    /// Decay events since construction or the last reset.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn resets(&self) -> u32 {
        self.resets
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn at_floor(&self) -> bool {
        self.value() <= self.floor
    }

    pub fn decay(&mut self) {
        if !self.at_floor() {
            self.steps += 1;
        }
    }

    /// Back to ε = 1.
    pub fn reset(&mut self) {
        self.start = 1.0;
        self.steps = 0;
        self.resets += 1;
    }
}

/// Watches rewards once exploration has bottomed out and requests a fresh
/// exploration phase when a reward leaves `(tau - 1, tau + 1)`, `tau` being
/// the mean of the last `window` rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationMonitor {
    window: usize,
    half_width: f64,
    rewards: VecDeque<f64>,
}

impl Default for ExplorationMonitor {
    fn default() -> Self {
        ExplorationMonitor::new(100, 1.0)
    }
}

impl ExplorationMonitor {
    pub fn new(window: usize, half_width: f64) -> Self {
        assert!(window > 0);
        ExplorationMonitor { window, half_width, rewards: VecDeque::with_capacity(window) }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.rewards.len() == self.window
    }

    /// Window mean; defined only once the window is full.
    pub fn tau(&self) -> Option<f64> {
        self.is_full().then(|| self.rewards.iter().sum::<f64>() / self.window as f64)
    }

    pub fn clear(&mut self) {
        self.rewards.clear();
    }

    /// Feeds one reward. Returns `true` when it triggered a reset of `epsilon`.
    /// Rewards seen while ε is above its floor are ignored.
    pub fn observe(&mut self, reward: f64, epsilon: &mut EpsilonSchedule) -> bool {
        if !epsilon.at_floor() {
            return false;
        }
        if let Some(tau) = self.tau() {
            if reward < tau - self.half_width || reward > tau + self.half_width {
                epsilon.reset();
                self.clear();
                return true;
            }
            self.rewards.pop_front();
        }
        self.rewards.push_back(reward);
        false
    }
}
