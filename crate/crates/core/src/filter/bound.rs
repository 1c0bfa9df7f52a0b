/// Running check of the lower bound `b >= -eps_max / gamma` on the
/// barrier along a trajectory, with a one-step discretization allowance.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTracker {
    pub gamma: f64,
    pub tol_disc: f64,
    /// Largest slack since the current phase started.
    pub eps_max: f64,
    /// Largest slack over the whole run.
    pub eps_max_total: f64,
    /// Lowest barrier value seen.
    pub worst_b: f64,
    /// Smallest `b - threshold` seen; negative means a failure.
    pub worst_margin: f64,
    pub failures: usize,
    /// Phases that started with a negative barrier value.
    pub unmet_preconditions: usize,
    floor: f64,
}

impl BoundTracker {
    pub fn new(gamma: f64, u_max: f64, d_max: f64, dt: f64) -> Self {
        BoundTracker {
            gamma,
            tol_disc: (u_max + d_max) * dt * (1.0 / (u_max - d_max) + 1.0),
            eps_max: 0.0,
            eps_max_total: 0.0,
            worst_b: f64::INFINITY,
            worst_margin: f64::INFINITY,
            failures: 0,
            unmet_preconditions: 0,
            floor: 0.0,
        }
    }

    /// Called when the governing barrier changes (new front visit, dwell
    /// start or end). From a nonnegative start the slack history is
    /// forgotten; otherwise the bound degrades to `min(b0, -eps/gamma)`.
    pub fn start_phase(&mut self, b0: f64) {
        if b0 >= 0.0 {
            self.eps_max = 0.0;
            self.floor = 0.0;
        } else {
            self.unmet_preconditions += 1;
            self.floor = self.floor.min(b0);
        }
    }

    pub fn threshold(&self) -> f64 {
        self.floor.min(-self.eps_max / self.gamma) - self.tol_disc
    }

    /// Records slack `eps` and barrier value `b`; returns whether the bound
    /// holds.
    pub fn check(&mut self, b: f64, eps: f64) -> bool {
        self.eps_max = self.eps_max.max(eps);
        self.eps_max_total = self.eps_max_total.max(eps);
        self.worst_b = self.worst_b.min(b);
        let margin = b - self.threshold();
        self.worst_margin = self.worst_margin.min(margin);
        let ok = margin >= 0.0;
        if !ok {
            self.failures += 1;
        }
        ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn thresholds() {
        let mut t = BoundTracker::new(1.0, 1.0, 0.2, 0.1);
        assert_abs_diff_eq!(t.tol_disc, 1.2 * 0.1 * 2.25, epsilon = 1e-15);
        assert!(t.check(-0.2, 0.0));
        assert!(!t.check(-0.3, 0.0));
        assert!(t.check(-0.9, 0.8));
        assert_abs_diff_eq!(t.threshold(), -0.8 - t.tol_disc, epsilon = 1e-15);
        assert_eq!(t.failures, 1);
        t.start_phase(0.5);
        assert_eq!(t.eps_max, 0.0);
        assert_eq!(t.eps_max_total, 0.8);
    }

    #[test]
    fn negative_start_keeps_history() {
        let mut t = BoundTracker::new(2.0, 1.0, 0.2, 0.1);
        t.check(0.0, 1.0);
        t.start_phase(-2.0);
        assert_eq!(t.eps_max, 1.0);
        assert_eq!(t.unmet_preconditions, 1);
        assert!(t.check(-1.9, 0.0));
    }
}
