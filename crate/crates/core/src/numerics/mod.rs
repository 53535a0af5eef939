//! Time-stepping backends: RK4 integration, the controlled-wealth SDE
//! simulator, a finite-difference HJB cross-check, and the deterministic
//! Euler-Lagrange integrator.

mod fd;
mod lagrangian;
mod ode;
mod sde;

pub use fd::{solve_hjb_fd, FdSolution};
pub use lagrangian::{euler_lagrange_integrate, Lagrangian, QuadraticLagrangian, Trajectory};
pub use ode::{ode_rk4, Direction, OdeTable};
pub use sde::{simulate_merton, PathEnsemble, Policy, WEALTH_FLOOR_FRACTION};

use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform time grid on `[t0, t1]` with `n` steps (`n + 1` nodes).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::InvalidArgument(format!(
                "time grid needs t1 > t0, got [{t0}, {t1}]"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("time grid needs at least one step".into()));
        }
        Ok(Self { t0, t1, n })
    }

    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.n as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.n {
            self.t1
        } else {
            self.t0 + self.step() * k as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|k| self.node(k))
    }
}
