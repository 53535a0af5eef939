//! Classical fixed-step RK4 with node-wise tabulation and cubic Hermite
//! interpolation between nodes. Backward solves integrate terminal-value
//! problems from `t1` down to `t0`; the table is always indexed by grid node.

use crate::error::{Error, Result};
use crate::numerics::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Tabulated ODE solution: values and slopes (`rhs` at the node) per node.
#[derive(Debug, Clone)]
pub struct OdeTable {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl OdeTable {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_values(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn node_slopes(&self, k: usize) -> &[f64] {
        &self.slopes[k * self.dim..(k + 1) * self.dim]
    }

    /// Interval index and normalized position for an interpolation query.
    /// Queries are clamped to the grid span (round-off guard).
    fn locate(&self, t: f64) -> (usize, f64) {
        let h = self.grid.step();
        let s = ((t - self.grid.t0) / h).clamp(0.0, self.grid.n as f64);
        let k = (s.floor() as usize).min(self.grid.n - 1);
        (k, s - k as f64)
    }

    /// Cubic Hermite value of component `i` at time `t`.
    pub fn eval_component(&self, i: usize, t: f64) -> f64 {
        let (k, s) = self.locate(t);
        let h = self.grid.step();
        let y0 = self.values[k * self.dim + i];
        let y1 = self.values[(k + 1) * self.dim + i];
        let d0 = self.slopes[k * self.dim + i];
        let d1 = self.slopes[(k + 1) * self.dim + i];
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * d1
    }

    /// First time derivative of the interpolant.
    pub fn deriv_component(&self, i: usize, t: f64) -> f64 {
        let (k, s) = self.locate(t);
        let h = self.grid.step();
        let y0 = self.values[k * self.dim + i];
        let y1 = self.values[(k + 1) * self.dim + i];
        let d0 = self.slopes[k * self.dim + i];
        let d1 = self.slopes[(k + 1) * self.dim + i];
        let s2 = s * s;
        ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * h * d0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * h * d1)
            / h
    }

    /// Second time derivative of the interpolant.
    pub fn second_deriv_component(&self, i: usize, t: f64) -> f64 {
        let (k, s) = self.locate(t);
        let h = self.grid.step();
        let y0 = self.values[k * self.dim + i];
        let y1 = self.values[(k + 1) * self.dim + i];
        let d0 = self.slopes[k * self.dim + i];
        let d1 = self.slopes[(k + 1) * self.dim + i];
        ((12.0 * s - 6.0) * y0
            + (6.0 * s - 4.0) * h * d0
            + (-12.0 * s + 6.0) * y1
            + (6.0 * s - 2.0) * h * d1)
            / (h * h)
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.eval_component(i, t);
        }
    }

    /// Builds a table directly from closed-form value/slope functions.
    pub fn tabulate<V, S>(grid: TimeGrid, dim: usize, value: V, slope: S) -> Self
    where
        V: Fn(f64, &mut [f64]),
        S: Fn(f64, &mut [f64]),
    {
        let mut values = vec![0.0; (grid.n + 1) * dim];
        let mut slopes = vec![0.0; (grid.n + 1) * dim];
        for k in 0..=grid.n {
            let t = grid.node(k);
            value(t, &mut values[k * dim..(k + 1) * dim]);
            slope(t, &mut slopes[k * dim..(k + 1) * dim]);
        }
        Self { grid, dim, values, slopes }
    }
}

/// Fixed-step classical RK4.
///
/// `Forward` starts from `y0` at `t0`; `Backward` starts from `y0` at `t1`
/// and integrates back. A non-finite state aborts with the last good node.
pub fn ode_rk4<F>(
    mut rhs: F,
    y0: &[f64],
    grid: TimeGrid,
    direction: Direction,
) -> Result<OdeTable>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = y0.len();
    let n = grid.n;
    let mut values = vec![0.0; (n + 1) * dim];
    let mut slopes = vec![0.0; (n + 1) * dim];
    let h = match direction {
        Direction::Forward => grid.step(),
        Direction::Backward => -grid.step(),
    };
    let start = match direction {
        Direction::Forward => 0,
        Direction::Backward => n,
    };

    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut stage = vec![0.0; dim];

    let store = |values: &mut Vec<f64>, node: usize, y: &[f64]| {
        values[node * dim..(node + 1) * dim].copy_from_slice(y);
    };

    store(&mut values, start, &y);
    rhs(grid.node(start), &y, &mut k1)?;
    store(&mut slopes, start, &k1);

    for step in 0..n {
        let node = match direction {
            Direction::Forward => step,
            Direction::Backward => n - step,
        };
        let next = match direction {
            Direction::Forward => node + 1,
            Direction::Backward => node - 1,
        };
        let t = grid.node(node);
        rhs(t, &y, &mut k1)?;
        for i in 0..dim {
            stage[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &stage, &mut k2)?;
        for i in 0..dim {
            stage[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &stage, &mut k3)?;
        for i in 0..dim {
            stage[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &stage, &mut k4)?;
        for i in 0..dim {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::OdeBlowUp { t: grid.node(next), node });
        }
        store(&mut values, next, &y);
        rhs(grid.node(next), &y, &mut k1)?;
        store(&mut slopes, next, &k1);
    }

    Ok(OdeTable { grid, dim, values, slopes })
}
