//! Ansatz-reduced value functions.
//!
//! Log utility: `U(t, x) = a(t) log x + b(t)` with
//!
//! ```text
//! a(t) = 1 + (e^{-rho t} - e^{-rho T}) / rho,            a(T) = 1
//! b'   = e^{-rho t} (log a + rho t + 1) - delta a / 2 - r a,   b(T) = 0
//! ```
//!
//! Power utility: `U(t, x) = f(t) x^theta / theta` with the Bernoulli
//! reduction (obtained by substituting the ansatz into `u_t + H = 0`)
//!
//! ```text
//! f' = theta (delta / (2 (theta - 1)) - r) f
//!      + (theta - 1) e^{rho t / (theta - 1)} f^{theta / (theta - 1)},  f(T) = 1
//! ```
//!
//! where the forcing term is absent when consumption is disabled. The
//! reduction is certified against the full PDE by [`pde_residual_max`].

use crate::error::{Error, Result};
use crate::jet::JetPoint;
use crate::merton::{merton_hamiltonian, MertonParams, Utility};
use crate::numerics::{ode_rk4, Direction, OdeTable, TimeGrid};

#[derive(Debug, Clone)]
enum Ansatz {
    Log { a: OdeTable, b: OdeTable },
    Power { theta: f64, f: OdeTable },
}

/// Ansatz-reduced classical solution of the wealth HJB equation.
#[derive(Debug, Clone)]
pub struct ValueFunction {
    ansatz: Ansatz,
    horizon: f64,
    params_hash: u64,
}

impl ValueFunction {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn params_hash(&self) -> u64 {
        self.params_hash
    }

    pub fn u(&self, t: f64, x: f64) -> f64 {
        match &self.ansatz {
            Ansatz::Log { a, b } => a.eval_component(0, t) * x.ln() + b.eval_component(0, t),
            Ansatz::Power { theta, f } => {
                f.eval_component(0, t) * x.powf(*theta) / theta
            }
        }
    }

    pub fn u_x(&self, t: f64, x: f64) -> f64 {
        match &self.ansatz {
            Ansatz::Log { a, .. } => a.eval_component(0, t) / x,
            Ansatz::Power { theta, f } => f.eval_component(0, t) * x.powf(theta - 1.0),
        }
    }

    pub fn u_xx(&self, t: f64, x: f64) -> f64 {
        match &self.ansatz {
            Ansatz::Log { a, .. } => -a.eval_component(0, t) / (x * x),
            Ansatz::Power { theta, f } => {
                f.eval_component(0, t) * (theta - 1.0) * x.powf(theta - 2.0)
            }
        }
    }

    pub fn u_xxx(&self, t: f64, x: f64) -> f64 {
        match &self.ansatz {
            Ansatz::Log { a, .. } => 2.0 * a.eval_component(0, t) / (x * x * x),
            Ansatz::Power { theta, f } => {
                f.eval_component(0, t) * (theta - 1.0) * (theta - 2.0) * x.powf(theta - 3.0)
            }
        }
    }

    pub fn u_t(&self, t: f64, x: f64) -> f64 {
        match &self.ansatz {
            Ansatz::Log { a, b } => {
                a.deriv_component(0, t) * x.ln() + b.deriv_component(0, t)
            }
            Ansatz::Power { theta, f } => {
                f.deriv_component(0, t) * x.powf(*theta) / theta
            }
        }
    }

    /// Third-order jet of the solution at `(t, x)`.
    pub fn jet(&self, t: f64, x: f64) -> JetPoint {
        JetPoint::new(
            t,
            x,
            self.u(t, x),
            self.u_x(t, x),
            self.u_xx(t, x),
            self.u_xxx(t, x),
        )
    }

    /// Log coefficient `a(t)`; only defined for the log ansatz.
    pub fn log_coefficient_a(&self, t: f64) -> Option<f64> {
        match &self.ansatz {
            Ansatz::Log { a, .. } => Some(a.eval_component(0, t)),
            _ => None,
        }
    }

    /// Power coefficient `f(t)`; only defined for the power ansatz.
    pub fn power_coefficient_f(&self, t: f64) -> Option<f64> {
        match &self.ansatz {
            Ansatz::Power { f, .. } => Some(f.eval_component(0, t)),
            _ => None,
        }
    }

    /// Strict concavity `U_xx < 0` on a `(t, x)` verification grid.
    pub fn check_concavity(&self, nt: usize, x_range: (f64, f64), nx: usize) -> Result<()> {
        for i in 0..=nt {
            let t = self.horizon * i as f64 / nt as f64;
            for j in 0..=nx {
                let x = x_range.0 + (x_range.1 - x_range.0) * j as f64 / nx as f64;
                if !(self.u_xx(t, x) < 0.0) {
                    return Err(Error::Invariant(format!(
                        "U_xx({t}, {x}) = {} is not negative",
                        self.u_xx(t, x)
                    )));
                }
            }
        }
        Ok(())
    }
}

fn log_a_closed_form(rho: f64, horizon: f64, t: f64) -> f64 {
    if rho.abs() < 1e-12 {
        1.0 + (horizon - t)
    } else {
        1.0 + ((-rho * t).exp() - (-rho * horizon).exp()) / rho
    }
}

/// Solves the reduced coefficient ODEs backward from the terminal condition.
pub fn solve_value_function(params: &MertonParams, time_steps: usize) -> Result<ValueFunction> {
    params.validate()?;
    if time_steps < 16 {
        return Err(Error::InvalidArgument(
            "value function needs at least 16 time steps".into(),
        ));
    }
    let grid = TimeGrid::new(0.0, params.horizon, time_steps)?;
    let rho = params.rho;
    let horizon = params.horizon;

    let ansatz = match params.utility {
        Utility::Log => {
            let a_of = move |t: f64| log_a_closed_form(rho, horizon, t);
            let a = OdeTable::tabulate(
                grid,
                1,
                |t, out| out[0] = a_of(t),
                |t, out| out[0] = -(-rho * t).exp(),
            );
            let p = params.clone();
            let b = ode_rk4(
                move |t, _y, dy| {
                    let a = a_of(t);
                    dy[0] = (-rho * t).exp() * (a.ln() + rho * t + 1.0)
                        - 0.5 * p.delta_unchecked(t) * a
                        - p.r * a;
                    Ok(())
                },
                &[0.0],
                grid,
                Direction::Backward,
            )?;
            Ansatz::Log { a, b }
        }
        Utility::Power { theta } | Utility::PowerNoConsumption { theta } => {
            let consumption = matches!(params.utility, Utility::Power { .. });
            let p = params.clone();
            let f = ode_rk4(
                move |t, y, dy| {
                    let f = y[0];
                    if !(f > 0.0) {
                        return Err(Error::ReductionFailure(format!(
                            "power ansatz coefficient f({t}) = {f} left (0, inf)"
                        )));
                    }
                    let linear = theta * (p.delta_unchecked(t) / (2.0 * (theta - 1.0)) - p.r);
                    dy[0] = linear * f;
                    if consumption {
                        dy[0] += (theta - 1.0)
                            * (rho * t / (theta - 1.0)).exp()
                            * f.powf(theta / (theta - 1.0));
                    }
                    Ok(())
                },
                &[1.0],
                grid,
                Direction::Backward,
            )?;
            for k in 0..=grid.n {
                if !(f.node_values(k)[0] > 0.0) {
                    return Err(Error::ReductionFailure(
                        "power ansatz coefficient is not positive".into(),
                    ));
                }
            }
            Ansatz::Power { theta, f }
        }
    };

    let vf = ValueFunction {
        ansatz,
        horizon,
        params_hash: params.hash(),
    };
    vf.check_concavity(16, (0.5, 2.0), 16)?;
    Ok(vf)
}

/// Max of `|U_t + H(t, x, U_x, U_xx)|` over an `(nt + 1) x (nx + 1)` grid.
pub fn pde_residual_max(
    vf: &ValueFunction,
    params: &MertonParams,
    nt: usize,
    nx: usize,
    x_range: (f64, f64),
) -> Result<f64> {
    let eq = merton_hamiltonian(params)?;
    let mut max = 0.0_f64;
    for i in 0..=nt {
        let t = vf.horizon() * i as f64 / nt as f64;
        for j in 0..=nx {
            let x = x_range.0 + (x_range.1 - x_range.0) * j as f64 / nx as f64;
            let jet = vf.jet(t, x);
            eq.check_domain(&jet)?;
            let r = vf.u_t(t, x) + eq.hamiltonian().value(&jet);
            if !r.is_finite() {
                return Err(Error::NumericDomain {
                    op: "pde_residual_max",
                    what: format!("residual is {r} at t={t}, x={x}"),
                });
            }
            max = max.max(r.abs());
        }
    }
    Ok(max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merton::Coefficients;
    use approx::assert_relative_eq;

    #[test]
    fn log_terminal_conditions() {
        let params = MertonParams::p0(Utility::Log);
        let vf = solve_value_function(&params, 64).unwrap();
        assert_relative_eq!(vf.log_coefficient_a(1.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(vf.u(1.0, 1.7), 1.7_f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn log_a_at_zero_matches_closed_form() {
        let params = MertonParams::p0(Utility::Log);
        let vf = solve_value_function(&params, 64).unwrap();
        assert_relative_eq!(
            vf.log_coefficient_a(0.0).unwrap(),
            1.9516258196404048,
            epsilon = 1e-9
        );
    }

    #[test]
    fn power_pde_residual_small() {
        let params = MertonParams::p0(Utility::Power { theta: 0.5 });
        let vf = solve_value_function(&params, 256).unwrap();
        let res = pde_residual_max(&vf, &params, 50, 40, (0.5, 2.0)).unwrap();
        assert!(res <= 1e-6, "pde residual {res}");
    }

    #[test]
    fn log_pde_residual_small() {
        let params = MertonParams::p0(Utility::Log);
        let vf = solve_value_function(&params, 256).unwrap();
        let res = pde_residual_max(&vf, &params, 50, 40, (0.5, 2.0)).unwrap();
        assert!(res <= 1e-6, "pde residual {res}");
    }

    #[test]
    fn power_identity_x_ux_equals_theta_u() {
        let params = MertonParams::p0(Utility::Power { theta: 0.5 });
        let vf = solve_value_function(&params, 64).unwrap();
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            for j in 0..=20 {
                let x = 0.5 + 1.5 * j as f64 / 20.0;
                assert_relative_eq!(
                    x * vf.u_x(t, x),
                    0.5 * vf.u(t, x),
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn concavity_holds_on_grid() {
        for utility in [Utility::Log, Utility::Power { theta: 0.5 }] {
            let params = MertonParams::p0(utility);
            let vf = solve_value_function(&params, 64).unwrap();
            vf.check_concavity(32, (0.25, 4.0), 32).unwrap();
        }
    }

    #[test]
    fn time_varying_coefficients_still_certify() {
        let params = MertonParams {
            coefficients: Coefficients::TimeVarying {
                mu: std::sync::Arc::new(|t| 0.03 + 0.01 * (3.0 * t).sin()),
                sigma: std::sync::Arc::new(|t| 0.25 + 0.05 * (2.0 * t).cos()),
                label: "wavy".into(),
            },
            ..MertonParams::p0(Utility::Power { theta: 0.5 })
        };
        let vf = solve_value_function(&params, 512).unwrap();
        let res = pde_residual_max(&vf, &params, 40, 30, (0.5, 2.0)).unwrap();
        assert!(res <= 1e-6, "pde residual {res}");
    }

    #[test]
    fn too_few_steps_rejected() {
        let params = MertonParams::p0(Utility::Log);
        assert!(solve_value_function(&params, 8).is_err());
    }
}
