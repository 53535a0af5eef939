//! Closed forms of the optimal-portfolio problem: market coefficients,
//! isoelastic utilities, optimal feedback controls, the reduced Hamiltonian,
//! the ansatz value function, and the contact-symmetry families.
//!
//! The wealth SDE is
//!
//! ```text
//! dX = ((gamma (mu - r) + r) X - c) dt + X gamma sigma dW
//! ```
//!
//! and after maximizing over controls the value function solves
//! `u_t + H = 0` with
//!
//! ```text
//! H(t, x, u_x, u_xx) = -delta(t)/2 * u_x^2 / u_xx + h_V(t, u_x) + r x u_x,
//! delta(t) = (mu(t) - r)^2 / sigma(t)^2.
//! ```

mod families;
mod value;

pub use families::{
    build_symmetry, sample_coefficient_path, CoefficientPath, Family, PathProvenance,
    PathSpec, SymmetryFamily,
};
pub use value::{pde_residual_max, solve_value_function, ValueFunction};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Coord, CoordSet, Field, JetPoint};
use crate::symmetry::EvolutionEquation;

/// Lower bound enforced on the volatility path.
pub const SIGMA_FLOOR: f64 = 1e-6;

/// Running utility of consumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Utility {
    /// `V(c) = log c`, terminal payoff `log x`.
    Log,
    /// `V(c) = c^theta / theta`, terminal payoff `x^theta / theta`.
    Power { theta: f64 },
    /// `V = 0` and consumption pinned to zero; terminal payoff
    /// `x^theta / theta`.
    PowerNoConsumption { theta: f64 },
}

impl Utility {
    pub fn theta(&self) -> Option<f64> {
        match self {
            Utility::Log => None,
            Utility::Power { theta } | Utility::PowerNoConsumption { theta } => Some(*theta),
        }
    }

    /// Terminal payoff `g(x)` matching the utility.
    pub fn terminal(&self, x: f64) -> f64 {
        match self {
            Utility::Log => x.ln(),
            Utility::Power { theta } | Utility::PowerNoConsumption { theta } => {
                x.powf(*theta) / theta
            }
        }
    }

    /// Running utility `V(c)`.
    pub fn running(&self, c: f64) -> f64 {
        match self {
            Utility::Log => c.ln(),
            Utility::Power { theta } => c.powf(*theta) / theta,
            Utility::PowerNoConsumption { .. } => 0.0,
        }
    }
}

/// Market drift and volatility as functions of time.
#[derive(Clone)]
pub enum Coefficients {
    Constant {
        mu: f64,
        sigma: f64,
    },
    /// Deterministic functions of time; `label` identifies them in hashes.
    TimeVarying {
        mu: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        sigma: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        label: String,
    },
    /// Tabulated path, linearly interpolated.
    Path(CoefficientPath),
}

impl std::fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coefficients::Constant { mu, sigma } => f
                .debug_struct("Constant")
                .field("mu", mu)
                .field("sigma", sigma)
                .finish(),
            Coefficients::TimeVarying { label, .. } => {
                f.debug_struct("TimeVarying").field("label", label).finish()
            }
            Coefficients::Path(p) => f.debug_struct("Path").field("nodes", &p.len()).finish(),
        }
    }
}

/// Market, utility, and horizon parameters.
#[derive(Debug, Clone)]
pub struct MertonParams {
    /// Risk-free rate (1/year).
    pub r: f64,
    /// Discount rate (1/year).
    pub rho: f64,
    pub coefficients: Coefficients,
    pub utility: Utility,
    /// Horizon `T` (years).
    pub horizon: f64,
    /// Initial wealth.
    pub x0: f64,
}

impl MertonParams {
    pub fn new(
        r: f64,
        rho: f64,
        coefficients: Coefficients,
        utility: Utility,
        horizon: f64,
        x0: f64,
    ) -> Result<Self> {
        let p = Self { r, rho, coefficients, utility, horizon, x0 };
        p.validate()?;
        Ok(p)
    }

    /// Reference parameter set used across the verification suites.
    pub fn p0(utility: Utility) -> Self {
        Self {
            r: 0.01,
            rho: 0.1,
            coefficients: Coefficients::Constant { mu: 0.03, sigma: 0.25 },
            utility,
            horizon: 1.0,
            x0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::Invariant("horizon must be positive".into()));
        }
        if !(self.rho >= 0.0) {
            return Err(Error::Invariant("discount rate must be nonnegative".into()));
        }
        if !(self.x0 > 0.0) {
            return Err(Error::Invariant("initial wealth must be positive".into()));
        }
        if let Some(theta) = self.utility.theta() {
            if !theta.is_finite() || theta.abs() < 1e-9 || (theta - 1.0).abs() < 1e-9 {
                return Err(Error::Invariant(
                    "power utility needs theta outside {0, 1}".into(),
                ));
            }
        }
        // sigma(t) >= floor, sampled along the horizon.
        for k in 0..=256 {
            let t = self.horizon * k as f64 / 256.0;
            if !(self.sigma(t) >= SIGMA_FLOOR) {
                return Err(Error::Invariant(format!(
                    "sigma({t}) = {} violates sigma >= {SIGMA_FLOOR}",
                    self.sigma(t)
                )));
            }
        }
        if let Coefficients::Path(path) = &self.coefficients {
            path.validate()?;
        }
        Ok(())
    }

    pub fn with_coefficients(mut self, coefficients: Coefficients) -> Self {
        self.coefficients = coefficients;
        self
    }

    pub fn mu(&self, t: f64) -> f64 {
        match &self.coefficients {
            Coefficients::Constant { mu, .. } => *mu,
            Coefficients::TimeVarying { mu, .. } => mu(t),
            Coefficients::Path(p) => p.mu_at(t),
        }
    }

    pub fn sigma(&self, t: f64) -> f64 {
        match &self.coefficients {
            Coefficients::Constant { sigma, .. } => *sigma,
            Coefficients::TimeVarying { sigma, .. } => sigma(t),
            Coefficients::Path(p) => p.sigma_at(t),
        }
    }

    pub(crate) fn delta_unchecked(&self, t: f64) -> f64 {
        match &self.coefficients {
            Coefficients::Path(p) => p.delta_at(t),
            _ => {
                let excess = self.mu(t) - self.r;
                let sigma = self.sigma(t);
                excess * excess / (sigma * sigma)
            }
        }
    }

    /// `d(delta)/dt`, exact for constant coefficients and piecewise-linear
    /// paths, central-difference otherwise.
    pub(crate) fn delta_deriv(&self, t: f64) -> f64 {
        match &self.coefficients {
            Coefficients::Constant { .. } => 0.0,
            Coefficients::Path(p) => p.delta_slope_at(t),
            Coefficients::TimeVarying { .. } => {
                let h = f64::EPSILON.cbrt() * t.abs().max(1.0);
                (self.delta_unchecked(t + h) - self.delta_unchecked(t - h)) / (2.0 * h)
            }
        }
    }

    /// Provenance hash over every parameter that affects computed objects.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv::new();
        h.f64(self.r).f64(self.rho).f64(self.horizon).f64(self.x0);
        match self.utility {
            Utility::Log => h.u64(1),
            Utility::Power { theta } => h.u64(2).f64(theta),
            Utility::PowerNoConsumption { theta } => h.u64(3).f64(theta),
        };
        match &self.coefficients {
            Coefficients::Constant { mu, sigma } => {
                h.u64(10).f64(*mu).f64(*sigma);
            }
            Coefficients::TimeVarying { label, .. } => {
                h.u64(11).bytes(label.as_bytes());
                for k in 0..=16 {
                    let t = self.horizon * k as f64 / 16.0;
                    h.f64(self.mu(t)).f64(self.sigma(t));
                }
            }
            Coefficients::Path(p) => {
                h.u64(12);
                for k in 0..p.len() {
                    h.f64(p.mu[k]).f64(p.sigma[k]);
                }
            }
        }
        h.finish()
    }
}

/// FNV-1a over primitive encodings; stable across runs.
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf29ce484222325)
    }
    fn bytes(&mut self, b: &[u8]) -> &mut Self {
        for &x in b {
            self.0 ^= x as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
        self
    }
    fn f64(&mut self, v: f64) -> &mut Self {
        let bits = v.to_bits();
        self.bytes(&bits.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> &mut Self {
        self.bytes(&v.to_le_bytes())
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// Market price-of-risk intensity `delta(t) = (mu(t) - r)^2 / sigma(t)^2`.
pub fn delta(params: &MertonParams, t: f64) -> Result<f64> {
    let sigma = params.sigma(t);
    if !(sigma >= SIGMA_FLOOR) {
        return Err(Error::Invariant(format!(
            "sigma({t}) = {sigma} violates sigma >= {SIGMA_FLOOR}"
        )));
    }
    Ok(params.delta_unchecked(t))
}

fn check_marginal(u_x: f64) -> Result<()> {
    if !(u_x > 0.0) {
        return Err(Error::Domain(format!("u_x = {u_x} must be positive")));
    }
    Ok(())
}

/// Fenchel transform of the discounted utility:
/// `h_V(t, p) = e^{-rho t} V((V')^{-1}(p e^{rho t})) - p (V')^{-1}(p e^{rho t})`.
pub fn h_v(params: &MertonParams, t: f64, u_x: f64) -> Result<f64> {
    check_marginal(u_x)?;
    Ok(match params.utility {
        Utility::Log => -(-params.rho * t).exp() * (u_x.ln() + params.rho * t + 1.0),
        Utility::Power { theta } => {
            let q = theta / (theta - 1.0);
            -(params.rho * t / (theta - 1.0)).exp() * u_x.powf(q) * (theta - 1.0) / theta
        }
        Utility::PowerNoConsumption { .. } => 0.0,
    })
}

/// `d h_V / d u_x`; equals `-c*` by the envelope theorem.
pub fn h_v_d_ux(params: &MertonParams, t: f64, u_x: f64) -> Result<f64> {
    check_marginal(u_x)?;
    Ok(match params.utility {
        Utility::Log => -(-params.rho * t).exp() / u_x,
        Utility::Power { theta } => {
            let q = theta / (theta - 1.0);
            -q * (params.rho * t / (theta - 1.0)).exp() * u_x.powf(q - 1.0) * (theta - 1.0)
                / theta
        }
        Utility::PowerNoConsumption { .. } => 0.0,
    })
}

/// Optimal interior controls at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalControls {
    pub consumption: f64,
    pub risky_fraction: f64,
    /// Advisory: whether the unclamped fraction lies in `[0, 1]`.
    pub risky_fraction_in_bounds: bool,
}

/// Interior maximizer `(c*, gamma*)` of the control Hamiltonian. Values are
/// not clamped to the admissible set; `risky_fraction_in_bounds` reports
/// whether `gamma*` is inside `[0, 1]`.
///
/// With `psi_x` supplied the fraction uses the random-field correction
/// `gamma* = -((mu - r) u_x + sigma psi_x) / (x u_xx sigma^2)`.
pub fn optimal_controls(
    params: &MertonParams,
    t: f64,
    x: f64,
    u_x: f64,
    u_xx: f64,
    psi_x: Option<f64>,
) -> Result<OptimalControls> {
    check_marginal(u_x)?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("x = {x} must be positive")));
    }
    if u_xx == 0.0 {
        return Err(Error::SingularControl(
            "u_xx = 0 makes the risky fraction singular".into(),
        ));
    }
    let consumption = match params.utility {
        Utility::Log => (-params.rho * t).exp() / u_x,
        Utility::Power { theta } => (u_x * (params.rho * t).exp()).powf(1.0 / (theta - 1.0)),
        Utility::PowerNoConsumption { .. } => 0.0,
    };
    let sigma = params.sigma(t);
    let numerator = (params.mu(t) - params.r) * u_x + sigma * psi_x.unwrap_or(0.0);
    let risky_fraction = -numerator / (x * u_xx * sigma * sigma);
    Ok(OptimalControls {
        consumption,
        risky_fraction,
        risky_fraction_in_bounds: (0.0..=1.0).contains(&risky_fraction),
    })
}

/// The reduced Hamiltonian as a smooth field with exact partials.
pub(crate) struct MertonHamiltonian {
    pub params: MertonParams,
}

impl MertonHamiltonian {
    fn delta(&self, t: f64) -> f64 {
        self.params.delta_unchecked(t)
    }

    fn hv(&self, t: f64, u_x: f64) -> [f64; 6] {
        // [h, h_t, h_ux, h_uxux, h_t_ux, h_tt]
        let rho = self.params.rho;
        match self.params.utility {
            Utility::Log => {
                let e = (-rho * t).exp();
                let l = u_x.ln();
                [
                    -e * (l + rho * t + 1.0),
                    rho * e * (l + rho * t),
                    -e / u_x,
                    e / (u_x * u_x),
                    rho * e / u_x,
                    rho * rho * e * (1.0 - l - rho * t),
                ]
            }
            Utility::Power { theta } => {
                let q = theta / (theta - 1.0);
                let lam = rho / (theta - 1.0);
                let eta = -(lam * t).exp() * (theta - 1.0) / theta;
                let pq = u_x.powf(q);
                [
                    eta * pq,
                    lam * eta * pq,
                    q * eta * pq / u_x,
                    q * (q - 1.0) * eta * pq / (u_x * u_x),
                    lam * q * eta * pq / u_x,
                    lam * lam * eta * pq,
                ]
            }
            Utility::PowerNoConsumption { .. } => [0.0; 6],
        }
    }
}

impl Field for MertonHamiltonian {
    fn arity(&self) -> CoordSet {
        CoordSet::of(&[Coord::T, Coord::X, Coord::Ux, Coord::Uxx])
    }

    fn value(&self, p: &JetPoint) -> f64 {
        let hv = self.hv(p.t, p.u_x);
        -0.5 * self.delta(p.t) * p.u_x * p.u_x / p.u_xx
            + hv[0]
            + self.params.r * p.x * p.u_x
    }

    fn partial(&self, c: Coord, p: &JetPoint) -> f64 {
        let delta = self.delta(p.t);
        match c {
            Coord::T => {
                let hv = self.hv(p.t, p.u_x);
                -0.5 * self.params.delta_deriv(p.t) * p.u_x * p.u_x / p.u_xx + hv[1]
            }
            Coord::X => self.params.r * p.u_x,
            Coord::U => 0.0,
            Coord::Ux => {
                let hv = self.hv(p.t, p.u_x);
                -delta * p.u_x / p.u_xx + hv[2] + self.params.r * p.x
            }
            Coord::Uxx => 0.5 * delta * p.u_x * p.u_x / (p.u_xx * p.u_xx),
        }
    }

    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64 {
        use Coord::*;
        let (a, b) = if (a as u8) <= (b as u8) { (a, b) } else { (b, a) };
        let delta = self.delta(p.t);
        let ddelta = self.params.delta_deriv(p.t);
        match (a, b) {
            (T, T) => {
                let hv = self.hv(p.t, p.u_x);
                let h = f64::EPSILON.cbrt() * p.t.abs().max(1.0);
                let dd2 = (self.params.delta_deriv(p.t + h)
                    - self.params.delta_deriv(p.t - h))
                    / (2.0 * h);
                -0.5 * dd2 * p.u_x * p.u_x / p.u_xx + hv[5]
            }
            (T, Ux) => {
                let hv = self.hv(p.t, p.u_x);
                -ddelta * p.u_x / p.u_xx + hv[4]
            }
            (T, Uxx) => 0.5 * ddelta * p.u_x * p.u_x / (p.u_xx * p.u_xx),
            (X, Ux) => self.params.r,
            (Ux, Ux) => {
                let hv = self.hv(p.t, p.u_x);
                -delta / p.u_xx + hv[3]
            }
            (Ux, Uxx) => delta * p.u_x / (p.u_xx * p.u_xx),
            (Uxx, Uxx) => -delta * p.u_x * p.u_x / (p.u_xx * p.u_xx * p.u_xx),
            _ => 0.0,
        }
    }
}

/// Registers the reduced Hamiltonian as an evolution equation
/// `u_t + H = 0` with domain `u_x > 0`, `u_xx < 0`.
pub fn merton_hamiltonian(params: &MertonParams) -> Result<EvolutionEquation> {
    params.validate()?;
    let time_range = match &params.coefficients {
        Coefficients::Path(p) => Some(p.time_range()),
        _ => None,
    };
    let field: Arc<dyn Field> = Arc::new(MertonHamiltonian { params: params.clone() });
    Ok(EvolutionEquation::new(field, "merton-hjb")?.with_domain(move |p| {
        if !(p.u_x > 0.0) {
            return Err(format!("u_x = {} violates u_x > 0", p.u_x));
        }
        if !(p.u_xx < 0.0) {
            return Err(format!("u_xx = {} violates u_xx < 0", p.u_xx));
        }
        if let Some((t0, t1)) = time_range {
            if p.t < t0 || p.t > t1 {
                return Err(format!("t = {} outside coefficient path [{t0}, {t1}]", p.t));
            }
        }
        Ok(())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delta_examples() {
        let p = MertonParams::p0(Utility::Log);
        assert_relative_eq!(delta(&p, 0.3).unwrap(), 0.0064, max_relative = 1e-12);

        let flat = MertonParams {
            coefficients: Coefficients::Constant { mu: 0.01, sigma: 0.25 },
            ..MertonParams::p0(Utility::Log)
        };
        assert_eq!(delta(&flat, 0.5).unwrap(), 0.0);

        let ramp = MertonParams {
            coefficients: Coefficients::TimeVarying {
                mu: Arc::new(|t| 0.01 + 0.02 * t),
                sigma: Arc::new(|_| 0.2),
                label: "ramp".into(),
            },
            horizon: 2.0,
            ..MertonParams::p0(Utility::Log)
        };
        assert_relative_eq!(delta(&ramp, 1.0).unwrap(), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn sigma_floor_is_enforced() {
        let bad = MertonParams {
            coefficients: Coefficients::Constant { mu: 0.03, sigma: -0.1 },
            ..MertonParams::p0(Utility::Log)
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn h_v_examples() {
        let log = MertonParams::p0(Utility::Log);
        assert_relative_eq!(h_v(&log, 0.0, 1.0).unwrap(), -1.0);

        let pow = MertonParams::p0(Utility::Power { theta: 0.5 });
        assert_relative_eq!(h_v(&pow, 0.0, 1.0).unwrap(), 1.0);

        let slow = MertonParams { horizon: 12.0, ..MertonParams::p0(Utility::Log) };
        assert_relative_eq!(
            h_v(&slow, 10.0, 1.0).unwrap(),
            -2.0 * (-1.0_f64).exp(),
            max_relative = 1e-12
        );

        assert!(h_v(&log, 0.0, -1.0).is_err());
    }

    #[test]
    fn h_v_envelope_derivative_is_minus_consumption() {
        for utility in [Utility::Log, Utility::Power { theta: 0.5 }] {
            let p = MertonParams::p0(utility);
            for (t, ux) in [(0.0, 1.0), (0.4, 0.7), (0.9, 2.3)] {
                let c = optimal_controls(&p, t, 1.0, ux, -1.0, None)
                    .unwrap()
                    .consumption;
                assert_relative_eq!(
                    h_v_d_ux(&p, t, ux).unwrap(),
                    -c,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn optimal_controls_examples() {
        let pow = MertonParams::p0(Utility::Power { theta: 0.5 });
        let c = optimal_controls(&pow, 0.0, 1.0, 1.0, -0.5, None).unwrap();
        assert_relative_eq!(c.consumption, 1.0);

        // With the power ansatz u_x = f x^{theta-1}, u_xx = f (theta-1) x^{theta-2}
        // the fraction is (mu - r) / ((1 - theta) sigma^2) = 0.64 at any state.
        let f = 1.2_f64;
        let x = 1.7_f64;
        let ux = f * x.powf(-0.5);
        let uxx = f * (-0.5) * x.powf(-1.5);
        let c = optimal_controls(&pow, 0.3, x, ux, uxx, None).unwrap();
        assert_relative_eq!(c.risky_fraction, 0.64, max_relative = 1e-12);
        assert!(c.risky_fraction_in_bounds);

        // psi_x = 0 reduces to the Markovian fraction.
        let c2 = optimal_controls(&pow, 0.3, x, ux, uxx, Some(0.0)).unwrap();
        assert_eq!(c.risky_fraction, c2.risky_fraction);

        assert!(optimal_controls(&pow, 0.0, 1.0, 1.0, 0.0, None).is_err());
        assert!(optimal_controls(&pow, 0.0, 1.0, -1.0, -1.0, None).is_err());
    }

    #[test]
    fn hamiltonian_value_example() {
        let pow = MertonParams::p0(Utility::Power { theta: 0.5 });
        let eq = merton_hamiltonian(&pow).unwrap();
        let p = JetPoint::new(0.0, 1.0, 0.0, 1.0, -0.5, 0.0);
        assert_relative_eq!(
            eq.hamiltonian().value(&p),
            1.0164,
            max_relative = 1e-12
        );
    }

    #[test]
    fn hamiltonian_reduces_and_is_homogeneous_without_k_terms() {
        let p = MertonParams {
            r: 0.0,
            coefficients: Coefficients::Constant { mu: 0.02, sigma: 0.25 },
            ..MertonParams::p0(Utility::PowerNoConsumption { theta: 0.5 })
        };
        let eq = merton_hamiltonian(&p).unwrap();
        let delta = delta(&p, 0.0).unwrap();
        let j = JetPoint::new(0.2, 1.3, 0.4, 0.9, -0.7, 0.0);
        assert_relative_eq!(
            eq.hamiltonian().value(&j),
            -0.5 * delta * j.u_x * j.u_x / j.u_xx,
            max_relative = 1e-12
        );
        for lam in [0.5, 2.0, 7.0] {
            let scaled = JetPoint::new(j.t, j.x, j.u, lam * j.u_x, lam * j.u_xx, 0.0);
            assert_relative_eq!(
                eq.hamiltonian().value(&scaled),
                lam * eq.hamiltonian().value(&j),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn hamiltonian_domain_errors() {
        let p = MertonParams::p0(Utility::Log);
        let eq = merton_hamiltonian(&p).unwrap();
        let bad = JetPoint::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        assert!(eq.check_domain(&bad).is_err());
        let bad = JetPoint::new(0.0, 1.0, 0.0, -1.0, -1.0, 0.0);
        assert!(eq.check_domain(&bad).is_err());
    }

    #[test]
    fn hamiltonian_partials_match_finite_differences() {
        use crate::jet::Field;
        let pow = MertonParams::p0(Utility::Power { theta: 0.5 });
        let log = MertonParams::p0(Utility::Log);
        for params in [pow, log] {
            let h = MertonHamiltonian { params };
            let p = JetPoint::new(0.37, 1.21, -0.4, 0.83, -1.3, 0.2);
            let fd = crate::jet::fd_partials(h.arity(), {
                let h = MertonHamiltonian { params: h.params.clone() };
                move |q: &JetPoint| h.value(q)
            });
            for c in [Coord::T, Coord::X, Coord::Ux, Coord::Uxx] {
                assert_relative_eq!(
                    h.partial(c, &p),
                    fd.partial(c, &p),
                    max_relative = 1e-6,
                    epsilon = 1e-9
                );
            }
            for (a, b) in [
                (Coord::Ux, Coord::Ux),
                (Coord::Ux, Coord::Uxx),
                (Coord::Uxx, Coord::Uxx),
                (Coord::T, Coord::Ux),
                (Coord::X, Coord::Ux),
                (Coord::T, Coord::T),
            ] {
                assert_relative_eq!(
                    h.partial2(a, b, &p),
                    fd.partial2(a, b, &p),
                    max_relative = 2e-4,
                    epsilon = 1e-7
                );
            }
        }
    }

    #[test]
    fn params_hash_distinguishes_parameter_sets() {
        let a = MertonParams::p0(Utility::Log);
        let b = MertonParams { r: 0.02, ..MertonParams::p0(Utility::Log) };
        let c = MertonParams::p0(Utility::Power { theta: 0.5 });
        assert_ne!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash(), MertonParams::p0(Utility::Log).hash());
    }
}
