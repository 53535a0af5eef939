//! Determining-equation residuals certifying a generating function as a
//! contact symmetry of an evolution-type equation `u_t + H = 0`.
//!
//! The residual of a generator `Omega(t, x, u, u_x)` is
//!
//! ```text
//! R = Omega_t - H Omega_u + D_x(Omega) H_ux + D_xx(Omega) H_uxx
//!     - D_x(H) Omega_ux
//! ```
//!
//! with `D_x H = H_x + u_x H_u + u_xx H_ux + u_xxx H_uxx`. A generator is a
//! symmetry exactly when `R` vanishes identically on the jet space, and the
//! residual is linear in `Omega`, so scanning `R` over a sampling box is a
//! sound certification procedure.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{
    total_derivative_x, total_derivative_xx, Coord, CoordSet, Exactness, JetPoint,
    SmoothField,
};
use crate::merton::{self, CoefficientPath, MertonParams};

/// An evolution equation `u_t + H(t, x, u, u_x, u_xx) = 0`.
#[derive(Clone)]
pub struct EvolutionEquation {
    hamiltonian: SmoothField,
    label: String,
    domain: Option<Arc<dyn Fn(&JetPoint) -> std::result::Result<(), String> + Send + Sync>>,
}

impl EvolutionEquation {
    pub fn new(hamiltonian: SmoothField, label: impl Into<String>) -> Result<Self> {
        if !hamiltonian.arity().is_subset_of(CoordSet::evolution()) {
            return Err(Error::Capability(
                "Hamiltonian must depend only on (t, x, u, u_x, u_xx)".into(),
            ));
        }
        Ok(Self { hamiltonian, label: label.into(), domain: None })
    }

    pub fn with_domain<D>(mut self, domain: D) -> Self
    where
        D: Fn(&JetPoint) -> std::result::Result<(), String> + Send + Sync + 'static,
    {
        self.domain = Some(Arc::new(domain));
        self
    }

    pub fn hamiltonian(&self) -> &SmoothField {
        &self.hamiltonian
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn check_domain(&self, p: &JetPoint) -> Result<()> {
        if let Some(d) = &self.domain {
            d(p).map_err(Error::Domain)?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for EvolutionEquation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EvolutionEquation")
            .field("label", &self.label)
            .finish()
    }
}

/// Evaluates the determining residual of `omega` for `eq` at one jet point.
pub fn determining_residual(
    omega: &SmoothField,
    eq: &EvolutionEquation,
    p: &JetPoint,
) -> Result<f64> {
    eq.check_domain(p)?;
    if !omega.arity().is_subset_of(CoordSet::generator()) {
        return Err(Error::Capability(
            "generator must depend only on (t, x, u, u_x)".into(),
        ));
    }
    let h = eq.hamiltonian.as_ref();
    let h_val = h.value(p);
    let h_x = h.partial(Coord::X, p);
    let h_u = h.partial(Coord::U, p);
    let h_ux = h.partial(Coord::Ux, p);
    let h_uxx = h.partial(Coord::Uxx, p);
    let dx_h = h_x + p.u_x * h_u + p.u_xx * h_ux + p.u_xxx * h_uxx;

    let dx_omega = total_derivative_x(omega.as_ref(), p)?;
    let dxx_omega = total_derivative_xx(omega.as_ref(), p)?;

    let r = omega.partial(Coord::T, p) - h_val * omega.partial(Coord::U, p)
        + dx_omega * h_ux
        + dxx_omega * h_uxx
        - dx_h * omega.partial(Coord::Ux, p);
    if !r.is_finite() {
        return Err(Error::NumericDomain {
            op: "determining_residual",
            what: format!("residual is {r} at {p:?}"),
        });
    }
    Ok(r)
}

/// First-order symmetry condition for a stationary Hamilton-Jacobi equation:
/// the Poisson bracket `Omega_x H_ux - Omega_ux H_x`.
pub fn hj_symmetry_residual(
    omega: &SmoothField,
    hamiltonian: &SmoothField,
    p: &JetPoint,
) -> Result<f64> {
    let first = CoordSet::of(&[Coord::X, Coord::Ux]);
    if !omega.arity().is_subset_of(first) || !hamiltonian.arity().is_subset_of(first) {
        return Err(Error::Capability(
            "hj_symmetry_residual expects fields on (x, u_x)".into(),
        ));
    }
    let r = omega.partial(Coord::X, p) * hamiltonian.partial(Coord::Ux, p)
        - omega.partial(Coord::Ux, p) * hamiltonian.partial(Coord::X, p);
    if !r.is_finite() {
        return Err(Error::NumericDomain {
            op: "hj_symmetry_residual",
            what: format!("residual is {r}"),
        });
    }
    Ok(r)
}

/// Uniform sampling box over the third-order jet.
#[derive(Debug, Clone, Serialize)]
pub struct JetSamplingBox {
    pub t: (f64, f64),
    pub x: (f64, f64),
    pub u: (f64, f64),
    pub u_x: (f64, f64),
    pub u_xx: (f64, f64),
    pub u_xxx: (f64, f64),
    pub samples: usize,
    pub seed: u64,
}

impl JetSamplingBox {
    /// Default certification box for the wealth-allocation equation:
    /// strictly inside `u_x > 0`, `u_xx < 0`.
    pub fn merton_default(horizon: f64) -> Self {
        Self {
            t: (0.0, horizon),
            x: (0.5, 2.0),
            u: (-5.0, 5.0),
            u_x: (0.2, 3.0),
            u_xx: (-3.0, -0.2),
            u_xxx: (-1.0, 1.0),
            samples: 512,
            seed: 42,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        for (name, (lo, hi)) in [
            ("t", self.t),
            ("x", self.x),
            ("u", self.u),
            ("u_x", self.u_x),
            ("u_xx", self.u_xx),
            ("u_xxx", self.u_xxx),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("empty {name} range")));
            }
        }
        Ok(())
    }

    /// The sampled points; a fixed seed makes scans reproducible.
    pub fn sample_points(&self) -> Result<Vec<JetPoint>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut draw = |(lo, hi): (f64, f64)| -> f64 {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..hi)
            }
        };
        Ok((0..self.samples)
            .map(|_| {
                JetPoint::new(
                    draw(self.t),
                    draw(self.x),
                    draw(self.u),
                    draw(self.u_x),
                    draw(self.u_xx),
                    draw(self.u_xxx),
                )
            })
            .collect())
    }
}

/// Summary of a residual scan.
#[derive(Debug, Clone, Serialize)]
pub struct DeterminingReport {
    pub n_points: usize,
    pub max_abs_residual: f64,
    pub rms_residual: f64,
    pub worst_point: JetPoint,
    /// Per-equation maxima when the three-equation wealth system is scanned.
    pub per_equation: Option<[f64; 3]>,
}

/// Scans the determining residual over a sampling box.
pub fn residual_scan(
    omega: &SmoothField,
    eq: &EvolutionEquation,
    sampling: &JetSamplingBox,
) -> Result<DeterminingReport> {
    let points = sampling.sample_points()?;
    let residuals: Vec<f64> = points
        .par_iter()
        .map(|p| determining_residual(omega, eq, p))
        .collect::<Result<Vec<_>>>()?;

    // Reduction in point-index order keeps the report independent of the
    // worker count.
    let mut max_abs = 0.0_f64;
    let mut worst = points[0];
    let mut sum_sq = 0.0_f64;
    for (p, r) in points.iter().zip(&residuals) {
        let a = r.abs();
        sum_sq += r * r;
        if a > max_abs {
            max_abs = a;
            worst = *p;
        }
    }
    Ok(DeterminingReport {
        n_points: points.len(),
        max_abs_residual: max_abs,
        rms_residual: (sum_sq / points.len() as f64).sqrt(),
        worst_point: worst,
        per_equation: None,
    })
}

/// Residual tolerance appropriate for a generator's derivative scheme:
/// `1e-8` for exact fields, `1e-4` for finite-difference ones.
pub fn residual_tolerance(omega: &SmoothField) -> f64 {
    match omega.exactness() {
        Exactness::Exact => 1e-8,
        Exactness::FiniteDifference => 1e-4,
    }
}

/// The three determining equations of the wealth-allocation problem,
/// evaluated at one point. The single residual of
/// [`determining_residual`] decomposes as
/// `eq1 + eq2 * u_x / u_xx + eq3 * u_x^2 / u_xx^2`.
pub fn merton_determining_system(
    omega: &SmoothField,
    params: &MertonParams,
    p: &JetPoint,
) -> Result<[f64; 3]> {
    if p.u_x <= 0.0 {
        return Err(Error::Domain("u_x must be positive".into()));
    }
    if p.u_xx >= 0.0 {
        return Err(Error::Domain("u_xx must be negative".into()));
    }
    let delta = merton::delta(params, p.t)?;
    let hv = merton::h_v(params, p.t, p.u_x)?;
    let hv_ux = merton::h_v_d_ux(params, p.t, p.u_x)?;
    let k = hv + params.r * p.x * p.u_x;
    let k_ux = hv_ux + params.r * p.x;
    let k_x = params.r * p.u_x;

    let om = omega.as_ref();
    let om_t = om.partial(Coord::T, p);
    let om_x = om.partial(Coord::X, p);
    let om_u = om.partial(Coord::U, p);
    let om_ux = om.partial(Coord::Ux, p);
    let om_uxux = om.partial2(Coord::Ux, Coord::Ux, p);
    let om_uux = om.partial2(Coord::U, Coord::Ux, p);
    let om_uxx = om.partial2(Coord::Ux, Coord::X, p);
    let om_uu = om.partial2(Coord::U, Coord::U, p);
    let om_ux_ = om.partial2(Coord::U, Coord::X, p);
    let om_xx = om.partial2(Coord::X, Coord::X, p);

    let eq1 = 0.5 * delta * p.u_x * p.u_x * om_uxux + p.u_x * om_u * k_ux + om_x * k_ux
        - om_u * k
        - om_ux * k_x
        + om_t;
    let eq2 = delta * p.u_x * p.u_x * om_uux + delta * p.u_x * om_uxx - delta * om_x;
    let eq3 = 0.5 * delta * p.u_x * p.u_x * om_uu + delta * p.u_x * om_ux_
        + 0.5 * delta * om_xx;
    for (i, v) in [eq1, eq2, eq3].iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NumericDomain {
                op: "merton_determining_system",
                what: format!("equation {} is {v}", i + 1),
            });
        }
    }
    Ok([eq1, eq2, eq3])
}

/// Pathwise determining residual: the deterministic residual with the
/// market intensity `delta(t)` read from a tabulated coefficient path
/// (linear interpolation between nodes).
pub fn shjb_residual_pathwise(
    omega: &SmoothField,
    params: &MertonParams,
    path: &CoefficientPath,
    p: &JetPoint,
) -> Result<f64> {
    let (t0, t1) = path.time_range();
    if p.t < t0 || p.t > t1 {
        return Err(Error::Range(format!(
            "t = {} outside the coefficient path grid [{t0}, {t1}]",
            p.t
        )));
    }
    let pathwise = params.clone().with_coefficients(merton::Coefficients::Path(path.clone()));
    let eq = merton::merton_hamiltonian(&pathwise)?;
    determining_residual(omega, &eq, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{add, constant, coordinate, exact_field, product, scale};
    use approx::assert_relative_eq;

    /// Free-particle Hamilton-Jacobi equation `u_t + u_x^2 / 2 = 0`.
    fn free_particle() -> EvolutionEquation {
        let h = exact_field(
            CoordSet::of(&[Coord::Ux]),
            |p| 0.5 * p.u_x * p.u_x,
            |c, p| if c == Coord::Ux { p.u_x } else { 0.0 },
            |a, b, _| if a == Coord::Ux && b == Coord::Ux { 1.0 } else { 0.0 },
        );
        EvolutionEquation::new(h, "free-particle-hj").unwrap()
    }

    #[test]
    fn ux_generates_translation_symmetry_of_free_particle() {
        let eq = free_particle();
        let omega = coordinate(Coord::Ux);
        let p = JetPoint::new(0.4, 1.3, 0.7, 0.9, -0.6, 0.8);
        let r = determining_residual(&omega, &eq, &p).unwrap();
        assert_relative_eq!(r, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_generator_has_zero_residual_when_h_is_u_free() {
        let eq = free_particle();
        let omega = constant(3.0);
        for s in 0..20 {
            let p = JetPoint::new(
                0.1 * s as f64,
                1.0 + 0.05 * s as f64,
                -0.3,
                0.5 + 0.01 * s as f64,
                -1.0,
                0.2,
            );
            assert_eq!(determining_residual(&omega, &eq, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn residual_is_linear_in_the_generator() {
        let eq = free_particle();
        let om1 = product(coordinate(Coord::X), coordinate(Coord::Ux));
        let om2 = coordinate(Coord::U);
        let both = add(vec![scale(2.5, om1.clone()), scale(-1.5, om2.clone())]);
        let p = JetPoint::new(0.2, 0.8, -0.1, 1.4, -0.9, 0.5);
        let r1 = determining_residual(&om1, &eq, &p).unwrap();
        let r2 = determining_residual(&om2, &eq, &p).unwrap();
        let r = determining_residual(&both, &eq, &p).unwrap();
        assert_relative_eq!(r, 2.5 * r1 - 1.5 * r2, max_relative = 1e-10);
    }

    #[test]
    fn hj_residual_examples() {
        // H = H(u_x) only, Omega = -u_x -> 0.
        let h = exact_field(
            CoordSet::of(&[Coord::Ux]),
            |p| p.u_x.powi(3),
            |c, p| if c == Coord::Ux { 3.0 * p.u_x * p.u_x } else { 0.0 },
            |_, _, p| 6.0 * p.u_x,
        );
        let omega = scale(-1.0, coordinate(Coord::Ux));
        let p = JetPoint::new(0.0, 1.0, 0.0, 0.7, 0.0, 0.0);
        assert_eq!(hj_symmetry_residual(&omega, &h, &p).unwrap(), 0.0);

        // H = u_x^2/2 + x, Omega = -u_x -> 1.
        let h = exact_field(
            CoordSet::of(&[Coord::X, Coord::Ux]),
            |p| 0.5 * p.u_x * p.u_x + p.x,
            |c, p| match c {
                Coord::Ux => p.u_x,
                Coord::X => 1.0,
                _ => 0.0,
            },
            |a, b, _| if a == Coord::Ux && b == Coord::Ux { 1.0 } else { 0.0 },
        );
        assert_relative_eq!(hj_symmetry_residual(&omega, &h, &p).unwrap(), 1.0);

        // Omega constant -> 0.
        let omega = constant(9.0);
        assert_eq!(hj_symmetry_residual(&omega, &h, &p).unwrap(), 0.0);
    }

    #[test]
    fn scan_is_deterministic() {
        let eq = free_particle();
        let omega = product(coordinate(Coord::X), coordinate(Coord::Ux));
        let sampling = JetSamplingBox {
            t: (0.0, 1.0),
            x: (0.5, 2.0),
            u: (-1.0, 1.0),
            u_x: (0.2, 3.0),
            u_xx: (-3.0, -0.2),
            u_xxx: (-1.0, 1.0),
            samples: 64,
            seed: 9,
        };
        let a = residual_scan(&omega, &eq, &sampling).unwrap();
        let b = residual_scan(&omega, &eq, &sampling).unwrap();
        assert_eq!(a.max_abs_residual, b.max_abs_residual);
        assert_eq!(a.rms_residual, b.rms_residual);
        assert_eq!(a.worst_point, b.worst_point);
    }

    #[test]
    fn scan_rejects_empty_sampling() {
        let eq = free_particle();
        let omega = constant(0.0);
        let mut sampling = JetSamplingBox::merton_default(1.0);
        sampling.samples = 0;
        assert!(residual_scan(&omega, &eq, &sampling).is_err());
    }

    #[test]
    fn report_invariants() {
        let eq = free_particle();
        let omega = product(coordinate(Coord::X), coordinate(Coord::Ux));
        let sampling = JetSamplingBox {
            samples: 128,
            ..JetSamplingBox::merton_default(1.0)
        };
        let rep = residual_scan(&omega, &eq, &sampling).unwrap();
        assert!(rep.max_abs_residual >= rep.rms_residual * 0.0);
        let worst = determining_residual(&omega, &eq, &rep.worst_point).unwrap();
        assert_relative_eq!(worst.abs(), rep.max_abs_residual);
    }
}
