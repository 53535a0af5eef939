//! Contact-symmetry families of the wealth HJB equation and their
//! construction.
//!
//! Each family is a template `Omega = base + G(t, u_x)` where `G` is a
//! linear combination of basis functions of `u_x` with time-dependent
//! coefficients:
//!
//! ```text
//! Omega1 = u - x u_x + G1       Omega2 = -u + G2
//! Omega3 = x u_x + G3           Omega4 = G4
//! ```
//!
//! The coefficient ODEs are never written down: `build_symmetry`
//! substitutes the ansatz into the determining residual, collects the basis
//! coefficients numerically at independent `u_x` samples, and integrates the
//! resulting linear system backward in time. The construction is certified
//! afterwards by a residual scan over the default sampling box, so any error
//! in the collected system is caught rather than propagated.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{
    add, coordinate, product, scale, Coord, CoordSet, Field, JetPoint, SmoothField,
};
use crate::merton::{Coefficients, MertonParams, Utility, SIGMA_FLOOR};
use crate::numerics::{ode_rk4, Direction, OdeTable, TimeGrid};
use crate::symmetry::{
    determining_residual, residual_scan, DeterminingReport, EvolutionEquation,
    JetSamplingBox,
};

/// The four symmetry families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    Omega1,
    Omega2,
    Omega3,
    Omega4,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Omega1,
        Family::Omega2,
        Family::Omega3,
        Family::Omega4,
    ];
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::Omega1 => "omega1",
            Family::Omega2 => "omega2",
            Family::Omega3 => "omega3",
            Family::Omega4 => "omega4",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "omega1" | "1" => Ok(Family::Omega1),
            "omega2" | "2" => Ok(Family::Omega2),
            "omega3" | "3" => Ok(Family::Omega3),
            "omega4" | "4" => Ok(Family::Omega4),
            other => Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Coefficient paths
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathProvenance {
    Deterministic,
    Sampled { seed: u64 },
}

/// Tabulated market coefficients with the intensity `delta` stored exactly
/// as `(mu_k - r)^2 / sigma_k^2`.
#[derive(Debug, Clone)]
pub struct CoefficientPath {
    grid: TimeGrid,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub delta: Vec<f64>,
    pub provenance: PathProvenance,
}

impl CoefficientPath {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn time_range(&self) -> (f64, f64) {
        (self.grid.t0, self.grid.t1)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.mu.len() != self.grid.n + 1
            || self.sigma.len() != self.grid.n + 1
            || self.delta.len() != self.grid.n + 1
        {
            return Err(Error::Invariant("path tables must match the grid".into()));
        }
        for (k, &s) in self.sigma.iter().enumerate() {
            if !(s >= SIGMA_FLOOR) {
                return Err(Error::Invariant(format!(
                    "sigma[{k}] = {s} violates sigma >= {SIGMA_FLOOR}"
                )));
            }
        }
        Ok(())
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let h = self.grid.step();
        let s = ((t - self.grid.t0) / h).clamp(0.0, self.grid.n as f64);
        let k = (s.floor() as usize).min(self.grid.n - 1);
        (k, s - k as f64)
    }

    fn interp(&self, table: &[f64], t: f64) -> f64 {
        let (k, w) = self.locate(t);
        table[k] * (1.0 - w) + table[k + 1] * w
    }

    pub fn mu_at(&self, t: f64) -> f64 {
        self.interp(&self.mu, t)
    }

    pub fn sigma_at(&self, t: f64) -> f64 {
        self.interp(&self.sigma, t)
    }

    pub fn delta_at(&self, t: f64) -> f64 {
        self.interp(&self.delta, t)
    }

    pub(crate) fn delta_slope_at(&self, t: f64) -> f64 {
        let (k, _) = self.locate(t);
        (self.delta[k + 1] - self.delta[k]) / self.grid.step()
    }
}

/// How to generate a coefficient path.
#[derive(Clone)]
pub enum PathSpec {
    Constant {
        mu: f64,
        sigma: f64,
    },
    Deterministic {
        mu: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        sigma: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// Volatility is the exponential of an Ornstein-Uhlenbeck path in
    /// `log sigma`, mean-reverting to `log sigma_mean`; drift stays constant.
    LogOuVolatility {
        mu: f64,
        sigma_mean: f64,
        reversion: f64,
        vol_of_vol: f64,
    },
}

/// Tabulates `(mu_k, sigma_k, delta_k)` on `grid`. Sampling is driven by a
/// seeded generator, so equal arguments give equal paths.
pub fn sample_coefficient_path(
    spec: &PathSpec,
    r: f64,
    grid: TimeGrid,
    seed: u64,
) -> Result<CoefficientPath> {
    let n = grid.n;
    let mut mu = Vec::with_capacity(n + 1);
    let mut sigma = Vec::with_capacity(n + 1);
    let provenance;
    match spec {
        PathSpec::Constant { mu: m, sigma: s } => {
            provenance = PathProvenance::Deterministic;
            for _ in 0..=n {
                mu.push(*m);
                sigma.push(*s);
            }
        }
        PathSpec::Deterministic { mu: mf, sigma: sf } => {
            provenance = PathProvenance::Deterministic;
            for k in 0..=n {
                let t = grid.node(k);
                mu.push(mf(t));
                sigma.push(sf(t));
            }
        }
        PathSpec::LogOuVolatility { mu: m, sigma_mean, reversion, vol_of_vol } => {
            provenance = PathProvenance::Sampled { seed };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let target = sigma_mean.ln();
            let h = grid.step();
            let mut y = target;
            for k in 0..=n {
                mu.push(*m);
                sigma.push(y.exp().max(SIGMA_FLOOR));
                if k < n {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    y += reversion * (target - y) * h + vol_of_vol * h.sqrt() * z;
                }
            }
        }
    }
    let delta: Vec<f64> = mu
        .iter()
        .zip(&sigma)
        .map(|(m, s)| (m - r) * (m - r) / (s * s))
        .collect();
    let path = CoefficientPath { grid, mu, sigma, delta, provenance };
    path.validate()?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Ansatz bases
// ---------------------------------------------------------------------------

/// Basis functions of `u_x` for the `G` parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Basis {
    One,
    Ux,
    LogUx,
    /// `u_x^q`.
    PowUx(f64),
}

impl Basis {
    fn value(&self, u_x: f64) -> f64 {
        match self {
            Basis::One => 1.0,
            Basis::Ux => u_x,
            Basis::LogUx => u_x.ln(),
            Basis::PowUx(q) => u_x.powf(*q),
        }
    }

    fn d1(&self, u_x: f64) -> f64 {
        match self {
            Basis::One => 0.0,
            Basis::Ux => 1.0,
            Basis::LogUx => 1.0 / u_x,
            Basis::PowUx(q) => q * u_x.powf(q - 1.0),
        }
    }

    fn d2(&self, u_x: f64) -> f64 {
        match self {
            Basis::One | Basis::Ux => 0.0,
            Basis::LogUx => -1.0 / (u_x * u_x),
            Basis::PowUx(q) => q * (q - 1.0) * u_x.powf(q - 2.0),
        }
    }

    fn label(&self) -> String {
        match self {
            Basis::One => "1".into(),
            Basis::Ux => "u_x".into(),
            Basis::LogUx => "log(u_x)".into(),
            Basis::PowUx(q) => format!("u_x^{q}"),
        }
    }
}

/// A basis function as a static field of `u_x` alone.
struct BasisField(Basis);

impl Field for BasisField {
    fn arity(&self) -> CoordSet {
        CoordSet::of(&[Coord::Ux])
    }
    fn value(&self, p: &JetPoint) -> f64 {
        self.0.value(p.u_x)
    }
    fn partial(&self, c: Coord, p: &JetPoint) -> f64 {
        if c == Coord::Ux {
            self.0.d1(p.u_x)
        } else {
            0.0
        }
    }
    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64 {
        if a == Coord::Ux && b == Coord::Ux {
            self.0.d2(p.u_x)
        } else {
            0.0
        }
    }
}

/// `phi_i(t) * B(u_x)` with the coefficient read from an ODE table.
struct PhiBasis {
    table: Arc<OdeTable>,
    component: usize,
    basis: Basis,
}

impl Field for PhiBasis {
    fn arity(&self) -> CoordSet {
        CoordSet::of(&[Coord::T, Coord::Ux])
    }
    fn value(&self, p: &JetPoint) -> f64 {
        self.table.eval_component(self.component, p.t) * self.basis.value(p.u_x)
    }
    fn partial(&self, c: Coord, p: &JetPoint) -> f64 {
        match c {
            Coord::T => {
                self.table.deriv_component(self.component, p.t) * self.basis.value(p.u_x)
            }
            Coord::Ux => {
                self.table.eval_component(self.component, p.t) * self.basis.d1(p.u_x)
            }
            _ => 0.0,
        }
    }
    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64 {
        let (a, b) = if (a as u8) <= (b as u8) { (a, b) } else { (b, a) };
        match (a, b) {
            (Coord::T, Coord::T) => {
                self.table.second_deriv_component(self.component, p.t)
                    * self.basis.value(p.u_x)
            }
            (Coord::T, Coord::Ux) => {
                self.table.deriv_component(self.component, p.t) * self.basis.d1(p.u_x)
            }
            (Coord::Ux, Coord::Ux) => {
                self.table.eval_component(self.component, p.t) * self.basis.d2(p.u_x)
            }
            _ => 0.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

/// A constructed symmetry family: the assembled generator, its coefficient
/// tables, and the certification report.
#[derive(Clone)]
pub struct SymmetryFamily {
    pub family: Family,
    pub omega: SmoothField,
    pub phi: Arc<OdeTable>,
    pub phi_labels: Vec<String>,
    pub report: DeterminingReport,
    pub params_hash: u64,
}

impl std::fmt::Debug for SymmetryFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetryFamily")
            .field("family", &self.family)
            .field("phi_labels", &self.phi_labels)
            .field("max_abs_residual", &self.report.max_abs_residual)
            .finish()
    }
}

fn family_base(family: Family) -> SmoothField {
    let x_ux = || product(coordinate(Coord::X), coordinate(Coord::Ux));
    match family {
        Family::Omega1 => add(vec![coordinate(Coord::U), scale(-1.0, x_ux())]),
        Family::Omega2 => scale(-1.0, coordinate(Coord::U)),
        Family::Omega3 => x_ux(),
        Family::Omega4 => crate::jet::constant(0.0),
    }
}

fn family_bases(family: Family, utility: Utility) -> Vec<Basis> {
    match (family, utility) {
        (Family::Omega4, _) => vec![Basis::One, Basis::Ux],
        (_, Utility::Log) => vec![Basis::One, Basis::LogUx],
        (_, Utility::Power { theta } | Utility::PowerNoConsumption { theta }) => {
            vec![Basis::PowUx(theta / (theta - 1.0))]
        }
    }
}

/// Terminal coefficients: zero for the forced families, one for the
/// homogeneous family so its canonical representative is nontrivial.
fn family_terminal(family: Family, m: usize) -> Vec<f64> {
    match family {
        Family::Omega4 => vec![1.0; m],
        _ => vec![0.0; m],
    }
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_small(n: usize, a: &mut [f64], b: &mut [f64]) -> Result<()> {
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[piv * n + col].abs() {
                piv = row;
            }
        }
        if a[piv * n + col].abs() < 1e-13 {
            return Err(Error::Basis(
                "rank-deficient basis collection system".into(),
            ));
        }
        if piv != col {
            for j in 0..n {
                a.swap(col * n + j, piv * n + j);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            for j in col..n {
                a[row * n + j] -= f * a[col * n + j];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for j in col + 1..n {
            s -= a[col * n + j] * b[j];
        }
        b[col] = s / a[col * n + col];
    }
    Ok(())
}

/// Collection points for the basis fit: fixed `u_x` samples, randomized
/// remaining coordinates so a non-closing ansatz cannot hide.
fn collection_points(n_basis: usize) -> Vec<JetPoint> {
    let k = n_basis + 4;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC011EC7);
    (0..k)
        .map(|i| {
            let s = i as f64 / (k - 1) as f64;
            let u_x = 0.25 * (2.85_f64 / 0.25).powf(s);
            JetPoint::new(
                0.0,
                rng.random_range(0.6..1.9),
                rng.random_range(-2.0..2.0),
                u_x,
                rng.random_range(-2.5..-0.3),
                rng.random_range(-0.9..0.9),
            )
        })
        .collect()
}

pub(crate) struct CollectedSystem {
    eq: EvolutionEquation,
    base: SmoothField,
    basis_fields: Vec<SmoothField>,
    loadings: Vec<f64>, // K x m basis values at the sample points
    points: Vec<JetPoint>,
    m: usize,
}

impl CollectedSystem {
    fn new(eq: EvolutionEquation, base: SmoothField, bases: &[Basis]) -> Result<Self> {
        let m = bases.len();
        let points = collection_points(m);
        let k = points.len();
        let mut loadings = vec![0.0; k * m];
        for (row, p) in points.iter().enumerate() {
            for (col, b) in bases.iter().enumerate() {
                loadings[row * m + col] = b.value(p.u_x);
            }
        }
        let basis_fields: Vec<SmoothField> = bases
            .iter()
            .map(|b| Arc::new(BasisField(*b)) as SmoothField)
            .collect();
        let sys = Self { eq, base, basis_fields, loadings, points, m };
        // Detect a degenerate basis up front.
        let mut gram = sys.gram();
        let mut probe = vec![0.0; m];
        solve_small(m, &mut gram, &mut probe)?;
        Ok(sys)
    }

    fn gram(&self) -> Vec<f64> {
        let k = self.points.len();
        let m = self.m;
        let mut gram = vec![0.0; m * m];
        for row in 0..k {
            for i in 0..m {
                for j in 0..m {
                    gram[i * m + j] +=
                        self.loadings[row * m + i] * self.loadings[row * m + j];
                }
            }
        }
        gram
    }

    /// Least-squares slope of the coefficient system at time `t`:
    /// solves `B phi' = -(R_base + sum_i phi_i R_i)` and verifies the fit.
    fn slopes(&self, t: f64, phi: &[f64], dphi: &mut [f64]) -> Result<()> {
        let k = self.points.len();
        let m = self.m;
        let mut c = vec![0.0; k];
        for (row, p0) in self.points.iter().enumerate() {
            let p = JetPoint { t, ..*p0 };
            let mut total = determining_residual(&self.base, &self.eq, &p)?;
            for (i, field) in self.basis_fields.iter().enumerate() {
                total += phi[i] * determining_residual(field, &self.eq, &p)?;
            }
            c[row] = total;
        }
        // Normal equations.
        let mut gram = self.gram();
        let mut rhs = vec![0.0; m];
        for row in 0..k {
            for i in 0..m {
                rhs[i] -= self.loadings[row * m + i] * c[row];
            }
        }
        solve_small(m, &mut gram, &mut rhs)?;
        // A genuine ansatz closes exactly; anything beyond round-off means
        // the residual left the basis span.
        let scale = c.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
        for row in 0..k {
            let mut fit = c[row];
            for i in 0..m {
                fit += self.loadings[row * m + i] * rhs[i];
            }
            if fit.abs() > 1e-7 * scale {
                return Err(Error::AnsatzMismatch(format!(
                    "residual misfit {fit:.3e} at t = {t}, u_x = {}",
                    self.points[row].u_x
                )));
            }
        }
        dphi.copy_from_slice(&rhs);
        Ok(())
    }
}

pub(crate) fn build_with_bases(
    params: &MertonParams,
    family: Family,
    bases: Vec<Basis>,
    certification_tolerance: f64,
) -> Result<SymmetryFamily> {
    params.validate()?;
    let eq = crate::merton::merton_hamiltonian(params)?;
    let base = family_base(family);
    let m = bases.len();
    let labels: Vec<String> = bases.iter().map(|b| b.label()).collect();
    let system = CollectedSystem::new(eq.clone(), base.clone(), &bases)?;

    // Align the coefficient grid with the path grid so the piecewise-linear
    // intensity never straddles an integration step.
    let steps = match &params.coefficients {
        Coefficients::Path(p) => {
            let seg = p.grid().n;
            seg * (512 + seg - 1) / seg
        }
        _ => 512,
    };
    let grid = TimeGrid::new(0.0, params.horizon, steps)?;
    let terminal = family_terminal(family, m);
    let phi = ode_rk4(
        |t, y, dy| system.slopes(t, y, dy),
        &terminal,
        grid,
        Direction::Backward,
    )?;
    let phi = Arc::new(phi);

    let mut parts: Vec<SmoothField> = Vec::with_capacity(m + 1);
    if family != Family::Omega4 {
        parts.push(base);
    }
    for (i, b) in bases.iter().enumerate() {
        parts.push(Arc::new(PhiBasis {
            table: phi.clone(),
            component: i,
            basis: *b,
        }));
    }
    let omega = add(parts);

    let report = residual_scan(&omega, &eq, &JetSamplingBox::merton_default(params.horizon))?;
    if report.max_abs_residual > certification_tolerance {
        return Err(Error::Certification {
            max: report.max_abs_residual,
            tol: certification_tolerance,
            report: Box::new(report),
        });
    }

    Ok(SymmetryFamily {
        family,
        omega,
        phi: phi.clone(),
        phi_labels: labels,
        report,
        params_hash: params.hash(),
    })
}

/// Builds one symmetry family for `params`, deriving the coefficient ODEs
/// from the determining-residual oracle and certifying the result with a
/// residual scan (tolerance `1e-8`).
///
/// With `value_path` supplied, the intensity `delta(t)` in the coefficient
/// system is read from the tabulated path instead of the parameter
/// coefficients (pathwise construction for random-coefficient checks).
pub fn build_symmetry(
    params: &MertonParams,
    family: Family,
    value_path: Option<&CoefficientPath>,
) -> Result<SymmetryFamily> {
    let effective = match value_path {
        Some(path) => {
            let (t0, t1) = path.time_range();
            if t0 > 0.0 || t1 < params.horizon {
                return Err(Error::Range(format!(
                    "coefficient path [{t0}, {t1}] does not cover [0, {}]",
                    params.horizon
                )));
            }
            params.clone().with_coefficients(Coefficients::Path(path.clone()))
        }
        None => params.clone(),
    };
    let bases = family_bases(family, effective.utility);
    build_with_bases(&effective, family, bases, 1e-8)
}
