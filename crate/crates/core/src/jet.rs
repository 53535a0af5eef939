//! Coordinates, total derivative operators, and contact vector fields on the
//! scalar third-order jet space.
//!
//! A jet point carries `(t, x, u, u_x, u_xx, u_xxx)`. Time is a parameter:
//! the total derivative acts in `x` only,
//!
//! ```text
//! D_x F  = F_x + u_x F_u + u_xx F_ux            (first-order fields)
//! D_xx F = D_x (D_x F)                           (needs u_xxx)
//! ```
//!
//! A generating function `Omega(t, x, u, u_x)` induces the contact vector
//! field with components
//!
//! ```text
//! Y_x  = -d(Omega)/d(u_x)
//! Y_u  =  Omega - u_x d(Omega)/d(u_x)
//! Y_ux =  d(Omega)/dx + u_x d(Omega)/du
//! ```
//!
//! and a second-order component equal to `D_xx Omega` minus its `u_xxx` term.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// One point of the scalar third-order jet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JetPoint {
    pub t: f64,
    pub x: f64,
    pub u: f64,
    pub u_x: f64,
    pub u_xx: f64,
    pub u_xxx: f64,
}

impl JetPoint {
    pub fn new(t: f64, x: f64, u: f64, u_x: f64, u_xx: f64, u_xxx: f64) -> Self {
        Self { t, x, u, u_x, u_xx, u_xxx }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.x.is_finite()
            && self.u.is_finite()
            && self.u_x.is_finite()
            && self.u_xx.is_finite()
            && self.u_xxx.is_finite()
    }

    pub fn coord(&self, c: Coord) -> f64 {
        match c {
            Coord::T => self.t,
            Coord::X => self.x,
            Coord::U => self.u,
            Coord::Ux => self.u_x,
            Coord::Uxx => self.u_xx,
        }
    }

    pub fn with_coord(mut self, c: Coord, v: f64) -> Self {
        match c {
            Coord::T => self.t = v,
            Coord::X => self.x = v,
            Coord::U => self.u = v,
            Coord::Ux => self.u_x = v,
            Coord::Uxx => self.u_xx = v,
        }
        self
    }
}

/// Jet coordinates a smooth field may read. `u_xxx` is reserved for the
/// total-derivative operators and is never a field argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Coord {
    T,
    X,
    U,
    Ux,
    Uxx,
}

impl Coord {
    pub const ALL: [Coord; 5] = [Coord::T, Coord::X, Coord::U, Coord::Ux, Coord::Uxx];

    fn bit(self) -> u8 {
        match self {
            Coord::T => 1,
            Coord::X => 2,
            Coord::U => 4,
            Coord::Ux => 8,
            Coord::Uxx => 16,
        }
    }
}

/// Set of jet coordinates, used as field arity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CoordSet(u8);

impl CoordSet {
    pub const EMPTY: CoordSet = CoordSet(0);

    pub fn of(coords: &[Coord]) -> Self {
        let mut s = 0;
        for c in coords {
            s |= c.bit();
        }
        CoordSet(s)
    }

    /// Arity of a generating function on the first-order jet: `(t, x, u, u_x)`.
    pub fn generator() -> Self {
        CoordSet::of(&[Coord::T, Coord::X, Coord::U, Coord::Ux])
    }

    /// Arity of an evolution Hamiltonian: `(t, x, u, u_x, u_xx)`.
    pub fn evolution() -> Self {
        CoordSet::of(&Coord::ALL)
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn is_subset_of(&self, other: CoordSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(&self, other: CoordSet) -> CoordSet {
        CoordSet(self.0 | other.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = Coord> + '_ {
        Coord::ALL.into_iter().filter(|c| self.contains(*c))
    }
}

/// Whether a field's derivatives are closed-form or finite-difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Exactness {
    Exact,
    FiniteDifference,
}

/// A scalar function of selected jet coordinates with partial derivatives up
/// to second order. Partials with respect to coordinates outside the arity
/// are identically zero.
pub trait Field: Send + Sync {
    fn arity(&self) -> CoordSet;
    fn value(&self, p: &JetPoint) -> f64;
    fn partial(&self, c: Coord, p: &JetPoint) -> f64;
    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64;
    fn exactness(&self) -> Exactness {
        Exactness::Exact
    }
}

/// Shared handle to a smooth field.
pub type SmoothField = Arc<dyn Field>;

// ---------------------------------------------------------------------------
// Elementary fields and combinators
// ---------------------------------------------------------------------------

struct ConstantField(f64);

impl Field for ConstantField {
    fn arity(&self) -> CoordSet {
        CoordSet::EMPTY
    }
    fn value(&self, _: &JetPoint) -> f64 {
        self.0
    }
    fn partial(&self, _: Coord, _: &JetPoint) -> f64 {
        0.0
    }
    fn partial2(&self, _: Coord, _: Coord, _: &JetPoint) -> f64 {
        0.0
    }
}

struct CoordinateField(Coord);

impl Field for CoordinateField {
    fn arity(&self) -> CoordSet {
        CoordSet::of(&[self.0])
    }
    fn value(&self, p: &JetPoint) -> f64 {
        p.coord(self.0)
    }
    fn partial(&self, c: Coord, _: &JetPoint) -> f64 {
        if c == self.0 {
            1.0
        } else {
            0.0
        }
    }
    fn partial2(&self, _: Coord, _: Coord, _: &JetPoint) -> f64 {
        0.0
    }
}

struct SumField(Vec<SmoothField>);

impl Field for SumField {
    fn arity(&self) -> CoordSet {
        self.0
            .iter()
            .fold(CoordSet::EMPTY, |s, f| s.union(f.arity()))
    }
    fn value(&self, p: &JetPoint) -> f64 {
        self.0.iter().map(|f| f.value(p)).sum()
    }
    fn partial(&self, c: Coord, p: &JetPoint) -> f64 {
        self.0.iter().map(|f| f.partial(c, p)).sum()
    }
    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64 {
        self.0.iter().map(|f| f.partial2(a, b, p)).sum()
    }
    fn exactness(&self) -> Exactness {
        worst_exactness(self.0.iter().map(|f| f.exactness()))
    }
}

struct ScaledField(f64, SmoothField);

impl Field for ScaledField {
    fn arity(&self) -> CoordSet {
        self.1.arity()
    }
    fn value(&self, p: &JetPoint) -> f64 {
        self.0 * self.1.value(p)
    }
    fn partial(&self, c: Coord, p: &JetPoint) -> f64 {
        self.0 * self.1.partial(c, p)
    }
    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64 {
        self.0 * self.1.partial2(a, b, p)
    }
    fn exactness(&self) -> Exactness {
        self.1.exactness()
    }
}

struct ProductField(SmoothField, SmoothField);

impl Field for ProductField {
    fn arity(&self) -> CoordSet {
        self.0.arity().union(self.1.arity())
    }
    fn value(&self, p: &JetPoint) -> f64 {
        self.0.value(p) * self.1.value(p)
    }
    fn partial(&self, c: Coord, p: &JetPoint) -> f64 {
        self.0.partial(c, p) * self.1.value(p) + self.0.value(p) * self.1.partial(c, p)
    }
    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64 {
        self.0.partial2(a, b, p) * self.1.value(p)
            + self.0.partial(a, p) * self.1.partial(b, p)
            + self.0.partial(b, p) * self.1.partial(a, p)
            + self.0.value(p) * self.1.partial2(a, b, p)
    }
    fn exactness(&self) -> Exactness {
        worst_exactness([self.0.exactness(), self.1.exactness()].into_iter())
    }
}

fn worst_exactness(it: impl Iterator<Item = Exactness>) -> Exactness {
    for e in it {
        if e == Exactness::FiniteDifference {
            return Exactness::FiniteDifference;
        }
    }
    Exactness::Exact
}

pub fn constant(c: f64) -> SmoothField {
    Arc::new(ConstantField(c))
}

pub fn coordinate(c: Coord) -> SmoothField {
    Arc::new(CoordinateField(c))
}

pub fn add(fields: Vec<SmoothField>) -> SmoothField {
    Arc::new(SumField(fields))
}

pub fn scale(k: f64, f: SmoothField) -> SmoothField {
    Arc::new(ScaledField(k, f))
}

pub fn product(a: SmoothField, b: SmoothField) -> SmoothField {
    Arc::new(ProductField(a, b))
}

/// A field built from closures supplying the value and exact partials.
pub struct ClosureField<V, D1, D2> {
    arity: CoordSet,
    value: V,
    d1: D1,
    d2: D2,
}

impl<V, D1, D2> Field for ClosureField<V, D1, D2>
where
    V: Fn(&JetPoint) -> f64 + Send + Sync,
    D1: Fn(Coord, &JetPoint) -> f64 + Send + Sync,
    D2: Fn(Coord, Coord, &JetPoint) -> f64 + Send + Sync,
{
    fn arity(&self) -> CoordSet {
        self.arity
    }
    fn value(&self, p: &JetPoint) -> f64 {
        (self.value)(p)
    }
    fn partial(&self, c: Coord, p: &JetPoint) -> f64 {
        if self.arity.contains(c) {
            (self.d1)(c, p)
        } else {
            0.0
        }
    }
    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64 {
        if self.arity.contains(a) && self.arity.contains(b) {
            (self.d2)(a, b, p)
        } else {
            0.0
        }
    }
}

pub fn exact_field<V, D1, D2>(arity: CoordSet, value: V, d1: D1, d2: D2) -> SmoothField
where
    V: Fn(&JetPoint) -> f64 + Send + Sync + 'static,
    D1: Fn(Coord, &JetPoint) -> f64 + Send + Sync + 'static,
    D2: Fn(Coord, Coord, &JetPoint) -> f64 + Send + Sync + 'static,
{
    Arc::new(ClosureField { arity, value, d1, d2 })
}

// ---------------------------------------------------------------------------
// Finite-difference fallback
// ---------------------------------------------------------------------------

/// Central-difference step for first partials: `cbrt(eps) * max(1, |c|)`.
fn fd_step_1(coord_value: f64) -> f64 {
    f64::EPSILON.cbrt() * coord_value.abs().max(1.0)
}

/// Central-difference step for second partials: `eps^(1/4) * max(1, |c|)`.
fn fd_step_2(coord_value: f64) -> f64 {
    f64::EPSILON.powf(0.25) * coord_value.abs().max(1.0)
}

struct FdField<E> {
    arity: CoordSet,
    eval: E,
}

impl<E> Field for FdField<E>
where
    E: Fn(&JetPoint) -> f64 + Send + Sync,
{
    fn arity(&self) -> CoordSet {
        self.arity
    }

    fn value(&self, p: &JetPoint) -> f64 {
        (self.eval)(p)
    }

    fn partial(&self, c: Coord, p: &JetPoint) -> f64 {
        if !self.arity.contains(c) {
            return 0.0;
        }
        let h = fd_step_1(p.coord(c));
        let v = p.coord(c);
        let fp = (self.eval)(&p.with_coord(c, v + h));
        let fm = (self.eval)(&p.with_coord(c, v - h));
        (fp - fm) / (2.0 * h)
    }

    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64 {
        if !self.arity.contains(a) || !self.arity.contains(b) {
            return 0.0;
        }
        if a == b {
            let h = fd_step_2(p.coord(a));
            let v = p.coord(a);
            let fp = (self.eval)(&p.with_coord(a, v + h));
            let f0 = (self.eval)(p);
            let fm = (self.eval)(&p.with_coord(a, v - h));
            (fp - 2.0 * f0 + fm) / (h * h)
        } else {
            let ha = fd_step_2(p.coord(a));
            let hb = fd_step_2(p.coord(b));
            let va = p.coord(a);
            let vb = p.coord(b);
            let f = |da: f64, db: f64| {
                (self.eval)(&p.with_coord(a, va + da).with_coord(b, vb + db))
            };
            (f(ha, hb) - f(ha, -hb) - f(-ha, hb) + f(-ha, -hb)) / (4.0 * ha * hb)
        }
    }

    fn exactness(&self) -> Exactness {
        Exactness::FiniteDifference
    }
}

/// Wraps a bare evaluator with central-difference partials.
pub fn fd_partials<E>(arity: CoordSet, eval: E) -> SmoothField
where
    E: Fn(&JetPoint) -> f64 + Send + Sync + 'static,
{
    Arc::new(FdField { arity, eval })
}

// ---------------------------------------------------------------------------
// Total derivatives
// ---------------------------------------------------------------------------

fn check_first_order(f: &dyn Field, op: &'static str) -> Result<()> {
    if !f.arity().is_subset_of(CoordSet::generator()) {
        return Err(Error::Capability(format!(
            "{op} requires a field on (t, x, u, u_x); got arity {:?}",
            f.arity()
        )));
    }
    Ok(())
}

/// Total derivative `D_x F = F_x + u_x F_u + u_xx F_ux` at `p`.
///
/// Time is a parameter and is never differentiated.
pub fn total_derivative_x(f: &dyn Field, p: &JetPoint) -> Result<f64> {
    check_first_order(f, "total_derivative_x")?;
    if !p.is_finite() {
        return Err(Error::InvalidArgument("non-finite jet point".into()));
    }
    let terms = [
        ("d/dx", f.partial(Coord::X, p)),
        ("d/du", f.partial(Coord::U, p)),
        ("d/du_x", f.partial(Coord::Ux, p)),
    ];
    for (name, v) in terms {
        if !v.is_finite() {
            return Err(Error::NumericDomain {
                op: "total_derivative_x",
                what: format!("partial {name} is {v}"),
            });
        }
    }
    let v = terms[0].1 + p.u_x * terms[1].1 + p.u_xx * terms[2].1;
    if !v.is_finite() {
        return Err(Error::NumericDomain {
            op: "total_derivative_x",
            what: format!("result is {v}"),
        });
    }
    Ok(v)
}

/// Second total derivative `D_xx F = D_x (D_x F)` in fully expanded form:
///
/// ```text
/// F_xx + 2 u_x F_xu + u_x^2 F_uu + u_xx F_u + 2 u_xx F_x,ux
///      + 2 u_x u_xx F_u,ux + u_xx^2 F_ux,ux + u_xxx F_ux
/// ```
pub fn total_derivative_xx(f: &dyn Field, p: &JetPoint) -> Result<f64> {
    check_first_order(f, "total_derivative_xx")?;
    if !p.is_finite() {
        return Err(Error::InvalidArgument("non-finite jet point".into()));
    }
    let v = f.partial2(Coord::X, Coord::X, p)
        + 2.0 * p.u_x * f.partial2(Coord::X, Coord::U, p)
        + p.u_x * p.u_x * f.partial2(Coord::U, Coord::U, p)
        + p.u_xx * f.partial(Coord::U, p)
        + 2.0 * p.u_xx * f.partial2(Coord::X, Coord::Ux, p)
        + 2.0 * p.u_x * p.u_xx * f.partial2(Coord::U, Coord::Ux, p)
        + p.u_xx * p.u_xx * f.partial2(Coord::Ux, Coord::Ux, p)
        + p.u_xxx * f.partial(Coord::Ux, p);
    if !v.is_finite() {
        return Err(Error::NumericDomain {
            op: "total_derivative_xx",
            what: format!("result is {v}"),
        });
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Contact vector fields
// ---------------------------------------------------------------------------

enum Component {
    YX,
    YU,
    YUX,
}

/// First-order component of the contact field of `omega`, with exact first
/// partials taken from `omega`'s second partials and finite-difference second
/// partials.
struct ContactComponent {
    omega: SmoothField,
    which: Component,
}

impl ContactComponent {
    fn raw_value(&self, p: &JetPoint) -> f64 {
        let om = &self.omega;
        match self.which {
            Component::YX => -om.partial(Coord::Ux, p),
            Component::YU => om.value(p) - p.u_x * om.partial(Coord::Ux, p),
            Component::YUX => om.partial(Coord::X, p) + p.u_x * om.partial(Coord::U, p),
        }
    }

    fn raw_partial(&self, c: Coord, p: &JetPoint) -> f64 {
        let om = &self.omega;
        match self.which {
            Component::YX => -om.partial2(Coord::Ux, c, p),
            Component::YU => {
                let base = om.partial(c, p) - p.u_x * om.partial2(Coord::Ux, c, p);
                if c == Coord::Ux {
                    base - om.partial(Coord::Ux, p)
                } else {
                    base
                }
            }
            Component::YUX => {
                let base =
                    om.partial2(Coord::X, c, p) + p.u_x * om.partial2(Coord::U, c, p);
                if c == Coord::Ux {
                    base + om.partial(Coord::U, p)
                } else {
                    base
                }
            }
        }
    }
}

impl Field for ContactComponent {
    fn arity(&self) -> CoordSet {
        self.omega.arity().union(CoordSet::of(&[Coord::Ux]))
    }
    fn value(&self, p: &JetPoint) -> f64 {
        self.raw_value(p)
    }
    fn partial(&self, c: Coord, p: &JetPoint) -> f64 {
        if self.arity().contains(c) {
            self.raw_partial(c, p)
        } else {
            0.0
        }
    }
    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64 {
        // Differencing the exact first partial; third derivatives of the
        // generator are not part of the Field contract.
        if !self.arity().contains(a) || !self.arity().contains(b) {
            return 0.0;
        }
        let h = fd_step_1(p.coord(a));
        let v = p.coord(a);
        let fp = self.raw_partial(b, &p.with_coord(a, v + h));
        let fm = self.raw_partial(b, &p.with_coord(a, v - h));
        (fp - fm) / (2.0 * h)
    }
    fn exactness(&self) -> Exactness {
        Exactness::FiniteDifference
    }
}

/// The infinitesimal contact transformation generated by `omega`.
pub struct ContactVector {
    pub y_x: SmoothField,
    pub y_u: SmoothField,
    pub y_ux: SmoothField,
    generator: SmoothField,
}

impl ContactVector {
    /// Second-order component: `D_xx Omega` with the `u_xxx` term removed.
    pub fn u_xx_component(&self, p: &JetPoint) -> Result<f64> {
        let dxx = total_derivative_xx(self.generator.as_ref(), p)?;
        Ok(dxx - p.u_xxx * self.generator.partial(Coord::Ux, p))
    }

    pub fn generator(&self) -> &SmoothField {
        &self.generator
    }
}

/// Builds the contact vector field of a generating function on the first
/// order jet.
pub fn contact_vector_from_generator(omega: &SmoothField) -> Result<ContactVector> {
    if !omega.arity().is_subset_of(CoordSet::generator()) {
        return Err(Error::Capability(
            "generating function must depend only on (t, x, u, u_x)".into(),
        ));
    }
    let mk = |which| -> SmoothField {
        Arc::new(ContactComponent { omega: omega.clone(), which })
    };
    Ok(ContactVector {
        y_x: mk(Component::YX),
        y_u: mk(Component::YU),
        y_ux: mk(Component::YUX),
        generator: omega.clone(),
    })
}

// ---------------------------------------------------------------------------
// Lie point generators
// ---------------------------------------------------------------------------

struct LiePointGenerator {
    f: SmoothField,
    g: SmoothField,
}

impl Field for LiePointGenerator {
    fn arity(&self) -> CoordSet {
        self.f
            .arity()
            .union(self.g.arity())
            .union(CoordSet::of(&[Coord::Ux]))
    }

    fn value(&self, p: &JetPoint) -> f64 {
        self.g.value(p) - self.f.value(p) * p.u_x
    }

    fn partial(&self, c: Coord, p: &JetPoint) -> f64 {
        match c {
            Coord::Ux => -self.f.value(p),
            Coord::Uxx => 0.0,
            c => self.g.partial(c, p) - self.f.partial(c, p) * p.u_x,
        }
    }

    fn partial2(&self, a: Coord, b: Coord, p: &JetPoint) -> f64 {
        let (a, b) = if a == Coord::Ux { (b, a) } else { (a, b) };
        match (a, b) {
            (Coord::Ux, Coord::Ux) => 0.0,
            (c, Coord::Ux) => -self.f.partial(c, p),
            (c, d) => self.g.partial2(c, d, p) - self.f.partial2(c, d, p) * p.u_x,
        }
    }

    fn exactness(&self) -> Exactness {
        worst_exactness([self.f.exactness(), self.g.exactness()].into_iter())
    }
}

/// `Omega(t, x, u, u_x) = g(t, x, u) - f(t, x) u_x`, the generator of a
/// projected Lie point transformation.
pub fn lie_point_generator(f: &SmoothField, g: &SmoothField) -> Result<SmoothField> {
    if !f.arity().is_subset_of(CoordSet::of(&[Coord::T, Coord::X])) {
        return Err(Error::Capability("f must depend only on (t, x)".into()));
    }
    if !g
        .arity()
        .is_subset_of(CoordSet::of(&[Coord::T, Coord::X, Coord::U]))
    {
        return Err(Error::Capability("g must depend only on (t, x, u)".into()));
    }
    Ok(Arc::new(LiePointGenerator { f: f.clone(), g: g.clone() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(t: f64, x: f64, u: f64, u_x: f64, u_xx: f64, u_xxx: f64) -> JetPoint {
        JetPoint::new(t, x, u, u_x, u_xx, u_xxx)
    }

    #[test]
    fn total_derivative_of_u_is_ux() {
        let f = coordinate(Coord::U);
        let p = pt(0.0, 1.0, 2.0, 3.0, 0.5, 0.0);
        assert_eq!(total_derivative_x(f.as_ref(), &p).unwrap(), 3.0);
    }

    #[test]
    fn total_derivative_product_rule_example() {
        // F = x * u_x at (x=2, u_x=3, u_xx=0.5): u_x + x u_xx = 4.
        let f = product(coordinate(Coord::X), coordinate(Coord::Ux));
        let p = pt(0.0, 2.0, 0.0, 3.0, 0.5, 0.0);
        assert_relative_eq!(total_derivative_x(f.as_ref(), &p).unwrap(), 4.0);
    }

    #[test]
    fn total_derivative_of_constant_is_zero() {
        let f = constant(7.25);
        let p = pt(0.0, 1.0, -2.0, 0.3, -0.7, 0.1);
        assert_eq!(total_derivative_x(f.as_ref(), &p).unwrap(), 0.0);
    }

    #[test]
    fn second_total_derivative_examples() {
        // F = u: D_xx u = u_xx.
        let f = coordinate(Coord::U);
        let p = pt(0.0, 1.0, 1.0, 2.0, 3.0, -0.4);
        assert_eq!(total_derivative_xx(f.as_ref(), &p).unwrap(), 3.0);

        // F = u^2 at (u=1, u_x=2, u_xx=3): 2 u_x^2 + 2 u u_xx = 14.
        let f = product(coordinate(Coord::U), coordinate(Coord::U));
        assert_relative_eq!(total_derivative_xx(f.as_ref(), &p).unwrap(), 14.0);

        // F = x: D_xx x = 0.
        let f = coordinate(Coord::X);
        assert_eq!(total_derivative_xx(f.as_ref(), &p).unwrap(), 0.0);
    }

    #[test]
    fn dxx_matches_nested_dx_for_polynomial_field() {
        // F = x u + u_x^2 u; compare expanded D_xx against D_x of the exact
        // field G = D_x F assembled by hand.
        let f = add(vec![
            product(coordinate(Coord::X), coordinate(Coord::U)),
            product(
                product(coordinate(Coord::Ux), coordinate(Coord::Ux)),
                coordinate(Coord::U),
            ),
        ]);
        let p = pt(0.3, 1.4, -0.7, 0.6, -1.2, 0.8);
        // G = u + x u_x + u_x^3 + 2 u u_x u_xx  (depends on u_xx, so expand
        // its own D_x by hand and compare values).
        let g_val = |q: &JetPoint| {
            q.u + q.x * q.u_x + q.u_x.powi(3) + 2.0 * q.u * q.u_x * q.u_xx
        };
        let dx_g = {
            // dG/dx + u_x dG/du + u_xx dG/du_x + u_xxx dG/du_xx
            let q = p;
            q.u_x
                + q.u_x * (1.0 + 2.0 * q.u_x * q.u_xx)
                + q.u_xx * (q.x + 3.0 * q.u_x * q.u_x + 2.0 * q.u * q.u_xx)
                + q.u_xxx * (2.0 * q.u * q.u_x)
        };
        assert_relative_eq!(
            total_derivative_xx(f.as_ref(), &p).unwrap(),
            dx_g,
            max_relative = 1e-12
        );
        let _ = g_val;
    }

    #[test]
    fn contact_components_dilation_of_dependent_variable() {
        // Omega = u -> (Y_x, Y_u, Y_ux) = (0, u, u_x).
        let omega = coordinate(Coord::U);
        let cv = contact_vector_from_generator(&omega).unwrap();
        let p = pt(0.5, 1.2, -0.4, 0.9, -0.3, 0.1);
        assert_eq!(cv.y_x.value(&p), 0.0);
        assert_eq!(cv.y_u.value(&p), p.u);
        assert_eq!(cv.y_ux.value(&p), p.u_x);
    }

    #[test]
    fn contact_components_dilation_of_independent_variable() {
        // Omega = -x u_x -> (x, 0, -u_x).
        let omega = scale(-1.0, product(coordinate(Coord::X), coordinate(Coord::Ux)));
        let cv = contact_vector_from_generator(&omega).unwrap();
        let p = pt(0.0, 1.7, 0.3, -0.8, 0.2, 0.0);
        assert_relative_eq!(cv.y_x.value(&p), p.x);
        assert_relative_eq!(cv.y_u.value(&p), 0.0);
        assert_relative_eq!(cv.y_ux.value(&p), -p.u_x);
    }

    #[test]
    fn contact_components_pure_g_of_x() {
        // Omega = g(x) = x^2 -> (0, g, g').
        let omega = product(coordinate(Coord::X), coordinate(Coord::X));
        let cv = contact_vector_from_generator(&omega).unwrap();
        let p = pt(0.0, 1.3, 0.0, 2.0, 0.0, 0.0);
        assert_eq!(cv.y_x.value(&p), 0.0);
        assert_relative_eq!(cv.y_u.value(&p), p.x * p.x);
        assert_relative_eq!(cv.y_ux.value(&p), 2.0 * p.x);
    }

    #[test]
    fn lie_point_generator_examples() {
        let one = constant(1.0);
        let zero = constant(0.0);
        let x = coordinate(Coord::X);
        let u = coordinate(Coord::U);

        // f=1, g=0 -> Omega = -u_x.
        let om = lie_point_generator(&one, &zero).unwrap();
        let p = pt(0.0, 0.7, 0.2, 1.9, 0.4, 0.0);
        assert_eq!(om.value(&p), -p.u_x);

        // f=x, g=0 -> Omega = -x u_x.
        let om = lie_point_generator(&x, &zero).unwrap();
        assert_relative_eq!(om.value(&p), -p.x * p.u_x);

        // f=0, g=u -> Omega = u.
        let om = lie_point_generator(&zero, &u).unwrap();
        assert_eq!(om.value(&p), p.u);
    }

    #[test]
    fn lie_point_prolongation_formulas() {
        // Y_x = f, Y_u = g, Y_ux = D_x(g) - D_x(f) u_x for f(t,x), g(t,x,u).
        let f = product(coordinate(Coord::X), coordinate(Coord::X));
        let g = product(coordinate(Coord::X), coordinate(Coord::U));
        let om = lie_point_generator(&f, &g).unwrap();
        let cv = contact_vector_from_generator(&om).unwrap();
        let p = pt(0.2, 1.1, -0.6, 0.8, -0.9, 0.3);
        assert_relative_eq!(cv.y_x.value(&p), f.value(&p), max_relative = 1e-10);
        assert_relative_eq!(cv.y_u.value(&p), g.value(&p), max_relative = 1e-10);
        let dx_g = total_derivative_x(g.as_ref(), &p).unwrap();
        let dx_f = total_derivative_x(f.as_ref(), &p).unwrap();
        assert_relative_eq!(
            cv.y_ux.value(&p),
            dx_g - dx_f * p.u_x,
            max_relative = 1e-10
        );
    }

    #[test]
    fn fd_partials_quadratic_and_exp() {
        let q = fd_partials(CoordSet::of(&[Coord::X]), |p| p.x * p.x);
        let p = pt(0.0, 1.8, 0.0, 0.0, 0.0, 0.0);
        assert_relative_eq!(
            q.partial2(Coord::X, Coord::X, &p),
            2.0,
            max_relative = 1e-6
        );

        let e = fd_partials(CoordSet::of(&[Coord::Ux]), |p| p.u_x.exp());
        let p0 = pt(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert_relative_eq!(e.partial(Coord::Ux, &p0), 1.0, max_relative = 1e-6);

        let c = fd_partials(CoordSet::EMPTY, |_| 4.5);
        assert_eq!(c.partial(Coord::X, &p0), 0.0);
        assert!(c.partial2(Coord::U, Coord::U, &p0).abs() < 1e-9);
    }

    #[test]
    fn fd_partials_outside_arity_are_zero() {
        let f = fd_partials(CoordSet::of(&[Coord::X]), |p| p.x + p.u);
        let p = pt(0.0, 1.0, 2.0, 0.0, 0.0, 0.0);
        assert_eq!(f.partial(Coord::U, &p), 0.0);
    }

    #[test]
    fn rejects_second_order_fields() {
        let f = coordinate(Coord::Uxx);
        let p = pt(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(total_derivative_x(f.as_ref(), &p).is_err());
        assert!(contact_vector_from_generator(&f).is_err());
    }
}
