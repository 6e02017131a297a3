//! Unions of a fat point, lines, points and tangent vectors; their degree
//! accounting; and the residual/trace split with respect to a plane or a
//! smooth quadric.
//!
//! For a surface `F` of degree `f` and `x >= f` the exact sequence
//!
//! ```text
//! 0 -> I_{Res_F Z}(x - f) -> I_Z(x) -> I_{Z ∩ F, F}(x) -> 0
//! ```
//!
//! bounds `h^i(I_Z(x))` by the residual and trace terms. [`castelnuovo_check`]
//! computes all six numbers at a concrete instance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::{self, ConditionError};
use crate::exactlin::{FMatrix, PrimeField};
use crate::postnum::{binom, fatpoint_degree};
use crate::space::{
    line_line, line_plane, line_quadric, ConicInPlane, LineLine, LineP3, LinePlane, LineQuadric,
    PlaneP3, ProjPoint, QuadricP3, Ruling,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("invalid union: {0}")]
    InvalidUnion(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("degree undefined: fat point of multiplicity {m} needs twist >= {}, got {t}", m - 1)]
    DegreeUndefined { m: u32, t: u64 },
    #[error("non-transverse intersection: {0}")]
    NonTransverse(String),
    #[error("unsupported trace: {0}")]
    UnsupportedTrace(String),
}

/// An atom of a union scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeComponent {
    /// `mP`, the scheme cut out by the m-th power of the ideal of `center`.
    FatPoint { center: ProjPoint, m: u32 },
    Line(LineP3),
    SimplePoint(ProjPoint),
    /// The degree-2 subscheme of the line `<support, direction>` at `support`.
    TangentVector {
        support: ProjPoint,
        direction: ProjPoint,
    },
}

/// A validated union of [`SchemeComponent`]s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionScheme {
    components: Vec<SchemeComponent>,
    /// For each component: the index of the line a tangent vector's support
    /// lies on, if any.
    decorations: Vec<Option<usize>>,
}

fn invalid(msg: impl Into<String>) -> SchemeError {
    SchemeError::InvalidUnion(msg.into())
}

impl UnionScheme {
    pub fn empty() -> Self {
        Self {
            components: Vec::new(),
            decorations: Vec::new(),
        }
    }

    pub fn new(field: &PrimeField, components: Vec<SchemeComponent>) -> Result<Self, SchemeError> {
        use SchemeComponent as C;
        let lines: Vec<(usize, &LineP3)> = components
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match c {
                C::Line(l) => Some((i, l)),
                _ => None,
            })
            .collect();
        for (x, (i, l)) in lines.iter().enumerate() {
            for (j, m) in &lines[x + 1..] {
                if line_line(field, l, m) != LineLine::Skew {
                    return Err(invalid(format!("lines {i} and {j} are not disjoint")));
                }
            }
        }
        let line_through = |p: &ProjPoint| lines.iter().find(|(_, l)| l.contains(field, p)).map(|&(i, _)| i);

        let mut supports: Vec<ProjPoint> = Vec::new();
        let mut decorations = vec![None; components.len()];
        for (i, c) in components.iter().enumerate() {
            let support = match c {
                C::Line(_) => continue,
                C::FatPoint { center, m } => {
                    if *m == 0 {
                        return Err(invalid("fat point of multiplicity 0; omit it instead"));
                    }
                    if line_through(center).is_some() {
                        return Err(invalid(format!("fat point {i} lies on a line")));
                    }
                    center
                }
                C::SimplePoint(p) => {
                    if line_through(p).is_some() {
                        return Err(invalid(format!("simple point {i} lies on a line")));
                    }
                    p
                }
                C::TangentVector { support, direction } => {
                    if support == direction {
                        return Err(invalid(format!("tangent vector {i} has direction = support")));
                    }
                    if let Some(li) = line_through(support) {
                        let C::Line(l) = &components[li] else { unreachable!() };
                        if l.contains(field, direction) {
                            return Err(invalid(format!("tangent vector {i} is contained in line {li}")));
                        }
                        decorations[i] = Some(li);
                    }
                    support
                }
            };
            if supports.contains(support) {
                return Err(invalid(format!("component {i} shares its support with another")));
            }
            supports.push(*support);
        }
        Ok(Self {
            components,
            decorations,
        })
    }

    pub fn components(&self) -> &[SchemeComponent] {
        &self.components
    }

    pub fn decoration(&self, i: usize) -> Option<usize> {
        self.decorations[i]
    }

    pub fn lines(&self) -> impl Iterator<Item = &LineP3> {
        self.components.iter().filter_map(|c| match c {
            SchemeComponent::Line(l) => Some(l),
            _ => None,
        })
    }

    pub fn line_count(&self) -> usize {
        self.lines().count()
    }

    pub fn max_multiplicity(&self) -> u32 {
        self.components
            .iter()
            .filter_map(|c| match c {
                SchemeComponent::FatPoint { m, .. } => Some(*m),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Number of conditions the union imposes on degree-`t` forms when it
    /// imposes independent conditions, i.e. `h^0(O_X(t))`.
    pub fn degree(&self, t: u64) -> Result<u64, SchemeError> {
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| self.component_degree(i, c, t))
            .sum()
    }

    fn component_degree(&self, i: usize, c: &SchemeComponent, t: u64) -> Result<u64, SchemeError> {
        Ok(match c {
            SchemeComponent::FatPoint { m, .. } => {
                if t + 1 < *m as u64 {
                    return Err(SchemeError::DegreeUndefined { m: *m, t });
                }
                fatpoint_degree(*m as u64)
            }
            SchemeComponent::Line(_) => t + 1,
            SchemeComponent::SimplePoint(_) => 1,
            SchemeComponent::TangentVector { .. } => {
                if self.decorations[i].is_some() {
                    1
                } else {
                    2
                }
            }
        })
    }
}

/// A surface used for residual/trace splitting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surface {
    Plane(PlaneP3),
    Quadric(QuadricP3),
}

impl Surface {
    pub fn degree(&self) -> u64 {
        match self {
            Surface::Plane(_) => 1,
            Surface::Quadric(_) => 2,
        }
    }

    pub fn contains(&self, field: &PrimeField, x: &ProjPoint) -> bool {
        match self {
            Surface::Plane(h) => h.contains(field, x),
            Surface::Quadric(q) => q.contains(field, x),
        }
    }

    /// Linear form of the tangent plane at a point of the surface.
    pub fn tangent_form(&self, field: &PrimeField, x: &ProjPoint) -> [u64; 4] {
        match self {
            Surface::Plane(h) => *h.coeffs(),
            Surface::Quadric(q) => q.tangent_plane(field, x),
        }
    }

    /// Whether the tangent vector `(support, direction)` lies in the surface.
    pub fn contains_tangent(&self, field: &PrimeField, support: &ProjPoint, direction: &ProjPoint) -> bool {
        self.contains(field, support)
            && field.dot(&self.tangent_form(field, support), direction.coords()) == 0
    }
}

/// A curve lying on the trace surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceCurve {
    /// A line; on a quadric it carries its ruling.
    Line { line: LineP3, ruling: Option<Ruling> },
    Conic(ConicInPlane),
}

impl TraceCurve {
    pub fn contains(&self, field: &PrimeField, x: &ProjPoint) -> bool {
        match self {
            TraceCurve::Line { line, .. } => line.contains(field, x),
            TraceCurve::Conic(c) => c.contains(field, x),
        }
    }
}

/// An item of a trace scheme `Z ∩ F` viewed inside `F`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceItem {
    /// `{mP, F}`; only on a plane.
    PlaneFatPoint { center: ProjPoint, m: u32 },
    SurfacePoint(ProjPoint),
    SurfaceTangentVector {
        support: ProjPoint,
        direction: ProjPoint,
    },
    CurveOnSurface(TraceCurve),
}

/// A validated zero- or one-dimensional subscheme of a plane or quadric.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceScheme {
    surface: Surface,
    items: Vec<TraceItem>,
    /// For each tangent vector item, the index of the curve item its support lies on.
    decorations: Vec<Option<usize>>,
}

fn bad_trace(msg: impl Into<String>) -> SchemeError {
    SchemeError::InvalidTrace(msg.into())
}

impl TraceScheme {
    pub fn new(field: &PrimeField, surface: Surface, items: Vec<TraceItem>) -> Result<Self, SchemeError> {
        let mut items = items;
        for item in &mut items {
            if let TraceItem::CurveOnSurface(TraceCurve::Line { line, ruling }) = item {
                match &surface {
                    Surface::Plane(h) => {
                        if !h.contains_line(field, line) {
                            return Err(bad_trace("line not contained in the plane"));
                        }
                        *ruling = None;
                    }
                    Surface::Quadric(q) => {
                        let (r, _) = q
                            .ruling_of(field, line)
                            .ok_or_else(|| bad_trace("line is not a ruling line of the quadric"))?;
                        *ruling = Some(r);
                    }
                }
            }
        }
        let curves: Vec<(usize, &TraceCurve)> = items
            .iter()
            .enumerate()
            .filter_map(|(i, it)| match it {
                TraceItem::CurveOnSurface(c) => Some((i, c)),
                _ => None,
            })
            .collect();
        for (x, (i, c)) in curves.iter().enumerate() {
            if let TraceCurve::Conic(conic) = c {
                match &surface {
                    Surface::Plane(h) if h.coeffs() == conic.plane().coeffs() => {}
                    _ => return Err(bad_trace(format!("conic {i} does not lie on the trace plane"))),
                }
            }
            for (j, d) in &curves[x + 1..] {
                let disjoint = match (c, d) {
                    (TraceCurve::Line { line: l, .. }, TraceCurve::Line { line: m, .. }) => {
                        line_line(field, l, m) == LineLine::Skew
                    }
                    _ => false,
                };
                if !disjoint {
                    return Err(bad_trace(format!("curves {i} and {j} meet")));
                }
            }
        }
        let curve_through = |p: &ProjPoint| curves.iter().find(|(_, c)| c.contains(field, p)).map(|&(i, _)| i);

        let mut supports: Vec<ProjPoint> = Vec::new();
        let mut decorations = vec![None; items.len()];
        for (i, item) in items.iter().enumerate() {
            let support = match item {
                TraceItem::CurveOnSurface(_) => continue,
                TraceItem::PlaneFatPoint { center, m } => {
                    if !matches!(surface, Surface::Plane(_)) {
                        return Err(SchemeError::UnsupportedTrace(
                            "fat points are traced only on planes".into(),
                        ));
                    }
                    if *m == 0 || curve_through(center).is_some() {
                        return Err(bad_trace(format!("fat point {i} has m = 0 or lies on a curve")));
                    }
                    center
                }
                TraceItem::SurfacePoint(p) => {
                    if curve_through(p).is_some() {
                        return Err(bad_trace(format!("point {i} lies on a trace curve")));
                    }
                    p
                }
                TraceItem::SurfaceTangentVector { support, direction } => {
                    if support == direction || !surface.contains_tangent(field, support, direction) {
                        return Err(bad_trace(format!("tangent vector {i} is not tangent to the surface")));
                    }
                    if let Some(ci) = curve_through(support) {
                        if let TraceItem::CurveOnSurface(TraceCurve::Line { line, .. }) = &items[ci] {
                            if line.contains(field, direction) {
                                return Err(bad_trace(format!("tangent vector {i} lies along curve {ci}")));
                            }
                        }
                        decorations[i] = Some(ci);
                    }
                    support
                }
            };
            if !surface.contains(field, support) {
                return Err(bad_trace(format!("item {i} is not on the surface")));
            }
            if supports.contains(support) {
                return Err(bad_trace(format!("item {i} shares its support with another")));
            }
            supports.push(*support);
        }
        Ok(Self {
            surface,
            items,
            decorations,
        })
    }

    pub fn surface(&self) -> &Surface {
        &self.surface
    }

    pub fn items(&self) -> &[TraceItem] {
        &self.items
    }

    pub fn decoration(&self, i: usize) -> Option<usize> {
        self.decorations[i]
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Conditions imposed on forms of bidegree `(a, b)` on a quadric, or of
    /// degree `a` on a plane (`b` ignored there).
    pub fn degree_at(&self, a: u64, b: u64) -> Result<u64, SchemeError> {
        let plane = matches!(self.surface, Surface::Plane(_));
        let mut total = 0;
        for (i, item) in self.items.iter().enumerate() {
            total += match item {
                TraceItem::PlaneFatPoint { m, .. } => {
                    if a + 1 < *m as u64 {
                        return Err(SchemeError::DegreeUndefined { m: *m, t: a });
                    }
                    binom(*m as i64 + 1, 2)
                }
                TraceItem::SurfacePoint(_) => 1,
                TraceItem::SurfaceTangentVector { .. } => {
                    if self.decorations[i].is_some() {
                        1
                    } else {
                        2
                    }
                }
                TraceItem::CurveOnSurface(TraceCurve::Conic(_)) => 2 * a + 1,
                TraceItem::CurveOnSurface(TraceCurve::Line { ruling, .. }) => match ruling {
                    _ if plane => a + 1,
                    Some(Ruling::OneZero) => b + 1,
                    Some(Ruling::ZeroOne) => a + 1,
                    None => unreachable!("lines on a quadric carry a ruling"),
                },
            };
        }
        Ok(total)
    }

    /// Degree of the trace against `O_F(x)`.
    pub fn degree(&self, x: u64) -> Result<u64, SchemeError> {
        self.degree_at(x, x)
    }
}

/// Splits `x` into the residual `Res_F(X)` and the trace `X ∩ F`.
pub fn residual(
    field: &PrimeField,
    x: &UnionScheme,
    surface: &Surface,
) -> Result<(UnionScheme, TraceScheme), SchemeError> {
    use SchemeComponent as C;
    let mut res = Vec::new();
    let mut trace = Vec::new();
    // support points of decorated tangent vectors whose line is transverse:
    // they replace that line's trace point
    let mut absorbed: Vec<ProjPoint> = Vec::new();

    for (i, c) in x.components().iter().enumerate() {
        match c {
            C::TangentVector { support, direction } if surface.contains(field, support) => {
                let inside = surface.contains_tangent(field, support, direction);
                match x.decoration(i) {
                    None if inside => trace.push(TraceItem::SurfaceTangentVector {
                        support: *support,
                        direction: *direction,
                    }),
                    None => {
                        res.push(C::SimplePoint(*support));
                        trace.push(TraceItem::SurfacePoint(*support));
                    }
                    Some(li) => {
                        let C::Line(line) = &x.components()[li] else { unreachable!() };
                        if line_in_surface(field, line, surface) {
                            if inside {
                                trace.push(TraceItem::SurfaceTangentVector {
                                    support: *support,
                                    direction: *direction,
                                });
                            } else {
                                res.push(C::SimplePoint(*support));
                            }
                        } else {
                            let dir = if inside {
                                *direction
                            } else {
                                trace_direction(field, line, support, direction, surface)?
                            };
                            trace.push(TraceItem::SurfaceTangentVector {
                                support: *support,
                                direction: dir,
                            });
                            absorbed.push(*support);
                        }
                    }
                }
            }
            C::TangentVector { .. } => res.push(c.clone()),
            C::SimplePoint(p) => {
                if surface.contains(field, p) {
                    trace.push(TraceItem::SurfacePoint(*p));
                } else {
                    res.push(c.clone());
                }
            }
            C::FatPoint { center, m } => {
                if !surface.contains(field, center) {
                    res.push(c.clone());
                    continue;
                }
                if !matches!(surface, Surface::Plane(_)) {
                    return Err(SchemeError::UnsupportedTrace(
                        "fat point centered on the quadric".into(),
                    ));
                }
                if *m > 1 {
                    res.push(C::FatPoint {
                        center: *center,
                        m: m - 1,
                    });
                }
                trace.push(TraceItem::PlaneFatPoint {
                    center: *center,
                    m: *m,
                });
            }
            C::Line(_) => {}
        }
    }

    for c in x.components() {
        let C::Line(line) = c else { continue };
        let points = match surface {
            Surface::Plane(h) => match line_plane(field, line, h) {
                LinePlane::Contained => {
                    trace.push(TraceItem::CurveOnSurface(TraceCurve::Line {
                        line: *line,
                        ruling: None,
                    }));
                    continue;
                }
                LinePlane::Point(p) => vec![p],
            },
            Surface::Quadric(q) => match line_quadric(field, line, q) {
                LineQuadric::Contained => {
                    let ruling = q.ruling_of(field, line).map(|(r, _)| r);
                    trace.push(TraceItem::CurveOnSurface(TraceCurve::Line {
                        line: *line,
                        ruling,
                    }));
                    continue;
                }
                LineQuadric::Pair(p, q) => vec![p, q],
                LineQuadric::Tangent(_) => {
                    return Err(SchemeError::NonTransverse(format!("line {line:?} is tangent to the quadric")))
                }
                LineQuadric::NoRationalPoint => {
                    return Err(SchemeError::NonTransverse(format!(
                        "line {line:?} meets the quadric in no rational point"
                    )))
                }
            },
        };
        res.push(c.clone());
        trace.extend(
            points
                .into_iter()
                .filter(|p| !absorbed.contains(p))
                .map(TraceItem::SurfacePoint),
        );
    }

    // keep the residual in input order: lines first were pushed last, so re-sort
    // by position of the originating component for a stable layout
    let residual = UnionScheme::new(field, order_like(x, res))?;
    let trace = TraceScheme::new(field, surface.clone(), trace)?;
    Ok((residual, trace))
}

fn order_like(x: &UnionScheme, res: Vec<SchemeComponent>) -> Vec<SchemeComponent> {
    let pos = |c: &SchemeComponent| {
        let key = match c {
            SchemeComponent::FatPoint { center, .. } => Some(*center),
            SchemeComponent::SimplePoint(p) => Some(*p),
            SchemeComponent::TangentVector { support, .. } => Some(*support),
            SchemeComponent::Line(_) => None,
        };
        x.components()
            .iter()
            .position(|o| match (o, key) {
                (SchemeComponent::FatPoint { center, .. }, Some(k)) => *center == k,
                (SchemeComponent::SimplePoint(p), Some(k)) => *p == k,
                (SchemeComponent::TangentVector { support, .. }, Some(k)) => *support == k,
                (SchemeComponent::Line(l), None) => matches!(c, SchemeComponent::Line(m) if m == l),
                _ => false,
            })
            .unwrap_or(usize::MAX)
    };
    let mut keyed: Vec<(usize, SchemeComponent)> = res.into_iter().map(|c| (pos(&c), c)).collect();
    keyed.sort_by_key(|(k, _)| *k);
    keyed.into_iter().map(|(_, c)| c).collect()
}

fn line_in_surface(field: &PrimeField, line: &LineP3, surface: &Surface) -> bool {
    match surface {
        Surface::Plane(h) => h.contains_line(field, line),
        Surface::Quadric(q) => line_quadric(field, line, q) == LineQuadric::Contained,
    }
}

/// Direction of the trace of `line ∪ v` at `support` when `v` is
/// transverse: the line `<line, direction> ∩ T_support F`.
fn trace_direction(
    field: &PrimeField,
    line: &LineP3,
    support: &ProjPoint,
    direction: &ProjPoint,
    surface: &Surface,
) -> Result<ProjPoint, SchemeError> {
    let tangent = surface.tangent_form(field, support);
    let (a, b) = line.span();
    let gens = [a.coords(), b.coords(), direction.coords()];
    let values: Vec<u64> = gens.iter().map(|g| field.dot(&tangent, &g[..])).collect();
    let ns = FMatrix::new(1, 3, values).nullspace(field);
    for v in ns {
        let coords: [u64; 4] = std::array::from_fn(|i| {
            (0..3).fold(0, |acc, j| field.add(acc, field.mul(v[j], gens[j][i])))
        });
        if let Ok(p) = ProjPoint::new(field, coords) {
            if p != *support {
                return Ok(p);
            }
        }
    }
    Err(SchemeError::NonTransverse(
        "line is tangent to the surface at a tangent-vector support".into(),
    ))
}

/// All six cohomology numbers around one residual exact sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastelnuovoReport {
    pub x: u64,
    pub surface_degree: u64,
    pub h0: u64,
    pub h1: u64,
    pub residual_h0: u64,
    pub residual_h1: u64,
    pub trace_h0: u64,
    pub trace_h1: u64,
    pub degree: u64,
    pub residual_degree: u64,
    pub trace_degree: u64,
}

impl CastelnuovoReport {
    pub fn h0_bound_holds(&self) -> bool {
        self.h0 <= self.residual_h0 + self.trace_h0
    }

    pub fn h1_bound_holds(&self) -> bool {
        self.h1 <= self.residual_h1 + self.trace_h1
    }

    pub fn degree_conserved(&self) -> bool {
        self.degree == self.residual_degree + self.trace_degree
    }
}

/// Computes `h^i(I_X(x))`, `h^i(I_Res(x - deg F))` and `h^i(F, I_trace(x))`.
pub fn castelnuovo_check(
    field: &PrimeField,
    x: &UnionScheme,
    surface: &Surface,
    twist: u64,
) -> Result<CastelnuovoReport, ConditionError> {
    let f = surface.degree();
    if twist < f {
        return Err(ConditionError::TwistBelowSurface { twist, surface: f });
    }
    let (res, tr) = residual(field, x, surface)?;
    let whole = conditions::instance_cohomology_p3(field, x, twist)?;
    let rest = conditions::instance_cohomology_p3(field, &res, twist - f)?;
    let cut = conditions::instance_cohomology_trace(field, &tr, twist)?;
    Ok(CastelnuovoReport {
        x: twist,
        surface_degree: f,
        h0: whole.h0,
        h1: whole.h1,
        residual_h0: rest.h0,
        residual_h1: rest.h1,
        trace_h0: cut.h0,
        trace_h1: cut.h1,
        degree: x.degree(twist)?,
        residual_degree: res.degree(twist - f)?,
        trace_degree: tr.degree(twist)?,
    })
}
