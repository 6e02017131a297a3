//! Condition matrices: linear functionals on forms whose common kernel is
//! the space of forms vanishing on an instance.
//!
//! Columns are monomials of the ambient coordinate ring. Rows are grouped by
//! the component they come from; the ledger records which.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactlin::{FMatrix, FieldError, PrimeField};
use crate::schemecalc::{
    SchemeComponent, SchemeError, Surface, TraceCurve, TraceItem, TraceScheme, UnionScheme,
};
use crate::space::{PlaneP3, ProjPoint, QuadricP3};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("twist {twist} is below the surface degree {surface}")]
    TwistBelowSurface { twist: u64, surface: u64 },
    #[error("builder does not match the trace surface: {0}")]
    WrongSurface(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ambient {
    P3 { t: u64 },
    Plane { t: u64 },
    Quadric { a: u64, b: u64 },
}

impl Ambient {
    /// Dimension of the space of forms.
    pub fn forms(&self) -> u64 {
        match *self {
            Ambient::P3 { t } => crate::postnum::binom(t as i64 + 3, 3),
            Ambient::Plane { t } => crate::postnum::binom(t as i64 + 2, 2),
            Ambient::Quadric { a, b } => (a + 1) * (b + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    Evaluation,
    /// A directional derivative along a tangent vector.
    Derivative,
    /// A partial of the given multi-order at a fat point, in the moved frame.
    Jet(Vec<u32>),
    /// Evaluation at the i-th sample of a curve.
    CurveSample(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowOrigin {
    pub component: usize,
    pub kind: RowKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionMatrix {
    pub ambient: Ambient,
    pub matrix: FMatrix,
    pub row_ledger: Vec<RowOrigin>,
}

/// `h^0` and `h^1` of the ideal sheaf of an instance, with the raw counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cohomology {
    pub h0: u64,
    pub h1: u64,
    pub rank: u64,
    pub rows: u64,
    pub cols: u64,
}

impl ConditionMatrix {
    pub fn cohomology(&self, field: &PrimeField) -> Cohomology {
        let rank = self.matrix.rank(field) as u64;
        let (rows, cols) = (self.matrix.rows() as u64, self.matrix.cols() as u64);
        let c = Cohomology {
            h0: cols - rank,
            h1: rows - rank,
            rank,
            rows,
            cols,
        };
        assert_eq!(
            c.h0 as i64 - c.h1 as i64,
            cols as i64 - rows as i64,
            "rank-nullity"
        );
        c
    }
}

/// Exponent vectors of total degree `deg` in `nvars` variables, the first
/// variable's exponent descending.
pub fn monomials(nvars: usize, deg: u32) -> Vec<Vec<u32>> {
    if nvars == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    if nvars == 1 {
        return vec![vec![deg]];
    }
    (0..=deg)
        .rev()
        .flat_map(|e| {
            monomials(nvars - 1, deg - e).into_iter().map(move |mut rest| {
                rest.insert(0, e);
                rest
            })
        })
        .collect()
}

fn dual_mul(field: &PrimeField, x: (u64, u64), y: (u64, u64)) -> (u64, u64) {
    (
        field.mul(x.0, y.0),
        field.add(field.mul(x.0, y.1), field.mul(x.1, y.0)),
    )
}

fn dual_pow(field: &PrimeField, x: (u64, u64), e: u32) -> (u64, u64) {
    if e == 0 {
        return (1, 0);
    }
    let lead = field.pow(x.0, e as u64 - 1);
    (
        field.mul(lead, x.0),
        field.mul(field.mul(field.reduce(e as u64), lead), x.1),
    )
}

/// Value and first-order term of a monomial at `x0 + eps x1`.
fn dual_eval(field: &PrimeField, exps: &[u32], x0: &[u64], x1: &[u64]) -> (u64, u64) {
    exps.iter()
        .enumerate()
        .fold((1, 0), |acc, (i, &e)| dual_mul(field, acc, dual_pow(field, (x0[i], x1[i]), e)))
}

fn eval_row(field: &PrimeField, monos: &[Vec<u32>], x: &[u64]) -> Vec<u64> {
    let zero = vec![0; x.len()];
    monos.iter().map(|e| dual_eval(field, e, x, &zero).0).collect()
}

fn derivative_row(field: &PrimeField, monos: &[Vec<u32>], x: &[u64], d: &[u64]) -> Vec<u64> {
    monos.iter().map(|e| dual_eval(field, e, x, d).1).collect()
}

/// Rows for `m P` on forms of degree `t` in `n` variables: after the change
/// of coordinates `x = A y` with `A e_0 = center`, the coefficients of
/// `y_0^{t-|beta|} y^beta` with `|beta| < m`.
fn fat_point_rows(
    field: &PrimeField,
    monos: &[Vec<u32>],
    center: &[u64],
    m: u32,
) -> Vec<(Vec<u32>, Vec<u64>)> {
    let n = center.len();
    let pivot = center.iter().position(|&c| c != 0).expect("nonzero center");
    // x_i = c_i y_0 + y_{slot(i)} for i != pivot, where y_{slot(i)} replaces e_i
    let slot = |i: usize| if i < pivot { Some(i) } else if i > pivot { Some(i - 1) } else { None };
    let jets: Vec<Vec<u32>> = (0..m).flat_map(|d| monomials(n - 1, d)).collect();
    let index = |beta: &[u32]| jets.iter().position(|b| b == beta);
    let succ: Vec<Vec<Option<usize>>> = jets
        .iter()
        .map(|b| {
            (0..n - 1)
                .map(|k| {
                    let mut nb = b.clone();
                    nb[k] += 1;
                    index(&nb)
                })
                .collect()
        })
        .collect();

    let mut cols: Vec<Vec<u64>> = Vec::with_capacity(monos.len());
    for alpha in monos {
        let mut poly = vec![0u64; jets.len()];
        poly[0] = 1;
        for (i, &e) in alpha.iter().enumerate() {
            for _ in 0..e {
                let mut next = vec![0u64; jets.len()];
                for (j, &v) in poly.iter().enumerate() {
                    if v == 0 {
                        continue;
                    }
                    next[j] = field.add(next[j], field.mul(v, center[i]));
                    if let Some(k) = slot(i) {
                        if let Some(s) = succ[j][k] {
                            next[s] = field.add(next[s], v);
                        }
                    }
                }
                poly = next;
            }
        }
        cols.push(poly);
    }
    jets.iter()
        .enumerate()
        .map(|(r, beta)| (beta.clone(), cols.iter().map(|c| c[r]).collect()))
        .collect()
}

struct Rows {
    matrix: FMatrix,
    ledger: Vec<RowOrigin>,
}

impl Rows {
    fn new(cols: usize) -> Self {
        Self {
            matrix: FMatrix::with_cols(cols),
            ledger: Vec::new(),
        }
    }

    fn push(&mut self, component: usize, kind: RowKind, row: &[u64]) {
        self.matrix.push_row(row);
        self.ledger.push(RowOrigin { component, kind });
    }

    fn finish(self, ambient: Ambient, degree: u64) -> ConditionMatrix {
        assert_eq!(
            self.matrix.rows() as u64,
            degree,
            "row count must equal the scheme degree"
        );
        ConditionMatrix {
            ambient,
            matrix: self.matrix,
            row_ledger: self.ledger,
        }
    }
}

/// Conditions imposed by `x` on degree-`t` forms of P^3.
pub fn build_p3(field: &PrimeField, x: &UnionScheme, t: u64) -> Result<ConditionMatrix, ConditionError> {
    field.require_above(t + 1)?;
    let degree = x.degree(t)?;
    let monos = monomials(4, t as u32);
    let mut rows = Rows::new(monos.len());
    for (i, c) in x.components().iter().enumerate() {
        match c {
            SchemeComponent::FatPoint { center, m } => {
                for (beta, row) in fat_point_rows(field, &monos, center.coords(), *m) {
                    rows.push(i, RowKind::Jet(beta), &row);
                }
            }
            SchemeComponent::Line(l) => {
                for s in 0..=t {
                    let p = l.point_at(field, s);
                    rows.push(i, RowKind::CurveSample(s), &eval_row(field, &monos, p.coords()));
                }
            }
            SchemeComponent::SimplePoint(p) => {
                rows.push(i, RowKind::Evaluation, &eval_row(field, &monos, p.coords()));
            }
            SchemeComponent::TangentVector { support, direction } => {
                if x.decoration(i).is_none() {
                    rows.push(i, RowKind::Evaluation, &eval_row(field, &monos, support.coords()));
                }
                let row = derivative_row(field, &monos, support.coords(), direction.coords());
                rows.push(i, RowKind::Derivative, &row);
            }
        }
    }
    Ok(rows.finish(Ambient::P3 { t }, degree))
}

fn plane_coords(field: &PrimeField, h: &PlaneP3, x: &ProjPoint) -> [u64; 3] {
    h.coords_of(field, x).expect("validated trace lies on the plane")
}

/// Conditions imposed by a plane trace on degree-`t` forms of the plane.
pub fn build_plane(field: &PrimeField, tr: &TraceScheme, t: u64) -> Result<ConditionMatrix, ConditionError> {
    let Surface::Plane(h) = tr.surface() else {
        return Err(ConditionError::WrongSurface("build_plane needs a plane trace"));
    };
    field.require_above(t + 1)?;
    let has_conic = tr
        .items()
        .iter()
        .any(|it| matches!(it, TraceItem::CurveOnSurface(TraceCurve::Conic(_))));
    if has_conic {
        field.require_above(2 * t + 1)?;
    }
    let degree = tr.degree(t)?;
    let monos = monomials(3, t as u32);
    let mut rows = Rows::new(monos.len());
    for (i, item) in tr.items().iter().enumerate() {
        match item {
            TraceItem::PlaneFatPoint { center, m } => {
                for (beta, row) in fat_point_rows(field, &monos, &plane_coords(field, h, center), *m) {
                    rows.push(i, RowKind::Jet(beta), &row);
                }
            }
            TraceItem::SurfacePoint(p) => {
                rows.push(i, RowKind::Evaluation, &eval_row(field, &monos, &plane_coords(field, h, p)));
            }
            TraceItem::SurfaceTangentVector { support, direction } => {
                let s = plane_coords(field, h, support);
                if tr.decoration(i).is_none() {
                    rows.push(i, RowKind::Evaluation, &eval_row(field, &monos, &s));
                }
                let d = plane_coords(field, h, direction);
                rows.push(i, RowKind::Derivative, &derivative_row(field, &monos, &s, &d));
            }
            TraceItem::CurveOnSurface(TraceCurve::Line { line, .. }) => {
                for s in 0..=t {
                    let w = plane_coords(field, h, &line.point_at(field, s));
                    rows.push(i, RowKind::CurveSample(s), &eval_row(field, &monos, &w));
                }
            }
            TraceItem::CurveOnSurface(TraceCurve::Conic(c)) => {
                for s in 0..=2 * t {
                    let w = plane_coords(field, h, &c.point_at(field, 1, s));
                    rows.push(i, RowKind::CurveSample(s), &eval_row(field, &monos, &w));
                }
            }
        }
    }
    Ok(rows.finish(Ambient::Plane { t }, degree))
}

fn quadric_params(field: &PrimeField, q: &QuadricP3, x: &ProjPoint) -> ([u64; 2], [u64; 2]) {
    q.params_of(field, x).expect("validated trace lies on the quadric")
}

/// Tangent `(sigma', tau')` in parameter space of a direction `d` in the
/// tangent plane at `(sigma, tau)`.
fn parameter_tangent(
    field: &PrimeField,
    q: &QuadricP3,
    sigma: [u64; 2],
    tau: [u64; 2],
    d: &ProjPoint,
) -> Option<[u64; 4]> {
    let gens = [
        q.image_vector(field, [1, 0], tau),
        q.image_vector(field, [0, 1], tau),
        q.image_vector(field, sigma, [1, 0]),
        q.image_vector(field, sigma, [0, 1]),
        q.image_vector(field, sigma, tau),
        *d.coords(),
    ];
    let mut m = FMatrix::zeros(4, 6);
    for (c, g) in gens.iter().enumerate() {
        for r in 0..4 {
            m.set(r, c, g[r]);
        }
    }
    let v = m.nullspace(field).into_iter().find(|v| v[5] != 0)?;
    let scale = field.neg(field.inv(v[5]));
    Some(std::array::from_fn(|i| field.mul(v[i], scale)))
}

/// Conditions imposed by a quadric trace on forms of bidegree `(a, b)`.
pub fn build_quadric(
    field: &PrimeField,
    tr: &TraceScheme,
    a: u64,
    b: u64,
) -> Result<ConditionMatrix, ConditionError> {
    let Surface::Quadric(q) = tr.surface() else {
        return Err(ConditionError::WrongSurface("build_quadric needs a quadric trace"));
    };
    field.require_above(a.max(b) + 1)?;
    let degree = tr.degree_at(a, b)?;
    // column (i, j) <-> s^i t^(a-i) u^j v^(b-j)
    let monos: Vec<Vec<u32>> = (0..=a as u32)
        .rev()
        .flat_map(|i| (0..=b as u32).rev().map(move |j| vec![i, a as u32 - i, j, b as u32 - j]))
        .collect();
    let at = |sigma: [u64; 2], tau: [u64; 2]| [sigma[0], sigma[1], tau[0], tau[1]];
    let mut rows = Rows::new(monos.len());
    for (i, item) in tr.items().iter().enumerate() {
        match item {
            TraceItem::PlaneFatPoint { .. } => {
                return Err(SchemeError::UnsupportedTrace("fat point on a quadric".into()).into())
            }
            TraceItem::SurfacePoint(p) => {
                let (s, u) = quadric_params(field, q, p);
                rows.push(i, RowKind::Evaluation, &eval_row(field, &monos, &at(s, u)));
            }
            TraceItem::SurfaceTangentVector { support, direction } => {
                let (s, u) = quadric_params(field, q, support);
                if tr.decoration(i).is_none() {
                    rows.push(i, RowKind::Evaluation, &eval_row(field, &monos, &at(s, u)));
                }
                let d = parameter_tangent(field, q, s, u, direction).ok_or_else(|| {
                    SchemeError::InvalidTrace("tangent vector direction is not tangent to the quadric".into())
                })?;
                rows.push(i, RowKind::Derivative, &derivative_row(field, &monos, &at(s, u), &d));
            }
            TraceItem::CurveOnSurface(TraceCurve::Line { line, .. }) => {
                let (ruling, fixed) = q
                    .ruling_of(field, line)
                    .ok_or_else(|| SchemeError::InvalidTrace("line is not a ruling line".into()))?;
                let samples = match ruling {
                    crate::space::Ruling::OneZero => b,
                    crate::space::Ruling::ZeroOne => a,
                };
                for j in 0..=samples {
                    let x = match ruling {
                        crate::space::Ruling::OneZero => at(fixed, [1, j]),
                        crate::space::Ruling::ZeroOne => at([1, j], fixed),
                    };
                    rows.push(i, RowKind::CurveSample(j), &eval_row(field, &monos, &x));
                }
            }
            TraceItem::CurveOnSurface(TraceCurve::Conic(_)) => {
                return Err(ConditionError::WrongSurface("conics are supported only on planes"))
            }
        }
    }
    Ok(rows.finish(Ambient::Quadric { a, b }, degree))
}

/// What to compute cohomology of.
#[derive(Debug, Clone, Copy)]
pub enum Instance<'a> {
    P3(&'a UnionScheme),
    Trace(&'a TraceScheme),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Twist {
    Degree(u64),
    /// Only meaningful for a quadric trace.
    Bidegree(u64, u64),
}

/// `(h^0, h^1)` of the ideal sheaf of an instance at a twist.
pub fn instance_cohomology(
    field: &PrimeField,
    instance: Instance<'_>,
    twist: Twist,
) -> Result<Cohomology, ConditionError> {
    let m = match (instance, twist) {
        (Instance::P3(x), Twist::Degree(t)) => build_p3(field, x, t)?,
        (Instance::Trace(tr), Twist::Degree(t)) => match tr.surface() {
            Surface::Plane(_) => build_plane(field, tr, t)?,
            Surface::Quadric(_) => build_quadric(field, tr, t, t)?,
        },
        (Instance::Trace(tr), Twist::Bidegree(a, b)) => build_quadric(field, tr, a, b)?,
        (Instance::P3(_), Twist::Bidegree(..)) => {
            return Err(ConditionError::WrongSurface("bidegree twist on P^3"))
        }
    };
    Ok(m.cohomology(field))
}

pub fn instance_cohomology_p3(field: &PrimeField, x: &UnionScheme, t: u64) -> Result<Cohomology, ConditionError> {
    instance_cohomology(field, Instance::P3(x), Twist::Degree(t))
}

pub fn instance_cohomology_trace(
    field: &PrimeField,
    tr: &TraceScheme,
    x: u64,
) -> Result<Cohomology, ConditionError> {
    instance_cohomology(field, Instance::Trace(tr), Twist::Degree(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::postnum::binom;
    use crate::space::{
        line_line, sample_line, sample_point, LineConstraint, LineLine, LineP3, PointConstraint, Ruling,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field() -> PrimeField {
        PrimeField::default()
    }

    fn skew(f: &PrimeField, r: &mut ChaCha8Rng, n: usize, avoid: &[ProjPoint]) -> Vec<LineP3> {
        let mut out: Vec<LineP3> = Vec::new();
        while out.len() < n {
            let l = sample_line(f, r, LineConstraint::Free).unwrap();
            if out.iter().all(|m| line_line(f, &l, m) == LineLine::Skew)
                && avoid.iter().all(|p| !l.contains(f, p))
            {
                out.push(l);
            }
        }
        out
    }

    #[test]
    fn monomial_counts() {
        for t in 0..=12u32 {
            assert_eq!(monomials(4, t).len() as u64, binom(t as i64 + 3, 3));
            assert_eq!(monomials(3, t).len() as u64, binom(t as i64 + 2, 2));
        }
        assert_eq!(monomials(3, 1), vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn p3_examples() {
        let f = field();
        let mut r = ChaCha8Rng::seed_from_u64(11);
        let p = sample_point(&f, &mut r, PointConstraint::Free, &[]).unwrap();
        let one = UnionScheme::new(&f, vec![SchemeComponent::SimplePoint(p)]).unwrap();
        let m = build_p3(&f, &one, 1).unwrap();
        assert_eq!((m.matrix.rows(), m.matrix.cols()), (1, 4));
        assert_eq!(m.matrix.kernel_dim(&f), 3);

        let fat = UnionScheme::new(&f, vec![SchemeComponent::FatPoint { center: p, m: 2 }]).unwrap();
        let m = build_p3(&f, &fat, 1).unwrap();
        assert_eq!((m.matrix.rows(), m.matrix.rank(&f)), (4, 4));

        let lines = UnionScheme::new(&f, skew(&f, &mut r, 3, &[]).into_iter().map(SchemeComponent::Line).collect()).unwrap();
        let m = build_p3(&f, &lines, 2).unwrap();
        assert_eq!((m.matrix.rows(), m.matrix.cols(), m.matrix.rank(&f)), (9, 10, 9));
    }

    #[test]
    fn p3_cohomology_examples() {
        let f = field();
        let mut r = ChaCha8Rng::seed_from_u64(12);
        let c = instance_cohomology_p3(&f, &UnionScheme::empty(), 2).unwrap();
        assert_eq!((c.h0, c.h1), (10, 0));
        let two = UnionScheme::new(&f, skew(&f, &mut r, 2, &[]).into_iter().map(SchemeComponent::Line).collect()).unwrap();
        let c = instance_cohomology_p3(&f, &two, 1).unwrap();
        assert_eq!((c.h0, c.h1), (0, 0));
    }

    #[test]
    fn fat_point_with_six_lines_at_four() {
        let f = field();
        let mut r = ChaCha8Rng::seed_from_u64(13);
        let p = sample_point(&f, &mut r, PointConstraint::Free, &[]).unwrap();
        let mut comps = vec![SchemeComponent::FatPoint { center: p, m: 2 }];
        comps.extend(skew(&f, &mut r, 6, &[p]).into_iter().map(SchemeComponent::Line));
        let x = UnionScheme::new(&f, comps).unwrap();
        assert_eq!(x.degree(4), Ok(34));
        let c = instance_cohomology_p3(&f, &x, 4).unwrap();
        assert_eq!((c.h0, c.h1), (1, 0));
    }

    #[test]
    fn fat_point_rows_are_independent() {
        let f = field();
        let mut r = ChaCha8Rng::seed_from_u64(14);
        for m in 1..=6u32 {
            for t in (m as u64 - 1)..=(m as u64 + 2) {
                let p = sample_point(&f, &mut r, PointConstraint::Free, &[]).unwrap();
                let x = UnionScheme::new(&f, vec![SchemeComponent::FatPoint { center: p, m }]).unwrap();
                let mat = build_p3(&f, &x, t).unwrap();
                assert_eq!(mat.matrix.rank(&f) as u64, binom(m as i64 + 2, 3), "m={m} t={t}");
            }
        }
        // a coordinate point exercises the pivot choice
        let x = UnionScheme::new(&f, vec![SchemeComponent::FatPoint { center: ProjPoint::basis(2), m: 3 }]).unwrap();
        assert_eq!(build_p3(&f, &x, 3).unwrap().matrix.rank(&f), 10);
    }

    #[test]
    fn fat_point_rows_match_vanishing_order() {
        // the cubic x1^2 x0 vanishes to order exactly 2 at (1:0:0:0)
        let f = field();
        let monos = monomials(4, 3);
        let rows = fat_point_rows(&f, &monos, &[1, 0, 0, 0], 3);
        let col = monos.iter().position(|e| e == &vec![1, 2, 0, 0]).unwrap();
        let hits: Vec<&Vec<u32>> = rows.iter().filter(|(_, r)| r[col] != 0).map(|(b, _)| b).collect();
        assert_eq!(hits, vec![&vec![2, 0, 0]]);
    }

    #[test]
    fn extra_line_sample_never_adds_rank() {
        let f = field();
        let mut r = ChaCha8Rng::seed_from_u64(15);
        for t in 1..6 {
            let l = sample_line(&f, &mut r, LineConstraint::Free).unwrap();
            let x = UnionScheme::new(&f, vec![SchemeComponent::Line(l)]).unwrap();
            let mut m = build_p3(&f, &x, t).unwrap().matrix;
            let before = m.rank(&f);
            let monos = monomials(4, t as u32);
            m.push_row(&eval_row(&f, &monos, l.point_at(&f, 12345).coords()));
            assert_eq!(m.rank(&f), before);
        }
    }

    #[test]
    fn plane_examples() {
        let f = field();
        let mut r = ChaCha8Rng::seed_from_u64(16);
        let h = PlaneP3::from_coeffs(&f, [2, 7, 1, 8]).unwrap();
        let plane = Surface::Plane(h.clone());
        let p = sample_point(&f, &mut r, PointConstraint::OnPlane(&h), &[]).unwrap();
        let tr = TraceScheme::new(&f, plane.clone(), vec![TraceItem::SurfacePoint(p)]).unwrap();
        assert_eq!(build_plane(&f, &tr, 1).unwrap().matrix.kernel_dim(&f), 2);

        let tr = TraceScheme::new(&f, plane.clone(), vec![TraceItem::PlaneFatPoint { center: p, m: 2 }]).unwrap();
        let m = build_plane(&f, &tr, 2).unwrap();
        assert_eq!((m.matrix.rows(), m.matrix.rank(&f), m.matrix.kernel_dim(&f)), (3, 3, 3));

        let l = sample_line(&f, &mut r, LineConstraint::InPlane(&h)).unwrap();
        let q1 = sample_point(&f, &mut r, PointConstraint::OnPlane(&h), &[]).unwrap();
        let q2 = sample_point(&f, &mut r, PointConstraint::OnPlane(&h), &[q1]).unwrap();
        let tr = TraceScheme::new(&f, plane, vec![
            TraceItem::CurveOnSurface(TraceCurve::Line { line: l, ruling: None }),
            TraceItem::SurfacePoint(q1),
            TraceItem::SurfacePoint(q2),
        ])
        .unwrap();
        let m = build_plane(&f, &tr, 2).unwrap();
        assert_eq!((m.matrix.rows(), m.matrix.kernel_dim(&f)), (5, 1));
    }

    #[test]
    fn conic_imposes_two_t_plus_one() {
        let f = field();
        let mut r = ChaCha8Rng::seed_from_u64(17);
        let h = PlaneP3::from_coeffs(&f, [1, 0, 0, 3]).unwrap();
        let c = crate::space::ConicInPlane::random(&f, h.clone(), &mut r).unwrap();
        let tr = TraceScheme::new(&f, Surface::Plane(h), vec![TraceItem::CurveOnSurface(TraceCurve::Conic(c))]).unwrap();
        for t in 2..6 {
            let coh = instance_cohomology_trace(&f, &tr, t).unwrap();
            assert_eq!((coh.h0, coh.h1), (binom(t as i64, 2), 0), "t={t}");
        }
    }

    #[test]
    fn quadric_examples() {
        let f = field();
        let mut r = ChaCha8Rng::seed_from_u64(18);
        let q = QuadricP3::random(&f, &mut r).unwrap();
        let s = Surface::Quadric(q.clone());
        let empty = TraceScheme::new(&f, s.clone(), vec![]).unwrap();
        assert_eq!(build_quadric(&f, &empty, 2, 1).unwrap().matrix.kernel_dim(&f), 6);

        let l = q.ruling_line(&f, Ruling::ZeroOne, [3, 5]);
        let one = TraceScheme::new(&f, s.clone(), vec![TraceItem::CurveOnSurface(TraceCurve::Line { line: l, ruling: None })]).unwrap();
        let m = build_quadric(&f, &one, 3, 3).unwrap();
        assert_eq!((m.matrix.rows(), m.matrix.kernel_dim(&f)), (4, 12));

        let mut pts = Vec::new();
        for _ in 0..4 {
            pts.push(sample_point(&f, &mut r, PointConstraint::OnQuadric(&q), &pts).unwrap());
        }
        let four = TraceScheme::new(&f, s, pts.into_iter().map(TraceItem::SurfacePoint).collect()).unwrap();
        let m = build_quadric(&f, &four, 1, 1).unwrap();
        assert_eq!((m.matrix.rank(&f), m.matrix.kernel_dim(&f)), (4, 0));
    }

    #[test]
    fn quadric_tangent_vector_agrees_with_restriction() {
        // On (1,1) forms, i.e. plane sections, a tangent vector imposes the
        // same conditions as the corresponding P^3 tangent vector on planes.
        let f = field();
        let mut r = ChaCha8Rng::seed_from_u64(19);
        let q = QuadricP3::random(&f, &mut r).unwrap();
        let s = sample_point(&f, &mut r, PointConstraint::OnQuadric(&q), &[]).unwrap();
        let tp = PlaneP3::from_coeffs(&f, q.tangent_plane(&f, &s)).unwrap();
        let d = sample_point(&f, &mut r, PointConstraint::OnPlane(&tp), &[s]).unwrap();
        let tr = TraceScheme::new(&f, Surface::Quadric(q), vec![TraceItem::SurfaceTangentVector { support: s, direction: d }]).unwrap();
        let c = instance_cohomology(&f, Instance::Trace(&tr), Twist::Bidegree(1, 1)).unwrap();
        assert_eq!((c.h0, c.h1), (2, 0));
        let x = UnionScheme::new(&f, vec![SchemeComponent::TangentVector { support: s, direction: d }]).unwrap();
        let p = instance_cohomology_p3(&f, &x, 1).unwrap();
        assert_eq!((p.h0, p.h1), (2, 0));
    }

    #[test]
    fn small_field_is_rejected() {
        let f = PrimeField::new(3).unwrap();
        assert!(matches!(
            build_p3(&f, &UnionScheme::empty(), 2),
            Err(ConditionError::Field(FieldError::FieldTooSmall { .. }))
        ));
    }
}
