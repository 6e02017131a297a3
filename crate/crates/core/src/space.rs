//! Projective geometry of P^3 over a prime field.
//!
//! Lines are stored as point spans, planes carry an explicit basis, and the
//! smooth quadric is stored as the image of P^1 x P^1 under an invertible
//! linear map of the Segre embedding. Every sampler works by rejection with
//! a bounded retry budget so configurations stay inside `F_p`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::exactlin::{FMatrix, PrimeField};

/// Retry budget for constrained sampling.
pub const RETRY_BUDGET: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("all homogeneous coordinates are zero")]
    ZeroVector,
    #[error("spanning points of a line coincide")]
    DegenerateLine,
    #[error("plane basis is not projectively independent or does not lie on the plane")]
    DegeneratePlane,
    #[error("quadric parametrization does not span P^3")]
    SingularQuadric,
    #[error("conic is singular")]
    SingularConic,
    #[error("point does not satisfy the required constraint: {0}")]
    ConstraintViolated(&'static str),
    #[error("resampling budget of {0} exhausted")]
    ResamplingExhausted(usize),
}

/// A point of P^3, normalized so its first nonzero coordinate is 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProjPoint([u64; 4]);

impl fmt::Debug for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a}:{b}:{c}:{d})")
    }
}

impl ProjPoint {
    pub fn new(field: &PrimeField, coords: [u64; 4]) -> Result<Self, GeometryError> {
        let coords = coords.map(|x| field.reduce(x));
        let lead = coords
            .iter()
            .copied()
            .find(|&x| x != 0)
            .ok_or(GeometryError::ZeroVector)?;
        let inv = field.inv(lead);
        Ok(Self(coords.map(|x| field.mul(x, inv))))
    }

    pub fn from_slice(field: &PrimeField, v: &[u64]) -> Result<Self, GeometryError> {
        Self::new(field, [v[0], v[1], v[2], v[3]])
    }

    pub fn coords(&self) -> &[u64; 4] {
        &self.0
    }

    /// The standard basis point `e_i`.
    pub fn basis(i: usize) -> Self {
        let mut c = [0; 4];
        c[i] = 1;
        Self(c)
    }
}

/// `lambda * a + mu * b` on coordinate vectors.
fn combine(field: &PrimeField, lambda: u64, a: &[u64; 4], mu: u64, b: &[u64; 4]) -> [u64; 4] {
    std::array::from_fn(|i| field.add(field.mul(lambda, a[i]), field.mul(mu, b[i])))
}

fn rank_of(field: &PrimeField, pts: &[&[u64; 4]]) -> usize {
    let mut m = FMatrix::with_cols(4);
    for p in pts {
        m.push_row(&p[..]);
    }
    m.rank(field)
}

fn random_element<R: Rng + ?Sized>(field: &PrimeField, rng: &mut R) -> u64 {
    rng.gen_range(0..field.modulus())
}

fn random_vector<R: Rng + ?Sized, const N: usize>(field: &PrimeField, rng: &mut R) -> [u64; N] {
    std::array::from_fn(|_| random_element(field, rng))
}

/// A line of P^3 as the span of two distinct points.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineP3 {
    a: ProjPoint,
    b: ProjPoint,
}

impl fmt::Debug for LineP3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{:?},{:?}>", self.a, self.b)
    }
}

impl LineP3 {
    pub fn new(field: &PrimeField, a: ProjPoint, b: ProjPoint) -> Result<Self, GeometryError> {
        if rank_of(field, &[&a.0, &b.0]) < 2 {
            return Err(GeometryError::DegenerateLine);
        }
        Ok(Self { a, b })
    }

    pub fn span(&self) -> (ProjPoint, ProjPoint) {
        (self.a, self.b)
    }

    /// The affine parametrization `a + s b`; distinct `s` give distinct points.
    pub fn point_at(&self, field: &PrimeField, s: u64) -> ProjPoint {
        ProjPoint::new(field, combine(field, 1, &self.a.0, s, &self.b.0))
            .expect("independent span points")
    }

    pub fn point_hom(&self, field: &PrimeField, lambda: u64, mu: u64) -> ProjPoint {
        ProjPoint::new(field, combine(field, lambda, &self.a.0, mu, &self.b.0))
            .expect("independent span points")
    }

    pub fn contains(&self, field: &PrimeField, x: &ProjPoint) -> bool {
        rank_of(field, &[&self.a.0, &self.b.0, &x.0]) == 2
    }
}

/// A plane: its linear form plus three independent points spanning it.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneP3 {
    coeffs: [u64; 4],
    basis: [ProjPoint; 3],
}

impl fmt::Debug for PlaneP3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Plane{:?}", self.coeffs)
    }
}

impl PlaneP3 {
    pub fn from_coeffs(field: &PrimeField, coeffs: [u64; 4]) -> Result<Self, GeometryError> {
        let coeffs = ProjPoint::new(field, coeffs)?.0;
        let ns = FMatrix::new(1, 4, coeffs.to_vec()).nullspace(field);
        let basis = [0, 1, 2].map(|i| ProjPoint::from_slice(field, &ns[i]).expect("kernel vector"));
        Self::validated(field, coeffs, basis)
    }

    pub fn through_points(
        field: &PrimeField,
        p: &ProjPoint,
        q: &ProjPoint,
        r: &ProjPoint,
    ) -> Result<Self, GeometryError> {
        let mut m = FMatrix::with_cols(4);
        for x in [p, q, r] {
            m.push_row(&x.0);
        }
        let ns = m.nullspace(field);
        if ns.len() != 1 {
            return Err(GeometryError::DegeneratePlane);
        }
        let coeffs = ProjPoint::from_slice(field, &ns[0])?.0;
        Self::validated(field, coeffs, [*p, *q, *r])
    }

    fn validated(
        field: &PrimeField,
        coeffs: [u64; 4],
        basis: [ProjPoint; 3],
    ) -> Result<Self, GeometryError> {
        let plane = Self { coeffs, basis };
        if basis.iter().any(|b| plane.eval(field, b) != 0)
            || rank_of(field, &[&basis[0].0, &basis[1].0, &basis[2].0]) != 3
        {
            return Err(GeometryError::DegeneratePlane);
        }
        Ok(plane)
    }

    pub fn coeffs(&self) -> &[u64; 4] {
        &self.coeffs
    }

    pub fn basis(&self) -> &[ProjPoint; 3] {
        &self.basis
    }

    pub fn eval(&self, field: &PrimeField, x: &ProjPoint) -> u64 {
        field.dot(&self.coeffs, &x.0)
    }

    pub fn contains(&self, field: &PrimeField, x: &ProjPoint) -> bool {
        self.eval(field, x) == 0
    }

    pub fn contains_line(&self, field: &PrimeField, l: &LineP3) -> bool {
        self.contains(field, &l.a) && self.contains(field, &l.b)
    }

    /// The point `x e0 + y e1 + z e2`.
    pub fn embed(&self, field: &PrimeField, w: [u64; 3]) -> Result<ProjPoint, GeometryError> {
        let [e0, e1, e2] = &self.basis;
        let v: [u64; 4] = std::array::from_fn(|i| {
            field.add(
                field.add(field.mul(w[0], e0.0[i]), field.mul(w[1], e1.0[i])),
                field.mul(w[2], e2.0[i]),
            )
        });
        ProjPoint::new(field, v)
    }

    /// Coordinates of `x` in the plane basis, for a point on the plane.
    pub fn coords_of(&self, field: &PrimeField, x: &ProjPoint) -> Option<[u64; 3]> {
        if !self.contains(field, x) {
            return None;
        }
        let mut m = FMatrix::zeros(4, 4);
        for i in 0..4 {
            for (j, e) in self.basis.iter().enumerate() {
                m.set(i, j, e.0[i]);
            }
            m.set(i, 3, field.neg(x.0[i]));
        }
        let ns = m.nullspace(field);
        let v = ns.into_iter().find(|v| v[3] != 0)?;
        let inv = field.inv(v[3]);
        Some([0, 1, 2].map(|i| field.mul(v[i], inv)))
    }

    /// Homogeneous plane coordinates of a direction vector lying in the plane
    /// (no normalization is applied).
    pub fn vector_coords(&self, field: &PrimeField, x: &[u64; 4]) -> Option<[u64; 3]> {
        if field.dot(&self.coeffs, x) != 0 {
            return None;
        }
        let p = ProjPoint::new(field, *x).ok()?;
        let w = self.coords_of(field, &p)?;
        let lead = x.iter().copied().find(|&c| c != 0)?;
        Some(w.map(|c| field.mul(c, lead)))
    }
}

/// The two rulings of a smooth quadric. `OneZero` lines are the images of
/// `{(s:t) fixed} x P^1`, `ZeroOne` lines of `P^1 x {(u:v) fixed}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ruling {
    #[serde(rename = "(1,0)")]
    OneZero,
    #[serde(rename = "(0,1)")]
    ZeroOne,
}

impl Ruling {
    pub fn other(self) -> Self {
        match self {
            Ruling::OneZero => Ruling::ZeroOne,
            Ruling::ZeroOne => Ruling::OneZero,
        }
    }
}

/// Parameters `((s:t),(u:v))` of a point on a quadric.
pub type QuadricParams = ([u64; 2], [u64; 2]);

/// A smooth quadric: `X(s,t,u,v) = sum_{i,j} sigma_i tau_j T[i][j]` with
/// `sigma = (s,t)`, `tau = (u,v)`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadricP3 {
    param: [[[u64; 4]; 2]; 2],
    /// Inverse of the 4x4 matrix whose columns are T00, T01, T10, T11.
    inverse: Vec<u64>,
}

impl fmt::Debug for QuadricP3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Quadric{:?}", self.param)
    }
}

impl QuadricP3 {
    pub fn from_param(
        field: &PrimeField,
        param: [[[u64; 4]; 2]; 2],
    ) -> Result<Self, GeometryError> {
        let mut a = FMatrix::zeros(4, 4);
        let cols = [param[0][0], param[0][1], param[1][0], param[1][1]];
        for (c, col) in cols.iter().enumerate() {
            for r in 0..4 {
                a.set(r, c, field.reduce(col[r]));
            }
        }
        let inv = a.inverse(field).ok_or(GeometryError::SingularQuadric)?;
        Ok(Self {
            param,
            inverse: inv.entries().to_vec(),
        })
    }

    pub fn random<R: Rng + ?Sized>(field: &PrimeField, rng: &mut R) -> Result<Self, GeometryError> {
        for _ in 0..RETRY_BUDGET {
            let param = [[random_vector(field, rng), random_vector(field, rng)],
                [random_vector(field, rng), random_vector(field, rng)]];
            if let Ok(q) = Self::from_param(field, param) {
                return Ok(q);
            }
        }
        Err(GeometryError::ResamplingExhausted(RETRY_BUDGET))
    }

    pub fn param(&self) -> &[[[u64; 4]; 2]; 2] {
        &self.param
    }

    fn segre_coords(&self, field: &PrimeField, x: &[u64; 4]) -> [u64; 4] {
        std::array::from_fn(|r| field.dot(&self.inverse[r * 4..r * 4 + 4], x))
    }

    /// Image vector of `((s,t),(u,v))` (not normalized).
    pub fn image_vector(&self, field: &PrimeField, sigma: [u64; 2], tau: [u64; 2]) -> [u64; 4] {
        let mut v = [0; 4];
        for i in 0..2 {
            for j in 0..2 {
                let w = field.mul(sigma[i], tau[j]);
                for c in 0..4 {
                    v[c] = field.add(v[c], field.mul(w, self.param[i][j][c]));
                }
            }
        }
        v
    }

    pub fn point(&self, field: &PrimeField, sigma: [u64; 2], tau: [u64; 2]) -> ProjPoint {
        ProjPoint::new(field, self.image_vector(field, sigma, tau)).expect("nonzero parameters")
    }

    /// The quadratic form `y00 y11 - y01 y10` pulled back to P^3 coordinates.
    pub fn form(&self, field: &PrimeField, x: &[u64; 4]) -> u64 {
        let y = self.segre_coords(field, x);
        field.sub(field.mul(y[0], y[3]), field.mul(y[1], y[2]))
    }

    /// Polarization `q(x+y) - q(x) - q(y)`.
    pub fn bilinear(&self, field: &PrimeField, x: &[u64; 4], y: &[u64; 4]) -> u64 {
        let s: [u64; 4] = std::array::from_fn(|i| field.add(x[i], y[i]));
        field.sub(
            field.sub(self.form(field, &s), self.form(field, x)),
            self.form(field, y),
        )
    }

    pub fn contains(&self, field: &PrimeField, x: &ProjPoint) -> bool {
        self.form(field, &x.0) == 0
    }

    /// Linear form of the tangent plane at a point of the quadric.
    pub fn tangent_plane(&self, field: &PrimeField, x: &ProjPoint) -> [u64; 4] {
        std::array::from_fn(|i| self.bilinear(field, &x.0, &ProjPoint::basis(i).0))
    }

    /// Recovers `((s:t),(u:v))` for a point on the quadric.
    pub fn params_of(&self, field: &PrimeField, x: &ProjPoint) -> Option<QuadricParams> {
        if !self.contains(field, x) {
            return None;
        }
        let y = self.segre_coords(field, &x.0);
        // y = (su, sv, tu, tv)
        let sigma = if y[0] != 0 || y[2] != 0 {
            [y[0], y[2]]
        } else {
            [y[1], y[3]]
        };
        let tau = if y[0] != 0 || y[1] != 0 {
            [y[0], y[1]]
        } else {
            [y[2], y[3]]
        };
        Some((normalize2(field, sigma), normalize2(field, tau)))
    }

    pub fn ruling_line(&self, field: &PrimeField, ruling: Ruling, fixed: [u64; 2]) -> LineP3 {
        let (a, b) = match ruling {
            Ruling::OneZero => (self.point(field, fixed, [1, 0]), self.point(field, fixed, [0, 1])),
            Ruling::ZeroOne => (self.point(field, [1, 0], fixed), self.point(field, [0, 1], fixed)),
        };
        LineP3::new(field, a, b).expect("ruling lines are nondegenerate")
    }

    /// The ruling of a line lying on the quadric, with its fixed parameter.
    pub fn ruling_of(&self, field: &PrimeField, line: &LineP3) -> Option<(Ruling, [u64; 2])> {
        let (pa, pb) = (self.params_of(field, &line.a)?, self.params_of(field, &line.b)?);
        if !self.contains(field, &line.point_at(field, 2)) {
            return None;
        }
        if pa.0 == pb.0 {
            Some((Ruling::OneZero, pa.0))
        } else if pa.1 == pb.1 {
            Some((Ruling::ZeroOne, pa.1))
        } else {
            None
        }
    }
}

/// Scale a nonzero pair so its first nonzero entry is 1.
pub fn normalize2(field: &PrimeField, v: [u64; 2]) -> [u64; 2] {
    let lead = if v[0] != 0 { v[0] } else { v[1] };
    let inv = field.inv(lead);
    [field.mul(v[0], inv), field.mul(v[1], inv)]
}

/// A smooth conic in a plane, parametrized as `(l:m) -> B (l^2, lm, m^2)`
/// in the plane's coordinates.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConicInPlane {
    plane: PlaneP3,
    /// Coefficients of `x^2, xy, xz, y^2, yz, z^2` in plane coordinates.
    coeffs: [u64; 6],
    param: [[u64; 3]; 3],
}

impl fmt::Debug for ConicInPlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Conic{:?} in {:?}", self.coeffs, self.plane)
    }
}

impl ConicInPlane {
    pub fn from_param(
        field: &PrimeField,
        plane: PlaneP3,
        param: [[u64; 3]; 3],
    ) -> Result<Self, GeometryError> {
        let b = FMatrix::new(3, 3, param.iter().flatten().map(|&x| field.reduce(x)).collect());
        let inv = b.inverse(field).ok_or(GeometryError::SingularConic)?;
        // q(x) = (r0.x)(r2.x) - (r1.x)^2 with r_i the rows of B^{-1}
        let r = |i: usize| [inv.get(i, 0), inv.get(i, 1), inv.get(i, 2)];
        let (r0, r1, r2) = (r(0), r(1), r(2));
        let prod = |u: [u64; 3], v: [u64; 3]| -> [u64; 6] {
            // coefficient order x^2, xy, xz, y^2, yz, z^2
            let m = |i, j| field.mul(u[i], v[j]);
            [
                m(0, 0),
                field.add(m(0, 1), m(1, 0)),
                field.add(m(0, 2), m(2, 0)),
                m(1, 1),
                field.add(m(1, 2), m(2, 1)),
                m(2, 2),
            ]
        };
        let p02 = prod(r0, r2);
        let p11 = prod(r1, r1);
        let coeffs: [u64; 6] = std::array::from_fn(|i| field.sub(p02[i], p11[i]));
        let conic = Self {
            plane,
            coeffs,
            param,
        };
        if !conic.is_smooth(field) {
            return Err(GeometryError::SingularConic);
        }
        Ok(conic)
    }

    pub fn random<R: Rng + ?Sized>(
        field: &PrimeField,
        plane: PlaneP3,
        rng: &mut R,
    ) -> Result<Self, GeometryError> {
        for _ in 0..RETRY_BUDGET {
            let param = [random_vector(field, rng), random_vector(field, rng), random_vector(field, rng)];
            if let Ok(c) = Self::from_param(field, plane.clone(), param) {
                return Ok(c);
            }
        }
        Err(GeometryError::ResamplingExhausted(RETRY_BUDGET))
    }

    pub fn plane(&self) -> &PlaneP3 {
        &self.plane
    }

    pub fn coeffs(&self) -> &[u64; 6] {
        &self.coeffs
    }

    /// Hessian of the form is invertible.
    fn is_smooth(&self, field: &PrimeField) -> bool {
        let [a, b, c, d, e, g] = self.coeffs;
        let two = |x| field.add(x, x);
        let h = FMatrix::new(3, 3, vec![two(a), b, c, b, two(d), e, c, e, two(g)]);
        h.rank(field) == 3
    }

    pub fn eval_plane(&self, field: &PrimeField, w: &[u64; 3]) -> u64 {
        let [a, b, c, d, e, g] = self.coeffs;
        let terms = [
            field.mul(a, field.mul(w[0], w[0])),
            field.mul(b, field.mul(w[0], w[1])),
            field.mul(c, field.mul(w[0], w[2])),
            field.mul(d, field.mul(w[1], w[1])),
            field.mul(e, field.mul(w[1], w[2])),
            field.mul(g, field.mul(w[2], w[2])),
        ];
        terms.iter().fold(0, |acc, &t| field.add(acc, t))
    }

    pub fn contains(&self, field: &PrimeField, x: &ProjPoint) -> bool {
        self.plane
            .coords_of(field, x)
            .is_some_and(|w| self.eval_plane(field, &w) == 0)
    }

    /// Plane coordinates of the conic point with parameter `(l:m)`.
    pub fn plane_point(&self, field: &PrimeField, l: u64, m: u64) -> [u64; 3] {
        let mono = [field.mul(l, l), field.mul(l, m), field.mul(m, m)];
        std::array::from_fn(|i| field.dot(&self.param[i], &mono))
    }

    pub fn point_at(&self, field: &PrimeField, l: u64, m: u64) -> ProjPoint {
        self.plane
            .embed(field, self.plane_point(field, l, m))
            .expect("nonzero conic point")
    }
}

/// Where a sampled point must lie.
#[derive(Debug, Clone, Copy)]
pub enum PointConstraint<'a> {
    Free,
    OnPlane(&'a PlaneP3),
    OnLine(&'a LineP3),
    OnQuadric(&'a QuadricP3),
    OnConic(&'a ConicInPlane),
}

/// Where a sampled line must lie.
#[derive(Debug, Clone, Copy)]
pub enum LineConstraint<'a> {
    Free,
    InPlane(&'a PlaneP3),
    Through(&'a ProjPoint),
    InPlaneThrough(&'a PlaneP3, &'a ProjPoint),
    OnQuadricRuling {
        quadric: &'a QuadricP3,
        ruling: Ruling,
        through: Option<&'a ProjPoint>,
    },
}

fn satisfies(field: &PrimeField, x: &ProjPoint, c: PointConstraint<'_>) -> bool {
    match c {
        PointConstraint::Free => true,
        PointConstraint::OnPlane(h) => h.contains(field, x),
        PointConstraint::OnLine(l) => l.contains(field, x),
        PointConstraint::OnQuadric(q) => q.contains(field, x),
        PointConstraint::OnConic(c) => c.contains(field, x),
    }
}

fn draw_point<R: Rng + ?Sized>(
    field: &PrimeField,
    rng: &mut R,
    c: PointConstraint<'_>,
) -> Option<ProjPoint> {
    match c {
        PointConstraint::Free => ProjPoint::new(field, random_vector(field, rng)).ok(),
        PointConstraint::OnPlane(h) => h.embed(field, random_vector(field, rng)).ok(),
        PointConstraint::OnLine(l) => {
            let [lambda, mu] = random_vector(field, rng);
            (lambda != 0 || mu != 0).then(|| l.point_hom(field, lambda, mu))
        }
        PointConstraint::OnQuadric(q) => {
            let sigma: [u64; 2] = random_vector(field, rng);
            let tau: [u64; 2] = random_vector(field, rng);
            (sigma != [0, 0] && tau != [0, 0]).then(|| q.point(field, sigma, tau))
        }
        PointConstraint::OnConic(c) => {
            let [l, m] = random_vector(field, rng);
            (l != 0 || m != 0).then(|| c.point_at(field, l, m))
        }
    }
}

/// Uniformly samples a point satisfying `constraint` and distinct from
/// every point of `avoid`.
pub fn sample_point<R: Rng + ?Sized>(
    field: &PrimeField,
    rng: &mut R,
    constraint: PointConstraint<'_>,
    avoid: &[ProjPoint],
) -> Result<ProjPoint, GeometryError> {
    for _ in 0..RETRY_BUDGET {
        let Some(x) = draw_point(field, rng, constraint) else {
            continue;
        };
        if !avoid.contains(&x) && satisfies(field, &x, constraint) {
            return Ok(x);
        }
    }
    Err(GeometryError::ResamplingExhausted(RETRY_BUDGET))
}

fn line_satisfies(field: &PrimeField, l: &LineP3, c: LineConstraint<'_>) -> bool {
    match c {
        LineConstraint::Free => true,
        LineConstraint::InPlane(h) => h.contains_line(field, l),
        LineConstraint::Through(p) => l.contains(field, p),
        LineConstraint::InPlaneThrough(h, p) => h.contains_line(field, l) && l.contains(field, p),
        LineConstraint::OnQuadricRuling {
            quadric,
            ruling,
            through,
        } => {
            quadric.ruling_of(field, l).is_some_and(|(r, _)| r == ruling)
                && through.is_none_or(|p| l.contains(field, p))
        }
    }
}

/// Samples a line satisfying `constraint`.
pub fn sample_line<R: Rng + ?Sized>(
    field: &PrimeField,
    rng: &mut R,
    constraint: LineConstraint<'_>,
) -> Result<LineP3, GeometryError> {
    if let LineConstraint::OnQuadricRuling {
        quadric,
        through: Some(p),
        ..
    } = constraint
    {
        if !quadric.contains(field, p) {
            return Err(GeometryError::ConstraintViolated("through-point not on quadric"));
        }
    }
    if let LineConstraint::InPlaneThrough(h, p) = constraint {
        if !h.contains(field, p) {
            return Err(GeometryError::ConstraintViolated("through-point not on plane"));
        }
    }
    for _ in 0..RETRY_BUDGET {
        let candidate = match constraint {
            LineConstraint::Free => {
                let a = sample_point(field, rng, PointConstraint::Free, &[])?;
                let b = sample_point(field, rng, PointConstraint::Free, &[a])?;
                LineP3::new(field, a, b)
            }
            LineConstraint::InPlane(h) => {
                let a = sample_point(field, rng, PointConstraint::OnPlane(h), &[])?;
                let b = sample_point(field, rng, PointConstraint::OnPlane(h), &[a])?;
                LineP3::new(field, a, b)
            }
            LineConstraint::Through(p) => {
                let b = sample_point(field, rng, PointConstraint::Free, &[*p])?;
                LineP3::new(field, *p, b)
            }
            LineConstraint::InPlaneThrough(h, p) => {
                let b = sample_point(field, rng, PointConstraint::OnPlane(h), &[*p])?;
                LineP3::new(field, *p, b)
            }
            LineConstraint::OnQuadricRuling {
                quadric,
                ruling,
                through,
            } => {
                let fixed = match through {
                    Some(p) => {
                        let (sigma, tau) = quadric.params_of(field, p).expect("checked above");
                        match ruling {
                            Ruling::OneZero => sigma,
                            Ruling::ZeroOne => tau,
                        }
                    }
                    None => {
                        let v: [u64; 2] = random_vector(field, rng);
                        if v == [0, 0] {
                            continue;
                        }
                        normalize2(field, v)
                    }
                };
                Ok(quadric.ruling_line(field, ruling, fixed))
            }
        };
        if let Ok(l) = candidate {
            if line_satisfies(field, &l, constraint) {
                return Ok(l);
            }
        }
    }
    Err(GeometryError::ResamplingExhausted(RETRY_BUDGET))
}

/// Relative position of two lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineLine {
    Skew,
    Meet(ProjPoint),
    Equal,
}

pub fn line_line(field: &PrimeField, l: &LineP3, m: &LineP3) -> LineLine {
    match rank_of(field, &[&l.a.0, &l.b.0, &m.a.0, &m.b.0]) {
        4 => LineLine::Skew,
        2 => LineLine::Equal,
        _ => {
            let mut cols = FMatrix::zeros(4, 4);
            for i in 0..4 {
                cols.set(i, 0, l.a.0[i]);
                cols.set(i, 1, l.b.0[i]);
                cols.set(i, 2, m.a.0[i]);
                cols.set(i, 3, m.b.0[i]);
            }
            let v = &cols.nullspace(field)[0];
            LineLine::Meet(l.point_hom(field, v[0], v[1]))
        }
    }
}

/// Intersection of a line with a plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinePlane {
    Contained,
    Point(ProjPoint),
}

pub fn line_plane(field: &PrimeField, l: &LineP3, h: &PlaneP3) -> LinePlane {
    let (ea, eb) = (h.eval(field, &l.a), h.eval(field, &l.b));
    if ea == 0 && eb == 0 {
        LinePlane::Contained
    } else {
        LinePlane::Point(l.point_hom(field, eb, field.neg(ea)))
    }
}

/// Intersection of a line with a smooth quadric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineQuadric {
    Contained,
    Tangent(ProjPoint),
    Pair(ProjPoint, ProjPoint),
    NoRationalPoint,
}

pub fn line_quadric(field: &PrimeField, l: &LineP3, q: &QuadricP3) -> LineQuadric {
    // q(lambda a + mu b) = A lambda^2 + B lambda mu + C mu^2
    let a = q.form(field, &l.a.0);
    let b = q.bilinear(field, &l.a.0, &l.b.0);
    let c = q.form(field, &l.b.0);
    if a == 0 && b == 0 && c == 0 {
        return LineQuadric::Contained;
    }
    let disc = field.sub(field.mul(b, b), field.mul(4, field.mul(a, c)));
    if a == 0 {
        // roots (1:0) and (-C:B)
        if b == 0 {
            return LineQuadric::Tangent(l.a);
        }
        return LineQuadric::Pair(l.a, l.point_hom(field, field.neg(c), b));
    }
    let Some(r) = field.sqrt(disc) else {
        return LineQuadric::NoRationalPoint;
    };
    let two_a = field.add(a, a);
    let root = |sign_r: u64| l.point_hom(field, field.add(field.neg(b), sign_r), two_a);
    if disc == 0 {
        LineQuadric::Tangent(root(0))
    } else {
        LineQuadric::Pair(root(r), root(field.neg(r)))
    }
}

/// A geometric object accepted by [`incidence`].
#[derive(Debug, Clone, Copy)]
pub enum Geometry<'a> {
    Point(&'a ProjPoint),
    Line(&'a LineP3),
    Plane(&'a PlaneP3),
    Quadric(&'a QuadricP3),
    Conic(&'a ConicInPlane),
}

/// Outcome of an incidence query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// Point lies on the object (or two points coincide).
    Incident,
    NotIncident,
    Lines(LineLine),
    LineMeetsPlane(LinePlane),
    LineMeetsQuadric(LineQuadric),
    /// Pair not covered by the predicate table.
    Unsupported,
}

pub fn incidence(field: &PrimeField, a: Geometry<'_>, b: Geometry<'_>) -> Relation {
    use Geometry as G;
    let member = |yes: bool| if yes { Relation::Incident } else { Relation::NotIncident };
    match (a, b) {
        (G::Point(x), G::Point(y)) => member(x == y),
        (G::Point(x), G::Line(l)) | (G::Line(l), G::Point(x)) => member(l.contains(field, x)),
        (G::Point(x), G::Plane(h)) | (G::Plane(h), G::Point(x)) => member(h.contains(field, x)),
        (G::Point(x), G::Quadric(q)) | (G::Quadric(q), G::Point(x)) => {
            member(q.contains(field, x))
        }
        (G::Point(x), G::Conic(c)) | (G::Conic(c), G::Point(x)) => member(c.contains(field, x)),
        (G::Line(l), G::Line(m)) => Relation::Lines(line_line(field, l, m)),
        (G::Line(l), G::Plane(h)) | (G::Plane(h), G::Line(l)) => {
            Relation::LineMeetsPlane(line_plane(field, l, h))
        }
        (G::Line(l), G::Quadric(q)) | (G::Quadric(q), G::Line(l)) => {
            Relation::LineMeetsQuadric(line_quadric(field, l, q))
        }
        _ => Relation::Unsupported,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn field() -> PrimeField {
        PrimeField::default()
    }

    fn pt(c: [u64; 4]) -> ProjPoint {
        ProjPoint::new(&field(), c).unwrap()
    }

    #[test]
    fn points_are_normalized() {
        let f = field();
        let p = ProjPoint::new(&f, [0, 5, 10, 0]).unwrap();
        assert_eq!(p.coords(), &[0, 1, 2, 0]);
        assert_eq!(ProjPoint::new(&f, [0; 4]), Err(GeometryError::ZeroVector));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = sample_point(&f, &mut rng, PointConstraint::Free, &[]).unwrap();
        assert_eq!(x.coords().iter().find(|&&c| c != 0), Some(&1));
    }

    #[test]
    fn sample_on_plane_avoids_point() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = PlaneP3::from_coeffs(&f, [3, 1, 4, 1]).unwrap();
        let p = sample_point(&f, &mut rng, PointConstraint::OnPlane(&h), &[]).unwrap();
        let x = sample_point(&f, &mut rng, PointConstraint::OnPlane(&h), &[p]).unwrap();
        assert!(h.contains(&f, &x));
        assert_ne!(x, p);
    }

    #[test]
    fn sample_on_coordinate_line() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = LineP3::new(&f, ProjPoint::basis(0), ProjPoint::basis(1)).unwrap();
        for _ in 0..20 {
            let x = sample_point(&f, &mut rng, PointConstraint::OnLine(&l), &[]).unwrap();
            let c = x.coords();
            assert!(c[2] == 0 && c[3] == 0);
            assert!(c[0] == 1 || *c == [0, 1, 0, 0]);
            assert_eq!(rank_of(&f, &[&l.a.0, &l.b.0, &x.0]), 2);
        }
    }

    #[test]
    fn exhausted_budget_on_tiny_field() {
        let f = PrimeField::new(2).unwrap();
        let l = LineP3::new(&f, ProjPoint::basis(0), ProjPoint::basis(1)).unwrap();
        let avoid = [
            ProjPoint::new(&f, [1, 0, 0, 0]).unwrap(),
            ProjPoint::new(&f, [0, 1, 0, 0]).unwrap(),
            ProjPoint::new(&f, [1, 1, 0, 0]).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_point(&f, &mut rng, PointConstraint::OnLine(&l), &avoid),
            Err(GeometryError::ResamplingExhausted(RETRY_BUDGET))
        );
    }

    #[test]
    fn line_in_plane_and_determinism() {
        let f = field();
        let h = PlaneP3::from_coeffs(&f, [0, 0, 1, 7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l = sample_line(&f, &mut rng, LineConstraint::InPlane(&h)).unwrap();
        assert_eq!(incidence(&f, Geometry::Line(&l), Geometry::Plane(&h)),
            Relation::LineMeetsPlane(LinePlane::Contained));
        let p = pt([1, 2, 3, 4]);
        let l1 = sample_line(&f, &mut ChaCha8Rng::seed_from_u64(9), LineConstraint::Through(&p)).unwrap();
        let l2 = sample_line(&f, &mut ChaCha8Rng::seed_from_u64(9), LineConstraint::Through(&p)).unwrap();
        assert_eq!(l1, l2);
        assert!(l1.contains(&f, &p));
    }

    #[test]
    fn coordinate_lines_are_skew() {
        let f = field();
        let l = LineP3::new(&f, ProjPoint::basis(0), ProjPoint::basis(1)).unwrap();
        let m = LineP3::new(&f, ProjPoint::basis(2), ProjPoint::basis(3)).unwrap();
        assert_eq!(line_line(&f, &l, &m), LineLine::Skew);
        assert_eq!(line_line(&f, &l, &l), LineLine::Equal);
        let n = LineP3::new(&f, ProjPoint::basis(1), ProjPoint::basis(2)).unwrap();
        assert_eq!(line_line(&f, &l, &n), LineLine::Meet(ProjPoint::basis(1)));
    }

    #[test]
    fn plane_lines_meet_in_one_point() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = PlaneP3::from_coeffs(&f, [1, 2, 3, 4]).unwrap();
        let p = sample_point(&f, &mut rng, PointConstraint::OnPlane(&h), &[]).unwrap();
        for _ in 0..20 {
            let l = sample_line(&f, &mut rng, LineConstraint::InPlaneThrough(&h, &p)).unwrap();
            let m = sample_line(&f, &mut rng, LineConstraint::InPlane(&h)).unwrap();
            match line_line(&f, &l, &m) {
                LineLine::Meet(x) => assert!(l.contains(&f, &x) && m.contains(&f, &x) && h.contains(&f, &x)),
                other => panic!("coplanar lines gave {other:?}"),
            }
        }
    }

    #[test]
    fn ruling_lines_on_quadric() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = QuadricP3::random(&f, &mut rng).unwrap();
        for _ in 0..50 {
            let x = sample_point(&f, &mut rng, PointConstraint::OnQuadric(&q), &[]).unwrap();
            let l = sample_line(&f, &mut rng, LineConstraint::OnQuadricRuling {
                quadric: &q, ruling: Ruling::ZeroOne, through: Some(&x) }).unwrap();
            assert!(l.contains(&f, &x));
            for s in [0, 1, 12345] {
                // evaluate the recovered quadratic form at points of the line
                assert_eq!(q.form(&f, l.point_at(&f, s).coords()), 0);
            }
            let l2 = sample_line(&f, &mut rng, LineConstraint::OnQuadricRuling {
                quadric: &q, ruling: Ruling::ZeroOne, through: None }).unwrap();
            let m = sample_line(&f, &mut rng, LineConstraint::OnQuadricRuling {
                quadric: &q, ruling: Ruling::OneZero, through: None }).unwrap();
            assert_eq!(line_line(&f, &l, &l2), LineLine::Skew);
            assert!(matches!(line_line(&f, &l, &m), LineLine::Meet(_)));
        }
    }

    #[test]
    fn generic_line_meets_quadric_in_two_points_or_none() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = QuadricP3::random(&f, &mut rng).unwrap();
        let (mut pairs, mut none) = (0, 0);
        for _ in 0..400 {
            let l = sample_line(&f, &mut rng, LineConstraint::Free).unwrap();
            match line_quadric(&f, &l, &q) {
                LineQuadric::Pair(x, y) => {
                    assert_ne!(x, y);
                    assert!(q.contains(&f, &x) && q.contains(&f, &y));
                    assert!(l.contains(&f, &x) && l.contains(&f, &y));
                    pairs += 1;
                }
                LineQuadric::NoRationalPoint => none += 1,
                other => panic!("unexpected {other:?}"),
            }
        }
        // about half of the discriminants are squares
        assert!((120..280).contains(&pairs), "pairs = {pairs}, none = {none}");
    }

    #[test]
    fn tangent_and_contained_lines() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = QuadricP3::random(&f, &mut rng).unwrap();
        let x = sample_point(&f, &mut rng, PointConstraint::OnQuadric(&q), &[]).unwrap();
        let ruling = q.ruling_line(&f, Ruling::OneZero, [1, 5]);
        assert_eq!(line_quadric(&f, &ruling, &q), LineQuadric::Contained);
        // a line in the tangent plane through x, not a ruling line
        let tp = PlaneP3::from_coeffs(&f, q.tangent_plane(&f, &x)).unwrap();
        let l = loop {
            let l = sample_line(&f, &mut rng, LineConstraint::InPlaneThrough(&tp, &x)).unwrap();
            if q.ruling_of(&f, &l).is_none() {
                break l;
            }
        };
        assert_eq!(line_quadric(&f, &l, &q), LineQuadric::Tangent(x));
    }

    #[test]
    fn params_roundtrip() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let q = QuadricP3::random(&f, &mut rng).unwrap();
        for _ in 0..30 {
            let sigma = normalize2(&f, random_vector(&f, &mut rng));
            let tau = normalize2(&f, random_vector(&f, &mut rng));
            let x = q.point(&f, sigma, tau);
            assert_eq!(q.params_of(&f, &x), Some((sigma, tau)));
        }
    }

    #[test]
    fn conic_points_and_plane_coordinates() {
        let f = field();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = PlaneP3::from_coeffs(&f, [2, 0, 1, 9]).unwrap();
        let c = ConicInPlane::random(&f, h.clone(), &mut rng).unwrap();
        for _ in 0..20 {
            let x = sample_point(&f, &mut rng, PointConstraint::OnConic(&c), &[]).unwrap();
            assert!(h.contains(&f, &x));
            let w = h.coords_of(&f, &x).unwrap();
            assert_eq!(h.embed(&f, w).unwrap(), x);
            assert_eq!(c.eval_plane(&f, &w), 0);
        }
        let off = sample_point(&f, &mut rng, PointConstraint::OnPlane(&h), &[]).unwrap();
        assert!(!c.contains(&f, &off));
    }
}
