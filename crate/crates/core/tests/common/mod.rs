//! Random valid `(X, F, x)` triples for the residual/trace checks.

#![allow(dead_code)]

use postlab::exactlin::PrimeField;
use postlab::schemecalc::{residual, SchemeComponent, Surface, UnionScheme};
use postlab::space::{
    line_line, line_plane, line_quadric, sample_line, sample_point, LineConstraint, LineLine, LineP3, LinePlane,
    LineQuadric, PlaneP3, PointConstraint, ProjPoint, QuadricP3, Ruling,
};
use rand::Rng;

pub struct SplitInstance {
    pub x: UnionScheme,
    pub surface: Surface,
    pub twist: u64,
}

fn on_surface(field: &PrimeField, rng: &mut impl Rng, s: &Surface, avoid: &[ProjPoint]) -> Option<ProjPoint> {
    match s {
        Surface::Plane(h) => sample_point(field, rng, PointConstraint::OnPlane(h), avoid).ok(),
        Surface::Quadric(q) => sample_point(field, rng, PointConstraint::OnQuadric(q), avoid).ok(),
    }
}

fn off_surface(field: &PrimeField, rng: &mut impl Rng, s: &Surface, avoid: &[ProjPoint]) -> Option<ProjPoint> {
    let p = sample_point(field, rng, PointConstraint::Free, avoid).ok()?;
    (!s.contains(field, &p)).then_some(p)
}

fn line_on_surface(field: &PrimeField, rng: &mut impl Rng, s: &Surface) -> Option<LineP3> {
    match s {
        Surface::Plane(h) => sample_line(field, rng, LineConstraint::InPlane(h)).ok(),
        Surface::Quadric(q) => {
            let fixed = [1, rng.gen_range(0..field.modulus())];
            Some(q.ruling_line(field, Ruling::OneZero, fixed))
        }
    }
}

fn transverse_line(field: &PrimeField, rng: &mut impl Rng, s: &Surface) -> Option<LineP3> {
    match s {
        Surface::Plane(h) => {
            let l = sample_line(field, rng, LineConstraint::Free).ok()?;
            matches!(line_plane(field, &l, h), LinePlane::Point(_)).then_some(l)
        }
        Surface::Quadric(q) => {
            let a = sample_point(field, rng, PointConstraint::OnQuadric(q), &[]).ok()?;
            let b = sample_point(field, rng, PointConstraint::OnQuadric(q), &[a]).ok()?;
            let l = LineP3::new(field, a, b).ok()?;
            matches!(line_quadric(field, &l, q), LineQuadric::Pair(..)).then_some(l)
        }
    }
}

fn meet_point(field: &PrimeField, l: &LineP3, s: &Surface) -> Option<ProjPoint> {
    match s {
        Surface::Plane(h) => match line_plane(field, l, h) {
            LinePlane::Point(p) => Some(p),
            LinePlane::Contained => None,
        },
        Surface::Quadric(q) => match line_quadric(field, l, q) {
            LineQuadric::Pair(p, _) => Some(p),
            _ => None,
        },
    }
}

/// A point of the tangent plane at `s`, other than `s`.
fn tangent_direction(field: &PrimeField, rng: &mut impl Rng, surface: &Surface, s: &ProjPoint) -> Option<ProjPoint> {
    let t = PlaneP3::from_coeffs(field, surface.tangent_form(field, s)).ok()?;
    sample_point(field, rng, PointConstraint::OnPlane(&t), &[*s]).ok()
}

fn draw(field: &PrimeField, rng: &mut impl Rng) -> Option<SplitInstance> {
    let surface = if rng.gen_bool(0.5) {
        Surface::Plane(PlaneP3::from_coeffs(field, std::array::from_fn(|_| rng.gen_range(0..field.modulus()))).ok()?)
    } else {
        Surface::Quadric(QuadricP3::random(field, rng).ok()?)
    };
    let plane = matches!(surface, Surface::Plane(_));
    let mut comps = Vec::new();
    let mut points: Vec<ProjPoint> = Vec::new();

    let m: u32 = rng.gen_range(1..=3);
    let center = if plane && rng.gen_bool(0.5) {
        on_surface(field, rng, &surface, &[])?
    } else {
        off_surface(field, rng, &surface, &[])?
    };
    comps.push(SchemeComponent::FatPoint { center, m });
    points.push(center);

    let mut lines: Vec<LineP3> = Vec::new();
    let n_lines = rng.gen_range(1..=3);
    let mut contained = 0;
    for _ in 0..n_lines {
        let want_in = rng.gen_bool(0.4) && (!plane || contained == 0);
        let l = if want_in { line_on_surface(field, rng, &surface)? } else { transverse_line(field, rng, &surface)? };
        if l.contains(field, &center) || lines.iter().any(|o| line_line(field, &l, o) != LineLine::Skew) {
            return None;
        }
        contained += want_in as usize;
        lines.push(l);
    }
    comps.extend(lines.iter().copied().map(SchemeComponent::Line));

    for _ in 0..rng.gen_range(0..=2) {
        let p = if rng.gen_bool(0.5) {
            on_surface(field, rng, &surface, &points)?
        } else {
            off_surface(field, rng, &surface, &points)?
        };
        comps.push(SchemeComponent::SimplePoint(p));
        points.push(p);
    }

    for _ in 0..rng.gen_range(1..=3) {
        let (support, direction) = match rng.gen_range(0..5) {
            // free, off the surface
            0 => {
                let s = off_surface(field, rng, &surface, &points)?;
                (s, sample_point(field, rng, PointConstraint::Free, &[s]).ok()?)
            }
            // free, on the surface, tangent to it
            1 => {
                let s = on_surface(field, rng, &surface, &points)?;
                (s, tangent_direction(field, rng, &surface, &s)?)
            }
            // free, on the surface, transverse
            2 => {
                let s = on_surface(field, rng, &surface, &points)?;
                (s, sample_point(field, rng, PointConstraint::Free, &[s]).ok()?)
            }
            // decorated, at the point where a line meets the surface
            3 => {
                let l = lines[rng.gen_range(0..lines.len())];
                let s = meet_point(field, &l, &surface).or_else(|| Some(l.point_at(field, rng.gen_range(0..1000))))?;
                let d = if rng.gen_bool(0.5) && surface.contains(field, &s) {
                    tangent_direction(field, rng, &surface, &s)?
                } else {
                    sample_point(field, rng, PointConstraint::Free, &[s]).ok()?
                };
                (s, d)
            }
            // decorated, at a general point of a line
            _ => {
                let l = lines[rng.gen_range(0..lines.len())];
                let s = l.point_at(field, rng.gen_range(0..field.modulus()));
                (s, sample_point(field, rng, PointConstraint::Free, &[s]).ok()?)
            }
        };
        if points.contains(&support) {
            return None;
        }
        points.push(support);
        comps.push(SchemeComponent::TangentVector { support, direction });
    }

    let x = UnionScheme::new(field, comps).ok()?;
    let f = surface.degree();
    let (res, _) = residual(field, &x, &surface).ok()?;
    let floor = f + (res.max_multiplicity() as u64).saturating_sub(1);
    let floor = floor.max((m as u64).saturating_sub(1)).max(f);
    let twist = rng.gen_range(floor..=floor + 3);
    Some(SplitInstance { x, surface, twist })
}

/// A random valid instance; resamples until the union and its residual exist.
pub fn random_split_instance(field: &PrimeField, rng: &mut impl Rng) -> SplitInstance {
    loop {
        if let Some(i) = draw(field, rng) {
            return i;
        }
    }
}

/// Whether the instance has at least one component of each kind.
pub fn kinds_present(x: &UnionScheme) -> [bool; 4] {
    let mut seen = [false; 4];
    for c in x.components() {
        let i = match c {
            SchemeComponent::FatPoint { .. } => 0,
            SchemeComponent::Line(_) => 1,
            SchemeComponent::SimplePoint(_) => 2,
            SchemeComponent::TangentVector { .. } => 3,
        };
        seen[i] = true;
    }
    seen
}
