//! Certification engine.
//!
//! Full rank at one instance over `F_p` certifies maximal rank of the
//! general union (rank can only drop under specialization). A deficit at a
//! random instance is evidence, never a proof, and certificates say so.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conditions::{instance_cohomology_p3, Cohomology, ConditionError};
use crate::exactlin::{prev_prime, FieldError, PrimeField, DEFAULT_PRIME};
use crate::postnum::{self, binom, critical_value, forms_p3, is_exceptional};
use crate::schemecalc::{castelnuovo_check, CastelnuovoReport, SchemeComponent, SchemeError, Surface, UnionScheme};
use crate::space::{
    line_line, line_plane, line_quadric, sample_line, sample_point, ConicInPlane, GeometryError, LineConstraint,
    LineLine, LineP3, LinePlane, LineQuadric, PlaneP3, PointConstraint, ProjPoint, QuadricP3, Ruling, RETRY_BUDGET,
};

pub const DEFAULT_RETRIES: u32 = 3;
/// Fresh primes tried after the seed retries at the base prime.
pub const FRESH_PRIMES: u32 = 2;
pub const DEFAULT_PROBE_SAMPLES: u32 = 5;
pub const PROBE_CAVEAT: &str = "upper bound for generic values";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("witness {kind} failed check `{check}` after {attempts} attempts")]
    WitnessFailed {
        kind: WitnessKind,
        check: String,
        attempts: u32,
        report: Box<WitnessConfig>,
    },
}

fn precondition(msg: impl Into<String>) -> CertifyError {
    CertifyError::Precondition(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "witness-B")]
    WitnessB,
    #[serde(rename = "witness-R")]
    WitnessR,
    #[serde(rename = "witness-H")]
    WitnessH,
}

impl Strategy {
    fn code(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Random => "random",
            Strategy::WitnessB => "witness-B",
            Strategy::WitnessR => "witness-R",
            Strategy::WitnessH => "witness-H",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Strategy::Random),
            "witness-b" | "b" => Ok(Strategy::WitnessB),
            "witness-r" | "r" => Ok(Strategy::WitnessR),
            "witness-h" | "h" => Ok(Strategy::WitnessH),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Status {
    MaximalRankCertified,
    DeficitObserved { h0: u64, h1: u64 },
    Unconfirmed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub m: u64,
    pub d: u64,
    pub t: u64,
    pub prime: u64,
    pub seed: u64,
    pub strategy: Strategy,
    #[serde(rename = "N")]
    pub n_forms: u64,
    pub degree: u64,
    pub rank: u64,
    pub h0: u64,
    pub h1: u64,
    pub status: Status,
    pub exceptional: bool,
    pub attempts: u32,
    pub elapsed_ms: u64,
    /// Set when the certificate was derived rather than computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<u64>,
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        self.status == Status::MaximalRankCertified
    }

    /// The certificate with timing zeroed, for reproducibility comparisons.
    pub fn canonical(&self) -> Self {
        Self {
            elapsed_ms: 0,
            ..self.clone()
        }
    }

    /// Whether `(h0, h1)` agrees with the expected values of a union that
    /// imposes independent conditions.
    pub fn matches_expectation(&self) -> bool {
        (self.h0, self.h1) == postnum::expected_cohomology(self.m, self.d, self.t)
    }

    /// Certified with the expected values, or a deficit on an exceptional cell.
    pub fn agrees_with_classification(&self) -> bool {
        match self.status {
            Status::MaximalRankCertified => !self.exceptional && self.matches_expectation(),
            Status::DeficitObserved { h0, h1 } => self.exceptional && h0 >= 1 && h1 >= 1,
            Status::Unconfirmed => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub prime: u64,
    pub seed: u64,
    pub retries: u32,
    pub strategy: Strategy,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            prime: DEFAULT_PRIME,
            seed: 0,
            retries: DEFAULT_RETRIES,
            strategy: Strategy::Random,
        }
    }
}

fn splitmix(z: u64) -> u64 {
    let z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed from a master seed and a key.
pub fn mix_seed(master: u64, key: &[u64]) -> u64 {
    key.iter().fold(splitmix(master), |acc, &k| splitmix(acc ^ splitmix(k)))
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Primes for successive attempts: the base prime per seed retry, then fresh ones.
fn attempt_schedule(prime: u64, retries: u32) -> Vec<u64> {
    let mut primes = vec![prime; retries as usize + 1];
    let mut p = prime;
    for _ in 0..FRESH_PRIMES {
        match prev_prime(p - 1) {
            Some(q) if q > 2 => {
                primes.push(q);
                p = q;
            }
            _ => break,
        }
    }
    primes
}

fn retry<T>(mut f: impl FnMut() -> Option<T>) -> Result<T, GeometryError> {
    (0..RETRY_BUDGET)
        .find_map(|_| f())
        .ok_or(GeometryError::ResamplingExhausted(RETRY_BUDGET))
}

fn skew_to_all(field: &PrimeField, l: &LineP3, others: &[LineP3]) -> bool {
    others.iter().all(|o| line_line(field, l, o) == LineLine::Skew)
}

/// A random point `P` and `d` random pairwise-skew lines avoiding it.
pub fn random_configuration<R: Rng + ?Sized>(
    field: &PrimeField,
    rng: &mut R,
    d: u64,
) -> Result<(ProjPoint, Vec<LineP3>), CertifyError> {
    let p = sample_point(field, rng, PointConstraint::Free, &[])?;
    let mut lines: Vec<LineP3> = Vec::with_capacity(d as usize);
    for _ in 0..d {
        let l = retry(|| {
            let l = sample_line(field, rng, LineConstraint::Free).ok()?;
            (!l.contains(field, &p) && skew_to_all(field, &l, &lines)).then_some(l)
        })?;
        lines.push(l);
    }
    Ok((p, lines))
}

fn fat_point_with_lines(
    field: &PrimeField,
    p: ProjPoint,
    m: u64,
    lines: &[LineP3],
) -> Result<UnionScheme, CertifyError> {
    let mut comps = Vec::with_capacity(lines.len() + 1);
    if m > 0 {
        comps.push(SchemeComponent::FatPoint { center: p, m: m as u32 });
    }
    comps.extend(lines.iter().copied().map(SchemeComponent::Line));
    Ok(UnionScheme::new(field, comps)?)
}

/// The instance an attempt works on: `mP` plus `d` lines chosen per strategy.
fn attempt_instance(
    field: &PrimeField,
    m: u64,
    d: u64,
    t: u64,
    strategy: Strategy,
    seed: u64,
) -> Result<UnionScheme, CertifyError> {
    let mut rng = rng_for(seed);
    let (p, lines) = match strategy {
        Strategy::Random => random_configuration(field, &mut rng, d)?,
        Strategy::WitnessB | Strategy::WitnessR => {
            if t != m + 2 {
                return Err(precondition(format!("{strategy} certifies only t = m+2, got t = {t}")));
            }
            let g = if strategy == Strategy::WitnessB {
                b_geometry(field, &mut rng, m)?
            } else {
                r_geometry(field, &mut rng, m)?
            };
            (g.point, g.lines)
        }
        Strategy::WitnessH => h_geometry(field, &mut rng, m, t).map(|g| (g.point, g.lines))?,
    };
    if (lines.len() as u64) < d {
        return Err(precondition(format!(
            "{strategy} provides {} lines, {d} requested",
            lines.len()
        )));
    }
    fat_point_with_lines(field, p, m, &lines[..d as usize])
}

fn attempt_seed(seed: u64, attempt: u32) -> u64 {
    mix_seed(seed, &[attempt as u64])
}

/// Rebuilds the exact instance a certificate was computed on.
pub fn certificate_instance(cert: &Certificate) -> Result<UnionScheme, CertifyError> {
    let field = PrimeField::new(cert.prime)?;
    let attempt = cert.attempts.saturating_sub(1);
    attempt_instance(&field, cert.m, cert.d, cert.t, cert.strategy, attempt_seed(cert.seed, attempt))
}

/// Computes the instance rank of `mP ∪ d lines` at degree `t`, retrying with
/// fresh seeds and then fresh primes until full rank is seen.
pub fn certify_maximal_rank(m: u64, d: u64, t: u64, opts: &CertifyOptions) -> Result<Certificate, CertifyError> {
    let start = Instant::now();
    if t + 1 < m {
        return Err(precondition(format!("t = {t} is below m - 1 = {}", m as i64 - 1)));
    }
    let base = PrimeField::new(opts.prime)?;
    base.require_above(t + 1)?;
    let n_forms = forms_p3(t);
    let degree = postnum::fatpoint_degree(m) + d * (t + 1);
    let target = n_forms.min(degree);

    let mut best: Option<(u32, u64, Cohomology)> = None;
    for (attempt, &prime) in attempt_schedule(opts.prime, opts.retries).iter().enumerate() {
        let field = PrimeField::new(prime)?;
        if field.require_above(t + 1).is_err() {
            continue;
        }
        let x = attempt_instance(&field, m, d, t, opts.strategy, attempt_seed(opts.seed, attempt as u32))?;
        debug_assert_eq!(x.degree(t)?, degree);
        let c = instance_cohomology_p3(&field, &x, t)?;
        if best.as_ref().is_none_or(|(_, _, b)| c.rank > b.rank) {
            best = Some((attempt as u32, prime, c));
        }
        if c.rank == target {
            break;
        }
    }
    let (attempt, prime, c) = best.expect("at least the base prime is tried");
    let exceptional = is_exceptional(m, d, t);
    let status = if c.rank == target {
        Status::MaximalRankCertified
    } else if exceptional {
        Status::DeficitObserved { h0: c.h0, h1: c.h1 }
    } else {
        Status::Unconfirmed
    };
    Ok(Certificate {
        m,
        d,
        t,
        prime,
        seed: opts.seed,
        strategy: opts.strategy,
        n_forms,
        degree,
        rank: c.rank,
        h0: c.h0,
        h1: c.h1,
        status,
        exceptional,
        attempts: attempt + 1,
        elapsed_ms: start.elapsed().as_millis() as u64,
        derived_from: None,
    })
}

/// From a certificate with `h^1 = 0`, the certificate for the sub-union of
/// the first `d_sub` lines of the same instance: its `h^1` vanishes too.
pub fn derive_subunion(cert: &Certificate, d_sub: u64) -> Option<Certificate> {
    if !cert.is_certified() || cert.h1 != 0 || d_sub > cert.d {
        return None;
    }
    let degree = postnum::fatpoint_degree(cert.m) + d_sub * (cert.t + 1);
    Some(Certificate {
        d: d_sub,
        degree,
        rank: degree,
        h0: cert.n_forms - degree,
        h1: 0,
        status: Status::MaximalRankCertified,
        exceptional: is_exceptional(cert.m, d_sub, cert.t),
        elapsed_ms: 0,
        derived_from: Some(cert.d),
        ..cert.clone()
    })
}

/// Rank check of a derived certificate on the actual sub-union.
pub fn spot_check_subunion(cert: &Certificate, d_sub: u64) -> Result<Cohomology, CertifyError> {
    let field = PrimeField::new(cert.prime)?;
    let x = certificate_instance(cert)?;
    let comps: Vec<SchemeComponent> = x
        .components()
        .iter()
        .filter(|c| !matches!(c, SchemeComponent::Line(_)))
        .cloned()
        .chain(x.lines().take(d_sub as usize).copied().map(SchemeComponent::Line))
        .collect();
    let sub = UnionScheme::new(&field, comps)?;
    Ok(instance_cohomology_p3(&field, &sub, cert.t)?)
}

/// Observed `(h0, h1)` at `t = m` for an exceptional pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub m: u64,
    pub d: u64,
    pub t: u64,
    pub prime: u64,
    pub seed: u64,
    /// `(h0, h1)` per sampled instance.
    pub observed: Vec<(u64, u64)>,
    pub h0: u64,
    pub h1: u64,
    pub caveat: String,
}

/// Samples instances at `t = m` and returns the componentwise minimum: every
/// special instance has `h^i` at least the generic value, so the minimum is
/// the sharpest available bound.
pub fn exceptional_probe(m: u64, d: u64, samples: u32, opts: &CertifyOptions) -> Result<ProbeResult, CertifyError> {
    if !(2 <= d && d <= m) {
        return Err(precondition(format!("probe needs 2 <= d <= m, got m = {m}, d = {d}")));
    }
    let field = PrimeField::new(opts.prime)?;
    field.require_above(m + 1)?;
    let mut observed = Vec::with_capacity(samples as usize);
    for i in 0..samples.max(1) {
        let mut rng = rng_for(mix_seed(opts.seed, &[i as u64]));
        let (p, lines) = random_configuration(&field, &mut rng, d)?;
        let x = fat_point_with_lines(&field, p, m, &lines)?;
        let c = instance_cohomology_p3(&field, &x, m)?;
        observed.push((c.h0, c.h1));
    }
    Ok(ProbeResult {
        m,
        d,
        t: m,
        prime: opts.prime,
        seed: opts.seed,
        h0: observed.iter().map(|o| o.0).min().unwrap_or(0),
        h1: observed.iter().map(|o| o.1).min().unwrap_or(0),
        observed,
        caveat: PROBE_CAVEAT.to_string(),
    })
}

/// Verdict for one `(m, d)` cell of the theorem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellVerdict {
    pub m: u64,
    pub d: u64,
    pub k: u64,
    pub exceptional_pair: bool,
    /// `h^0 = 0` at `k - 1`; absent when that degree is an excluded one.
    pub lower: Option<Certificate>,
    /// `h^1 = 0` at `k`, or at `m + 1` for an exceptional pair with `k = m`.
    pub upper: Certificate,
    /// The deficit seen at `t = m` for an exceptional pair.
    pub deficit: Option<Certificate>,
}

impl CellVerdict {
    pub fn passed(&self) -> bool {
        let lower_ok = self.lower.as_ref().is_none_or(|c| c.is_certified() && c.h0 == 0);
        let upper_ok = self.upper.is_certified() && self.upper.h1 == 0;
        let deficit_ok = self
            .deficit
            .as_ref()
            .is_none_or(|c| matches!(c.status, Status::DeficitObserved { h0, h1 } if h0 >= 1 && h1 >= 1));
        lower_ok && upper_ok && deficit_ok
    }

    pub fn certificates(&self) -> impl Iterator<Item = &Certificate> {
        self.lower.iter().chain(std::iter::once(&self.upper)).chain(self.deficit.iter())
    }
}

/// Certifies `h^0 = 0` at `k - 1` and `h^1 = 0` at `k = critical_value(m, d)`.
/// For `2 <= d <= m` degrees `t <= m` are excluded from the statement; those
/// cells instead record the deficit at `t = m`.
pub fn verify_theorem_cell(m: u64, d: u64, opts: &CertifyOptions) -> Result<CellVerdict, CertifyError> {
    if m < 1 || d < 1 {
        return Err(precondition(format!("cell needs m >= 1 and d >= 1, got ({m}, {d})")));
    }
    let k = critical_value(m, d);
    let exceptional_pair = 2 <= d && d <= m;
    let at = |t: u64| {
        let o = CertifyOptions {
            seed: mix_seed(opts.seed, &[m, d, t, opts.strategy.code()]),
            ..*opts
        };
        certify_maximal_rank(m, d, t, &o)
    };
    if exceptional_pair {
        let lower = if k >= m + 2 { Some(at(k - 1)?) } else { None };
        Ok(CellVerdict {
            m,
            d,
            k,
            exceptional_pair,
            lower,
            upper: at(k.max(m + 1))?,
            deficit: Some(at(m)?),
        })
    } else {
        Ok(CellVerdict {
            m,
            d,
            k,
            exceptional_pair,
            lower: Some(at(k - 1)?),
            upper: at(k)?,
            deficit: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WitnessKind {
    #[serde(rename = "B-even")]
    BEven,
    #[serde(rename = "B-odd")]
    BOdd,
    R,
    H,
}

impl fmt::Display for WitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessKind::BEven => "B-even",
            WitnessKind::BOdd => "B-odd",
            WitnessKind::R => "R",
            WitnessKind::H => "H",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
}

impl WitnessCheck {
    fn new(name: &str, expected: impl fmt::Display, observed: impl fmt::Display, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            expected: expected.to_string(),
            observed: observed.to_string(),
            passed,
        }
    }

    fn eq<T: PartialEq + fmt::Display>(name: &str, expected: T, observed: T) -> Self {
        let passed = expected == observed;
        Self::new(name, expected, observed, passed)
    }
}

/// A witness configuration together with the checks run on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessConfig {
    pub kind: WitnessKind,
    pub m: u64,
    /// Degree the vanishing is checked at.
    pub t: u64,
    pub prime: u64,
    pub seed: u64,
    pub attempts: u32,
    pub point: ProjPoint,
    pub plane: Option<PlaneP3>,
    pub quadric: Option<QuadricP3>,
    pub conic: Option<ConicInPlane>,
    /// `L` and `R` for the B configurations.
    pub special_lines: Vec<LineP3>,
    /// The ruling lines `E` for the H configuration.
    pub ruling_lines: Vec<LineP3>,
    pub lines: Vec<LineP3>,
    pub special_points: Vec<ProjPoint>,
    pub tangent_vectors: Vec<(ProjPoint, ProjPoint)>,
    pub extra_point: Option<ProjPoint>,
    /// Deviations from the nominal point counts, with the reason.
    pub notes: Vec<String>,
    pub scheme: UnionScheme,
    pub checks: Vec<WitnessCheck>,
}

impl WitnessConfig {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&WitnessCheck> {
        self.checks.iter().find(|c| !c.passed)
    }

    /// FNV-1a digest of the realized scheme's coordinates.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |p: &ProjPoint| {
            for &c in p.coords() {
                for byte in c.to_le_bytes() {
                    h ^= byte as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        };
        for c in self.scheme.components() {
            match c {
                SchemeComponent::FatPoint { center, .. } => eat(center),
                SchemeComponent::Line(l) => {
                    let (a, b) = l.span();
                    eat(&a);
                    eat(&b);
                }
                SchemeComponent::SimplePoint(p) => eat(p),
                SchemeComponent::TangentVector { support, direction } => {
                    eat(support);
                    eat(direction);
                }
            }
        }
        format!("{h:016x}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessOptions {
    pub prime: u64,
    pub seed: u64,
    /// Fresh samplings tried before giving up.
    pub attempts: u32,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self {
            prime: DEFAULT_PRIME,
            seed: 0,
            attempts: DEFAULT_RETRIES + 1,
        }
    }
}

/// Geometry shared by the witness builders, before any rank check.
#[derive(Debug, Clone)]
struct Geometry {
    point: ProjPoint,
    plane: Option<PlaneP3>,
    quadric: Option<QuadricP3>,
    conic: Option<ConicInPlane>,
    special_lines: Vec<LineP3>,
    ruling_lines: Vec<LineP3>,
    lines: Vec<LineP3>,
    /// Points of `S`, each paired with the index of its line in `lines`.
    special_points: Vec<(ProjPoint, usize)>,
    extra_point: Option<ProjPoint>,
    notes: Vec<String>,
}

fn plane_through<R: Rng + ?Sized>(field: &PrimeField, rng: &mut R, p: &ProjPoint) -> Result<PlaneP3, CertifyError> {
    Ok(retry(|| {
        let x = sample_point(field, rng, PointConstraint::Free, &[*p]).ok()?;
        let y = sample_point(field, rng, PointConstraint::Free, &[*p, x]).ok()?;
        PlaneP3::through_points(field, p, &x, &y).ok()
    })?)
}

/// A line through `s`, not in `h`, avoiding `p`, skew to `others`.
fn transverse_line_through<R: Rng + ?Sized>(
    field: &PrimeField,
    rng: &mut R,
    s: &ProjPoint,
    h: &PlaneP3,
    p: &ProjPoint,
    others: &[LineP3],
) -> Result<LineP3, CertifyError> {
    Ok(retry(|| {
        let l = sample_line(field, rng, LineConstraint::Through(s)).ok()?;
        let ok = matches!(line_plane(field, &l, h), LinePlane::Point(_))
            && !l.contains(field, p)
            && skew_to_all(field, &l, others);
        ok.then_some(l)
    })?)
}

/// A general line avoiding `p`, skew to `others`, whose point on `h`
/// satisfies `keep`.
fn general_line<R: Rng + ?Sized>(
    field: &PrimeField,
    rng: &mut R,
    h: &PlaneP3,
    p: &ProjPoint,
    others: &[LineP3],
    keep: impl Fn(&ProjPoint) -> bool,
) -> Result<LineP3, CertifyError> {
    Ok(retry(|| {
        let l = sample_line(field, rng, LineConstraint::Free).ok()?;
        let LinePlane::Point(x) = line_plane(field, &l, h) else {
            return None;
        };
        (keep(&x) && !l.contains(field, p) && skew_to_all(field, &l, others)).then_some(l)
    })?)
}

/// Number of points of `S` on `L` and on `R` for `B(m)`, plus the delta
/// against the nominal odd-m counts when they cannot both hold.
fn b_counts(m: u64) -> ((u64, u64), Option<String>) {
    if m.is_multiple_of(2) {
        return (((m + 2).div_ceil(4), (m + 2) / 4), None);
    }
    let nominal = ((m + 3).div_ceil(4), m.div_ceil(4));
    let used = ((m + 1).div_ceil(4), (m + 1) / 4);
    let note = format!(
        "#S = {} cannot hold the nominal split {}+{}; using {}+{} (delta L {}, R {})",
        m.div_ceil(2),
        nominal.0,
        nominal.1,
        used.0,
        used.1,
        used.0 as i64 - nominal.0 as i64,
        used.1 as i64 - nominal.1 as i64
    );
    (used, Some(note))
}

fn b_geometry<R: Rng + ?Sized>(field: &PrimeField, rng: &mut R, m: u64) -> Result<Geometry, CertifyError> {
    if m < 2 {
        return Err(precondition("B(m) needs m >= 2"));
    }
    let p = sample_point(field, rng, PointConstraint::Free, &[])?;
    let h = plane_through(field, rng, &p)?;
    let in_plane_avoiding_p = |rng: &mut R| {
        retry(|| {
            let l = sample_line(field, rng, LineConstraint::InPlane(&h)).ok()?;
            (!l.contains(field, &p)).then_some(l)
        })
    };
    let l = in_plane_avoiding_p(rng)?;
    let (r, o) = retry(|| {
        let r = in_plane_avoiding_p(rng).ok()?;
        match line_line(field, &l, &r) {
            LineLine::Meet(o) if o != p => Some((r, o)),
            _ => None,
        }
    })?;
    let ((on_l, on_r), note) = b_counts(m);
    let total = postnum::a(m, m + 2);
    let mut lines: Vec<LineP3> = Vec::with_capacity(total as usize);
    let mut special = Vec::new();
    for (carrier, count) in [(&l, on_l), (&r, on_r)] {
        for _ in 0..count {
            let avoid: Vec<ProjPoint> = special.iter().map(|(s, _)| *s).chain([o]).collect();
            let s = sample_point(field, rng, PointConstraint::OnLine(carrier), &avoid)?;
            let y = transverse_line_through(field, rng, &s, &h, &p, &lines)?;
            special.push((s, lines.len()));
            lines.push(y);
        }
    }
    while (lines.len() as u64) < total {
        let y = general_line(field, rng, &h, &p, &lines, |x| !l.contains(field, x) && !r.contains(field, x))?;
        lines.push(y);
    }
    let odd = m % 2 == 1;
    Ok(Geometry {
        point: p,
        plane: Some(h),
        quadric: None,
        conic: None,
        special_lines: vec![l, r],
        ruling_lines: Vec::new(),
        lines,
        special_points: special,
        extra_point: odd.then_some(o),
        notes: note.into_iter().collect(),
    })
}

fn r_geometry<R: Rng + ?Sized>(field: &PrimeField, rng: &mut R, m: u64) -> Result<Geometry, CertifyError> {
    if m < 3 || m.is_multiple_of(2) {
        return Err(precondition(format!("R(m) needs odd m >= 3, got {m}")));
    }
    let p = sample_point(field, rng, PointConstraint::Free, &[])?;
    let h = plane_through(field, rng, &p)?;
    let conic = retry(|| {
        let c = ConicInPlane::random(field, h.clone(), rng).ok()?;
        (!c.contains(field, &p)).then_some(c)
    })?;
    let total = (3 * m + 5) / 2;
    let on_conic = (m + 5) / 2;
    let mut lines: Vec<LineP3> = Vec::with_capacity(total as usize);
    let mut special = Vec::new();
    for _ in 0..on_conic {
        let avoid: Vec<ProjPoint> = special.iter().map(|(s, _)| *s).collect();
        let s = sample_point(field, rng, PointConstraint::OnConic(&conic), &avoid)?;
        let y = transverse_line_through(field, rng, &s, &h, &p, &lines)?;
        special.push((s, lines.len()));
        lines.push(y);
    }
    while (lines.len() as u64) < total {
        let y = general_line(field, rng, &h, &p, &lines, |x| !conic.contains(field, x))?;
        lines.push(y);
    }
    Ok(Geometry {
        point: p,
        plane: Some(h),
        quadric: None,
        conic: Some(conic),
        special_lines: Vec::new(),
        ruling_lines: Vec::new(),
        lines,
        special_points: special,
        extra_point: None,
        notes: Vec::new(),
    })
}

fn h_geometry<R: Rng + ?Sized>(field: &PrimeField, rng: &mut R, m: u64, k: u64) -> Result<Geometry, CertifyError> {
    if m < 1 || k < m + 3 {
        return Err(precondition(format!("H(m,k) needs m >= 1 and k >= m+3, got ({m}, {k})")));
    }
    let cell = postnum::ab(m, k).map_err(|e| precondition(e.to_string()))?;
    if cell.a < cell.b {
        return Err(precondition(format!("a = {} < b = {}", cell.a, cell.b)));
    }
    let p = sample_point(field, rng, PointConstraint::Free, &[])?;
    let q = retry(|| {
        let q = QuadricP3::random(field, rng).ok()?;
        (!q.contains(field, &p)).then_some(q)
    })?;
    let transverse = |l: &LineP3| matches!(line_quadric(field, l, &q), LineQuadric::Pair(..));

    let e_count = cell.b.div_ceil(2);
    let mut ruling_lines = Vec::with_capacity(e_count as usize);
    let mut fixed_used: Vec<[u64; 2]> = Vec::new();
    let mut support: Vec<ProjPoint> = Vec::new();
    for e in 0..e_count {
        let sigma = retry(|| {
            let s = crate::space::normalize2(field, [1, rng.gen_range(0..field.modulus())]);
            (!fixed_used.contains(&s)).then_some(s)
        })?;
        fixed_used.push(sigma);
        let line = q.ruling_line(field, Ruling::OneZero, sigma);
        let here = if e + 1 == e_count && cell.b % 2 == 1 { 1 } else { 2 };
        for _ in 0..here {
            let s = sample_point(field, rng, PointConstraint::OnLine(&line), &support)?;
            support.push(s);
        }
        ruling_lines.push(line);
    }

    let mut lines: Vec<LineP3> = Vec::with_capacity(cell.a as usize);
    let mut special = Vec::new();
    for s in &support {
        let y = retry(|| {
            let x = sample_point(field, rng, PointConstraint::Free, &[*s]).ok()?;
            let l = LineP3::new(field, *s, x).ok()?;
            (transverse(&l) && !l.contains(field, &p) && skew_to_all(field, &l, &lines)).then_some(l)
        })?;
        special.push((*s, lines.len()));
        lines.push(y);
    }
    while (lines.len() as u64) < cell.a {
        let y = retry(|| {
            let x = sample_point(field, rng, PointConstraint::OnQuadric(&q), &[]).ok()?;
            let z = sample_point(field, rng, PointConstraint::OnQuadric(&q), &[x]).ok()?;
            let l = LineP3::new(field, x, z).ok()?;
            (transverse(&l) && !l.contains(field, &p) && skew_to_all(field, &l, &lines)).then_some(l)
        })?;
        lines.push(y);
    }
    Ok(Geometry {
        point: p,
        plane: None,
        quadric: Some(q),
        conic: None,
        special_lines: Vec::new(),
        ruling_lines,
        lines,
        special_points: special,
        extra_point: None,
        notes: Vec::new(),
    })
}

/// Random tangent-vector directions at the points of `S`, none along the
/// line of `Y` through the point.
fn attach_vectors<R: Rng + ?Sized>(
    field: &PrimeField,
    rng: &mut R,
    g: &Geometry,
) -> Result<Vec<(ProjPoint, ProjPoint)>, CertifyError> {
    g.special_points
        .iter()
        .map(|(s, li)| {
            let line = &g.lines[*li];
            let d = retry(|| {
                let d = sample_point(field, rng, PointConstraint::Free, &[*s]).ok()?;
                (!line.contains(field, &d)).then_some(d)
            })?;
            Ok((*s, d))
        })
        .collect()
}

fn realize(
    field: &PrimeField,
    m: u64,
    g: &Geometry,
    vectors: &[(ProjPoint, ProjPoint)],
) -> Result<UnionScheme, CertifyError> {
    let mut comps = vec![SchemeComponent::FatPoint { center: g.point, m: m as u32 }];
    comps.extend(g.lines.iter().copied().map(SchemeComponent::Line));
    comps.extend(
        vectors
            .iter()
            .map(|&(support, direction)| SchemeComponent::TangentVector { support, direction }),
    );
    comps.extend(g.extra_point.map(SchemeComponent::SimplePoint));
    Ok(UnionScheme::new(field, comps)?)
}

fn count_on<F: Fn(&ProjPoint) -> bool>(points: impl Iterator<Item = ProjPoint>, on: F) -> u64 {
    points.filter(|x| on(x)).count() as u64
}

fn structural_checks(field: &PrimeField, kind: WitnessKind, m: u64, g: &Geometry) -> Vec<WitnessCheck> {
    let mut checks = Vec::new();
    let expected_lines = match kind {
        WitnessKind::BEven | WitnessKind::BOdd => postnum::a(m, m + 2),
        WitnessKind::R => (3 * m + 5) / 2,
        WitnessKind::H => g.lines.len() as u64,
    };
    checks.push(WitnessCheck::eq("line count", expected_lines, g.lines.len() as u64));
    if let Some(h) = &g.plane {
        let traces: Vec<ProjPoint> = g
            .lines
            .iter()
            .filter_map(|l| match line_plane(field, l, h) {
                LinePlane::Point(x) => Some(x),
                LinePlane::Contained => None,
            })
            .collect();
        checks.push(WitnessCheck::eq("Y meets H in finitely many points", g.lines.len(), traces.len()));
        match kind {
            WitnessKind::BEven | WitnessKind::BOdd => {
                let ((on_l, on_r), _) = b_counts(m);
                let (l, r) = (&g.special_lines[0], &g.special_lines[1]);
                checks.push(WitnessCheck::eq(
                    "points of Y ∩ H on L",
                    on_l,
                    count_on(traces.iter().copied(), |x| l.contains(field, x)),
                ));
                checks.push(WitnessCheck::eq(
                    "points of Y ∩ H on R",
                    on_r,
                    count_on(traces.iter().copied(), |x| r.contains(field, x)),
                ));
                checks.push(WitnessCheck::eq(
                    "P off L and R",
                    true,
                    !l.contains(field, &g.point) && !r.contains(field, &g.point),
                ));
                if kind == WitnessKind::BOdd {
                    checks.push(WitnessCheck::eq("#S", m.div_ceil(2), g.special_points.len() as u64));
                    let o = g.extra_point.expect("odd B carries O");
                    checks.push(WitnessCheck::eq(
                        "O = L ∩ R not in S",
                        true,
                        g.special_points.iter().all(|(s, _)| *s != o),
                    ));
                }
            }
            WitnessKind::R => {
                let conic = g.conic.as_ref().expect("R carries a conic");
                checks.push(WitnessCheck::eq(
                    "#((Y ∩ H) ∩ D)",
                    (m + 5) / 2,
                    count_on(traces.iter().copied(), |x| conic.contains(field, x)),
                ));
                checks.push(WitnessCheck::eq("P off D", true, !conic.contains(field, &g.point)));
            }
            WitnessKind::H => {}
        }
    }
    if let Some(q) = &g.quadric {
        checks.push(WitnessCheck::eq("P off Q", true, !q.contains(field, &g.point)));
        checks.push(WitnessCheck::eq(
            "Y transverse to Q",
            true,
            g.lines
                .iter()
                .all(|l| matches!(line_quadric(field, l, q), LineQuadric::Pair(..))),
        ));
        let max_on_e = g
            .ruling_lines
            .iter()
            .map(|e| count_on(g.special_points.iter().map(|(s, _)| *s), |x| e.contains(field, x)))
            .max()
            .unwrap_or(0);
        checks.push(WitnessCheck::new("at most two points of S per line of E", "<= 2", max_on_e, max_on_e <= 2));
        checks.push(WitnessCheck::eq(
            "S ⊂ E",
            true,
            g.special_points
                .iter()
                .all(|(s, _)| g.ruling_lines.iter().any(|e| e.contains(field, s))),
        ));
    }
    checks
}

fn run_witness(
    kind_of: impl Fn(u64) -> WitnessKind,
    m: u64,
    t: u64,
    expected_degree: u64,
    opts: &WitnessOptions,
    build: impl Fn(&PrimeField, &mut ChaCha8Rng) -> Result<Geometry, CertifyError>,
    rank_checks: impl Fn(&Cohomology, u64) -> Vec<WitnessCheck>,
) -> Result<WitnessConfig, CertifyError> {
    let kind = kind_of(m);
    let field = PrimeField::new(opts.prime)?;
    field.require_above(t + 1)?;
    let mut last: Option<WitnessConfig> = None;
    for attempt in 0..opts.attempts.max(1) {
        let mut rng = rng_for(mix_seed(opts.seed, &[attempt as u64]));
        let g = build(&field, &mut rng)?;
        let vectors = if matches!(kind, WitnessKind::BEven) {
            Vec::new()
        } else {
            attach_vectors(&field, &mut rng, &g)?
        };
        let scheme = realize(&field, m, &g, &vectors)?;
        let mut checks = structural_checks(&field, kind, m, &g);
        let degree = scheme.degree(t)?;
        checks.push(WitnessCheck::eq("degree identity", expected_degree, degree));
        // rank only once the ledger identity is in place
        if checks.iter().all(|c| c.passed) {
            let c = instance_cohomology_p3(&field, &scheme, t)?;
            checks.extend(rank_checks(&c, degree));
        }
        let config = WitnessConfig {
            kind,
            m,
            t,
            prime: opts.prime,
            seed: opts.seed,
            attempts: attempt + 1,
            point: g.point,
            plane: g.plane.clone(),
            quadric: g.quadric.clone(),
            conic: g.conic.clone(),
            special_lines: g.special_lines.clone(),
            ruling_lines: g.ruling_lines.clone(),
            lines: g.lines.clone(),
            special_points: g.special_points.iter().map(|(s, _)| *s).collect(),
            tangent_vectors: vectors,
            extra_point: g.extra_point,
            notes: g.notes.clone(),
            scheme,
            checks,
        };
        if config.passed() {
            return Ok(config);
        }
        last = Some(config);
    }
    let report = last.expect("at least one attempt");
    Err(CertifyError::WitnessFailed {
        kind,
        check: report.first_failure().map(|c| c.name.clone()).unwrap_or_default(),
        attempts: report.attempts,
        report: Box::new(report),
    })
}

fn rank_equals_degree(c: &Cohomology, degree: u64) -> Vec<WitnessCheck> {
    vec![
        WitnessCheck::eq("rank = degree", degree, c.rank),
        WitnessCheck::eq("h1", 0, c.h1),
    ]
}

/// `mP ∪ Y` (even m) or `mP ∪ Y ∪ v ∪ {O}` (odd m) with `h^1 = 0` at `m+2`.
pub fn build_witness_b(m: u64, opts: &WitnessOptions) -> Result<WitnessConfig, CertifyError> {
    if m < 2 {
        return Err(precondition(format!("B(m) needs m >= 2, got {m}")));
    }
    let kind = |m: u64| if m.is_multiple_of(2) { WitnessKind::BEven } else { WitnessKind::BOdd };
    run_witness(
        kind,
        m,
        m + 2,
        binom(m as i64 + 5, 3) - 1,
        opts,
        |f, r| b_geometry(f, r, m),
        |c, degree| {
            let mut checks = rank_equals_degree(c, degree);
            checks.push(WitnessCheck::eq("h0", 1, c.h0));
            checks
        },
    )
}

/// `mP ∪ Y ∪ v` with `h^0 = h^1 = 0` at `m+2`, `S` on a conic of a plane through `P`.
pub fn build_witness_r(m: u64, opts: &WitnessOptions) -> Result<WitnessConfig, CertifyError> {
    if m < 3 || m.is_multiple_of(2) {
        return Err(precondition(format!("R(m) needs odd m >= 3, got {m}")));
    }
    run_witness(
        |_| WitnessKind::R,
        m,
        m + 2,
        binom(m as i64 + 5, 3),
        opts,
        |f, r| r_geometry(f, r, m),
        |c, degree| {
            let mut checks = rank_equals_degree(c, degree);
            checks.push(WitnessCheck::eq("h0", 0, c.h0));
            checks
        },
    )
}

/// `mP ∪ Y ∪ v` with `h^0 = h^1 = 0` at `k`, `S` on ruling lines of a quadric.
pub fn build_witness_h(m: u64, k: u64, opts: &WitnessOptions) -> Result<WitnessConfig, CertifyError> {
    if m < 1 || k < m + 3 {
        return Err(precondition(format!("H(m,k) needs m >= 1 and k >= m+3, got ({m}, {k})")));
    }
    run_witness(
        |_| WitnessKind::H,
        m,
        k,
        forms_p3(k),
        opts,
        |f, r| h_geometry(f, r, m, k),
        |c, degree| {
            let mut checks = rank_equals_degree(c, degree);
            checks.push(WitnessCheck::eq("h0", 0, c.h0));
            checks
        },
    )
}

/// One residual step: all six cohomology numbers and whether vanishing of
/// the residual and trace `h^1` carried over to `X`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepReport {
    pub numbers: CastelnuovoReport,
    pub residual_h1_vanishes: bool,
    pub trace_h1_vanishes: bool,
    pub h1_vanishes: bool,
    /// `h^1(Res) = 0` and `h^1(trace) = 0` imply `h^1(X) = 0` here.
    pub implication_holds: bool,
}

pub fn replay_castelnuovo_step(
    field: &PrimeField,
    x: &UnionScheme,
    surface: &Surface,
    twist: u64,
) -> Result<StepReport, CertifyError> {
    let numbers = castelnuovo_check(field, x, surface, twist)?;
    let residual_h1_vanishes = numbers.residual_h1 == 0;
    let trace_h1_vanishes = numbers.trace_h1 == 0;
    let h1_vanishes = numbers.h1 == 0;
    Ok(StepReport {
        implication_holds: !(residual_h1_vanishes && trace_h1_vanishes) || h1_vanishes,
        numbers,
        residual_h1_vanishes,
        trace_h1_vanishes,
        h1_vanishes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub m_max: u64,
    pub t_max: u64,
    pub seed: u64,
    pub prime: u64,
    pub retries: u32,
    pub jobs: usize,
    pub probe_samples: u32,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            m_max: 2,
            t_max: 6,
            seed: 0,
            prime: DEFAULT_PRIME,
            retries: DEFAULT_RETRIES,
            jobs: 1,
            probe_samples: DEFAULT_PROBE_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<CellVerdict>,
    pub probes: Vec<ProbeResult>,
}

impl SweepResult {
    pub fn all_passed(&self) -> bool {
        self.cells.iter().all(CellVerdict::passed)
    }

    /// The result with timings zeroed.
    pub fn canonical(&self) -> Self {
        let strip = |c: &Option<Certificate>| c.as_ref().map(Certificate::canonical);
        Self {
            cells: self
                .cells
                .iter()
                .map(|v| CellVerdict {
                    lower: strip(&v.lower),
                    upper: v.upper.canonical(),
                    deficit: strip(&v.deficit),
                    ..v.clone()
                })
                .collect(),
            probes: self.probes.clone(),
        }
    }
}

/// Cells `(m, d)` with `1 <= m <= m_max` and `critical_value(m, d) <= t_max`.
pub fn sweep_cells(m_max: u64, t_max: u64) -> Vec<(u64, u64)> {
    (1..=m_max)
        .flat_map(|m| {
            (1..)
                .take_while(move |&d| critical_value(m, d) <= t_max)
                .map(move |d| (m, d))
        })
        .collect()
}

/// Runs every cell of the sweep on a pool of `jobs` threads; output is
/// ordered by cell and independent of scheduling.
pub fn run_sweep(opts: &SweepOptions) -> Result<SweepResult, CertifyError> {
    if opts.m_max < 1 || opts.t_max < opts.m_max {
        return Err(precondition("sweep needs m_max >= 1 and t_max >= m_max"));
    }
    let cell_opts = CertifyOptions {
        prime: opts.prime,
        seed: opts.seed,
        retries: opts.retries,
        strategy: Strategy::Random,
    };
    let cells = sweep_cells(opts.m_max, opts.t_max);
    let probes: Vec<(u64, u64)> = (2..=opts.m_max).flat_map(|m| (2..=m).map(move |d| (m, d))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| precondition(e.to_string()))?;
    pool.install(|| {
        let verdicts = cells
            .par_iter()
            .map(|&(m, d)| verify_theorem_cell(m, d, &cell_opts))
            .collect::<Result<Vec<_>, _>>()?;
        let probes = probes
            .par_iter()
            .map(|&(m, d)| {
                let o = CertifyOptions {
                    seed: mix_seed(opts.seed, &[m, d, u64::MAX]),
                    ..cell_opts
                };
                exceptional_probe(m, d, opts.probe_samples, &o)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SweepResult { cells: verdicts, probes })
    })
}

fn status_label(s: &Status) -> String {
    match s {
        Status::MaximalRankCertified => "certified".into(),
        Status::DeficitObserved { h0, h1 } => format!("deficit({h0},{h1})"),
        Status::Unconfirmed => "unconfirmed".into(),
    }
}

fn sweep_rows(result: &SweepResult) -> Vec<[String; 6]> {
    let mut rows: Vec<[String; 6]> = result
        .cells
        .iter()
        .map(|v| {
            let lower = v.lower.as_ref().map_or("-".to_string(), |c| c.h0.to_string());
            let mut status = if v.passed() { "certified".to_string() } else { "unconfirmed".to_string() };
            if let Some(c) = &v.deficit {
                status = format!("{status}; t={} {}", c.t, status_label(&c.status));
            }
            [
                v.m.to_string(),
                v.d.to_string(),
                v.k.to_string(),
                lower,
                format!("{}{}", v.upper.h1, if v.upper.t != v.k { format!(" (t={})", v.upper.t) } else { String::new() }),
                status,
            ]
        })
        .collect();
    rows.extend(result.probes.iter().map(|p| {
        [
            p.m.to_string(),
            p.d.to_string(),
            p.t.to_string(),
            p.h0.to_string(),
            p.h1.to_string(),
            format!("exceptional probe ({})", p.caveat),
        ]
    }));
    rows
}

const SWEEP_HEADER: [&str; 6] = ["m", "d", "k", "h0@k-1", "h1@k", "status"];

pub fn render_sweep_markdown(result: &SweepResult) -> String {
    let mut out = format!("| {} |\n|{}\n", SWEEP_HEADER.join(" | "), "---|".repeat(SWEEP_HEADER.len()));
    for row in sweep_rows(result) {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}

pub fn render_sweep_csv(result: &SweepResult) -> String {
    let mut out = format!("{}\n", SWEEP_HEADER.join(","));
    for row in sweep_rows(result) {
        let quoted: Vec<String> = row
            .iter()
            .map(|f| if f.contains([',', '"']) { format!("\"{}\"", f.replace('"', "\"\"")) } else { f.clone() })
            .collect();
        out.push_str(&format!("{}\n", quoted.join(",")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(seed: u64) -> CertifyOptions {
        CertifyOptions {
            seed,
            ..CertifyOptions::default()
        }
    }

    #[test]
    fn certify_examples() {
        let c = certify_maximal_rank(1, 3, 2, &opts(0)).unwrap();
        assert_eq!((c.status, c.h0, c.h1), (Status::MaximalRankCertified, 0, 0));
        let c = certify_maximal_rank(2, 2, 2, &opts(0)).unwrap();
        assert_eq!(c.status, Status::DeficitObserved { h0: 1, h1: 1 });
        assert!(c.exceptional);
        let c = certify_maximal_rank(2, 6, 4, &opts(0)).unwrap();
        assert_eq!((c.status, c.h0, c.h1), (Status::MaximalRankCertified, 1, 0));
    }

    #[test]
    fn certificate_is_reproducible() {
        let a = certify_maximal_rank(2, 5, 4, &opts(9)).unwrap().canonical();
        let b = certify_maximal_rank(2, 5, 4, &opts(9)).unwrap().canonical();
        assert_eq!(a, b);
        let x = certificate_instance(&a).unwrap();
        let c = instance_cohomology_p3(&PrimeField::new(a.prime).unwrap(), &x, a.t).unwrap();
        assert_eq!(c.rank, a.rank);
    }

    #[test]
    fn schedule_uses_fresh_primes_last() {
        let s = attempt_schedule(DEFAULT_PRIME, 3);
        assert_eq!(s.len(), 6);
        assert!(s[..4].iter().all(|&p| p == DEFAULT_PRIME));
        assert!(s[4] < DEFAULT_PRIME && s[5] < s[4]);
    }

    #[test]
    fn mixing_separates_keys() {
        assert_ne!(mix_seed(0, &[1, 2]), mix_seed(0, &[2, 1]));
        assert_eq!(mix_seed(5, &[3]), mix_seed(5, &[3]));
    }

    #[test]
    fn theorem_cell_examples() {
        let v = verify_theorem_cell(1, 3, &opts(0)).unwrap();
        assert_eq!(v.k, 2);
        let lower = v.lower.as_ref().unwrap();
        assert_eq!((lower.degree, lower.n_forms, lower.rank), (7, 4, 4));
        assert!(v.passed());

        let v = verify_theorem_cell(2, 6, &opts(0)).unwrap();
        assert_eq!(v.k, 4);
        let lower = v.lower.as_ref().unwrap();
        assert_eq!((lower.degree, lower.rank, lower.h0), (28, 20, 0));
        assert_eq!((v.upper.degree, v.upper.rank, v.upper.h0), (34, 34, 1));

        let v = verify_theorem_cell(3, 2, &opts(0)).unwrap();
        assert_eq!(v.k, 3);
        assert!(v.lower.is_none());
        assert!(matches!(v.deficit.as_ref().unwrap().status, Status::DeficitObserved { .. }));
        assert_eq!(v.upper.t, 4);
        assert!(v.passed());
    }

    #[test]
    fn probe_examples() {
        let p = exceptional_probe(2, 2, 5, &opts(0)).unwrap();
        assert_eq!((p.h0, p.h1), (1, 1));
        assert_eq!(p.caveat, PROBE_CAVEAT);
        for (m, d) in [(3, 2), (3, 3)] {
            let p = exceptional_probe(m, d, 3, &opts(1)).unwrap();
            assert!(p.h0 >= 1 && p.h1 >= 1);
        }
        assert!(exceptional_probe(3, 4, 3, &opts(0)).is_err());
    }

    #[test]
    fn witness_small_cases() {
        let o = WitnessOptions::default();
        let b2 = build_witness_b(2, &o).unwrap();
        assert_eq!(b2.lines.len(), 6);
        let b3 = build_witness_b(3, &o).unwrap();
        assert_eq!((b3.lines.len(), b3.special_points.len()), (7, 2));
        assert!(!b3.notes.is_empty());
        let b4 = build_witness_b(4, &o).unwrap();
        assert_eq!(b4.lines.len(), 9);
        let r3 = build_witness_r(3, &o).unwrap();
        assert_eq!((r3.lines.len(), r3.special_points.len()), (7, 4));
        assert!(matches!(build_witness_r(4, &o), Err(CertifyError::Precondition(_))));
        let h14 = build_witness_h(1, 4, &o).unwrap();
        assert_eq!((h14.lines.len(), h14.tangent_vectors.len(), h14.ruling_lines.len()), (6, 4, 2));
    }

    #[test]
    fn subunion_rule_matches_direct_rank() {
        let c = certify_maximal_rank(2, 6, 4, &opts(3)).unwrap();
        for d in 1..6 {
            let derived = derive_subunion(&c, d).unwrap();
            let direct = spot_check_subunion(&c, d).unwrap();
            assert_eq!((derived.h0, derived.h1), (direct.h0, direct.h1));
        }
    }

    #[test]
    fn witness_strategy_uses_sub_unions() {
        let o = CertifyOptions {
            strategy: Strategy::WitnessB,
            ..opts(0)
        };
        let c = certify_maximal_rank(3, 5, 5, &o).unwrap();
        assert!(c.is_certified() && c.h1 == 0);
        assert!(certify_maximal_rank(3, 5, 6, &o).is_err());
    }
}
