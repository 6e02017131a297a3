//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::time::{Duration, Instant};

use postlab::certify::{
    build_witness_b, build_witness_h, build_witness_r, certify_maximal_rank, run_sweep, verify_theorem_cell,
    CertifyOptions, Status, SweepOptions, WitnessOptions,
};
use postlab::exactlin::{PrimeField, DEFAULT_PRIME};
use postlab::postnum::{
    ab, claim1_holds, closed_forms, critical_value, expected_cohomology, gap_lemma, identity_eq2, identity_eq3,
    identity_eq4, reconcile,
};
use postlab::schemecalc::castelnuovo_check;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LEDGER_BUDGET: Duration = Duration::from_secs(1);
const IDENTITY_BUDGET: Duration = Duration::from_secs(1);
const BASELINE_BUDGET: Duration = Duration::from_secs(10);
const SWEEP_BUDGET: Duration = Duration::from_secs(120);
const WITNESS_BUDGET: Duration = Duration::from_secs(120);
const RESIDUAL_BUDGET: Duration = Duration::from_secs(30);
/// Seed retries allowed per cell before counting it as a failure.
const MAX_RETRIES: u32 = 3;

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    failures: Vec<String>,
    summary: String,
}

impl Outcome {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            summary: String::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

fn binom(n: u64, r: u64) -> u64 {
    if n < r {
        return 0;
    }
    (0..r).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Ledger by counting up instead of dividing.
fn ledger_oracle(m: u64, k: u64) -> (u64, u64) {
    let (fat, total) = (binom(m + 2, 3), binom(k + 3, 3));
    let mut a = 0;
    while fat + (k + 1) * (a + 1) <= total {
        a += 1;
    }
    (a, total - fat - (k + 1) * a)
}

/// Generic `(h0, h1)` at `t = m` for `d <= m` lines: the forms are cones
/// over plane curves of degree `m` containing `d` general lines.
fn cone_oracle(m: u64, d: u64) -> (u64, u64) {
    let h0 = binom(m - d + 2, 2);
    let n = binom(m + 3, 3);
    let degree = binom(m + 2, 3) + d * (m + 1);
    (h0, h0 + degree - n)
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    for m in 0..=60 {
        for k in m..=m + 40 {
            let cell = ab(m, k).unwrap();
            o.check(
                (cell.a, cell.b) == ledger_oracle(m, k) && cell.b <= k,
                || format!("ledger ({m},{k}) = ({}, {})", cell.a, cell.b),
            );
        }
        let at = |j: u64| {
            let c = ab(m, m + j).unwrap();
            (c.a, c.b)
        };
        o.check(closed_forms::shift1(m) == Some(at(1)), || format!("k=m+1 at m={m}"));
        o.check(closed_forms::shift2(m) == Some(at(2)), || format!("k=m+2 at m={m}"));
        if m >= 1 {
            o.check(closed_forms::shift3(m) == Some(at(3)), || format!("k=m+3 at m={m}"));
        }
        if let Some(v) = closed_forms::shift4(m) {
            o.check(v == at(4), || format!("k=m+4 at m={m}"));
        }
    }
    let rows = reconcile(60);
    let flagged: Vec<&str> = rows.iter().filter(|r| !r.consistent).map(|r| r.item.as_str()).collect();
    for expected in [
        "two-step difference identity, last b index",
        "consecutive-multiplicity identity, subtracted a index",
        "k = m+2 weighted sum, constant term",
        "(a,b) at m = 0, k = 3",
        "expansion of C(m+6,3) - C(m+2,3)",
    ] {
        o.check(flagged.contains(&expected), || format!("reconciliation misses `{expected}`"));
    }
    for consistent in ["(a,b) at k = m+1", "(a,b) at k = m+2", "(a,b) at k = m+3", "(a,b) at k = m+4"] {
        o.check(!flagged.contains(&consistent), || format!("`{consistent}` wrongly flagged"));
    }
    o.summary = format!("{} reconciliation items, {} flagged", rows.len(), flagged.len());
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let mut n = 0;
    for m in 0..=20 {
        for k in m + 2..=m + 40 {
            o.check(identity_eq2(m, k), || format!("two-step identity at ({m},{k})"));
            n += 1;
        }
        for k in m + 3..=m + 40 {
            o.check(gap_lemma(m, k), || format!("gap inequality at ({m},{k})"));
            n += 1;
        }
    }
    for m in 0..=60 {
        if m >= 1 {
            o.check(identity_eq3(m), || format!("consecutive identity at m={m}"));
        }
        o.check(identity_eq4(m), || format!("weighted sum at m={m}"));
        n += 2;
    }
    for m in 1..=50 {
        o.check(claim1_holds(m, m + 45), || format!("psi at m={m}"));
        n += 1;
    }
    o.summary = format!("{n} identity/inequality instances");
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let mut n = 0;
    for d in 0..=15 {
        for t in 0..=8 {
            let opts = CertifyOptions {
                seed: d * 100 + t,
                ..CertifyOptions::default()
            };
            let c = certify_maximal_rank(0, d, t, &opts).unwrap();
            o.check(
                c.is_certified() && c.attempts <= MAX_RETRIES + 1 && c.matches_expectation(),
                || format!("d={d} t={t}: {:?} after {} attempts", c.status, c.attempts),
            );
            n += 1;
        }
    }
    o.summary = format!("{n} cells");
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let opts = CertifyOptions::default();
    let mut cells = 0;
    for m in 2..=5 {
        for d in (1..).take_while(|&d| critical_value(m, d) <= 10) {
            let v = verify_theorem_cell(m, d, &opts).unwrap();
            cells += 1;
            o.check(v.passed(), || format!("cell ({m},{d}) k={} not verified", v.k));
            for c in v.certificates() {
                if c.is_certified() {
                    o.check(c.attempts <= MAX_RETRIES + 1, || format!("({m},{d},{}) needed {} attempts", c.t, c.attempts));
                    o.check(c.h0 * c.h1 == 0 && c.matches_expectation(), || {
                        format!("({m},{d},{}) certified with unexpected ({}, {})", c.t, c.h0, c.h1)
                    });
                }
            }
            if let Some(c) = &v.deficit {
                let oracle = cone_oracle(m, d);
                o.check(c.status == Status::DeficitObserved { h0: oracle.0, h1: oracle.1 }, || {
                    format!("({m},{d},{m}) deficit {:?}, generic {:?}", c.status, oracle)
                });
                if (m, d) == (2, 2) {
                    o.check(c.status == Status::DeficitObserved { h0: 1, h1: 1 }, || "(2,2,2) is not (1,1)".into());
                }
            }
            let lower_ok = v.lower.as_ref().is_none_or(|c| c.h0 == 0 && expected_cohomology(m, d, c.t).0 == 0);
            o.check(lower_ok, || format!("({m},{d}) lower check"));
        }
    }
    o.summary = format!("{cells} cells");
    o
}

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let opts = WitnessOptions::default();
    let mut runs = 0;
    let mut record = |o: &mut Outcome, name: String, r: Result<postlab::certify::WitnessConfig, postlab::certify::CertifyError>| {
        runs += 1;
        match r {
            Ok(w) => {
                let has_degree = w.checks.iter().any(|c| c.name == "degree identity" && c.passed);
                let has_rank = w.checks.iter().any(|c| c.name == "rank = degree" && c.passed);
                o.check(w.passed() && has_degree && has_rank, || format!("{name}: checks incomplete"));
            }
            Err(e) => o.check(false, || format!("{name}: {e}")),
        }
    };
    for m in 2..=8 {
        record(&mut o, format!("B({m})"), build_witness_b(m, &opts));
    }
    for m in [3, 5, 7, 9] {
        record(&mut o, format!("R({m})"), build_witness_r(m, &opts));
    }
    for m in 1..=4 {
        for k in m + 3..=9 {
            record(&mut o, format!("H({m},{k})"), build_witness_h(m, k, &opts));
        }
    }
    o.summary = format!("{runs} witnesses");
    o
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    let field = PrimeField::new(DEFAULT_PRIME).unwrap();
    let mut seen = [false; 4];
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_split_instance(&field, &mut rng);
        for (s, k) in seen.iter_mut().zip(common::kinds_present(&inst.x)) {
            *s |= k;
        }
        match castelnuovo_check(&field, &inst.x, &inst.surface, inst.twist) {
            Ok(r) => {
                o.check(r.degree_conserved(), || format!("seed {seed}: degree {} != {} + {}", r.degree, r.residual_degree, r.trace_degree));
                o.check(r.h0_bound_holds(), || format!("seed {seed}: h0 bound {r:?}"));
                o.check(r.h1_bound_holds(), || format!("seed {seed}: h1 bound {r:?}"));
            }
            Err(e) => o.check(false, || format!("seed {seed}: {e}")),
        }
    }
    o.check(seen.iter().all(|&s| s), || "not all component kinds drawn".into());
    o.summary = "100 instances".into();
    o
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    let base = SweepOptions {
        m_max: 5,
        t_max: 10,
        seed: 0,
        prime: DEFAULT_PRIME,
        retries: MAX_RETRIES,
        jobs: 1,
        ..SweepOptions::default()
    };
    let json = |opts: &SweepOptions| serde_json::to_string(&run_sweep(opts).unwrap().canonical()).unwrap();
    let first = json(&base);
    let second = json(&base);
    let parallel = json(&SweepOptions { jobs: 8, ..base });
    o.check(first == second, || "repeat run differs".into());
    o.check(first == parallel, || "--jobs 8 differs from --jobs 1".into());
    o.summary = format!("{} bytes of certificates compared", first.len());
    o
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("ledger suite", LEDGER_BUDGET, criterion_1),
        ("identity/inequality suite", IDENTITY_BUDGET, criterion_2),
        ("lines-only baseline", BASELINE_BUDGET, criterion_3),
        ("theorem sweep m <= 5, k <= 10", SWEEP_BUDGET, criterion_4),
        ("witness suite", WITNESS_BUDGET, criterion_5),
        ("residual/Castelnuovo suite", RESIDUAL_BUDGET, criterion_6),
        ("determinism", Duration::MAX, criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = run();
        let elapsed = start.elapsed();
        if elapsed > *budget {
            outcome.failures.push(format!("took {elapsed:.2?}, budget {budget:.0?}"));
        }
        let verdict = if outcome.failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "criterion {} [PRIMARY] {verdict} {name}: {} ({elapsed:.2?})",
            i + 1,
            outcome.summary
        );
        for f in outcome.failures.iter().take(10) {
            println!("    {f}");
        }
        failed += !outcome.failures.is_empty() as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
