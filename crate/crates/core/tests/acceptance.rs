//! Acceptance suite: one pass/fail line per criterion, with pinned limits.
//! Runs without the libtest harness so the lines always print.

mod common;

use std::time::{Duration, Instant};

use common::{oracle_valuation, schoolbook_mul};
use hahn_core::builder::{build_adapted, build_plan, Instance};
use hahn_core::commands::{cmd_build, cmd_verify};
use hahn_core::config::InstanceConfig;
use hahn_core::division::{divide, run_division};
use hahn_core::fields::value_in_ground_group;
use hahn_core::random;
use hahn_core::series::{Profile, TruncatedSeries};
use hahn_core::tate::{disk_seminorm, type_ii_lower_bound, TateElement};
use hahn_core::transcript::{parse_document, to_json, CertificateDoc, Document, PlanDoc, TraceDoc};
use hahn_core::valgroup::{int, p_pow, rat, ExtRat, Rat};
use hahn_core::verify::{verify_certificate, verify_plan};
use hahn_core::Error;
use rand::Rng;

const GOLDEN_PLAN: &str = include_str!("golden/plan.json");
const GOLDEN_CERT: &str = include_str!("golden/adapted_0.json");
const GOLDEN_TRACE: &str = include_str!("golden/trace.json");

/// Random cases per law in criteria 1 and 2.
const RANDOM_CASES: u64 = 1000;
const MAX_TERMS: usize = 12;
const MAX_PRECISION: i64 = 20;
const DIVISION_TARGETS: u64 = 20;
const DIVISION_STEPS: usize = 8;
const DIVISION_TERMS: usize = 8;
const TYPE_II_ELEMENTS: u64 = 50;
const TYPE_II_RADII: usize = 5;
const MUTATIONS: u64 = 10;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_pair(seed: u64, profile: &std::sync::Arc<Profile>) -> (TruncatedSeries, TruncatedSeries) {
    let mut rng = random::rng(seed);
    let pf = rng.gen_range(1..=MAX_PRECISION);
    let pg = rng.gen_range(1..=MAX_PRECISION);
    (
        random::series(&mut rng, profile, MAX_TERMS, pf, false),
        random::series(&mut rng, profile, MAX_TERMS, pg, false),
    )
}

fn criterion_1() -> Outcome {
    let ground = Profile::ground(3);
    let residue = Profile::residue(3, rat(1, 2)).unwrap();
    let mut mult = 0;
    let mut inverted = 0;
    for seed in 0..RANDOM_CASES {
        for profile in [&ground, &residue] {
            let (f, g) = random_pair(seed, profile);
            let fg = f.mul(&g).map_err(|e| e.to_string())?;
            ensure(fg == schoolbook_mul(&f, &g), || {
                format!("seed {seed}: mul differs from schoolbook")
            })?;
            let (vf, vg) = (oracle_valuation(&f), oracle_valuation(&g));
            if !f.is_empty() && !g.is_empty() {
                ensure(fg.valuation() == &vf + &vg, || {
                    format!("seed {seed}: val(fg) != val f + val g")
                })?;
                mult += 1;
            }
            let s = f.add(&g).map_err(|e| e.to_string())?.valuation();
            let lo = vf.clone().min(vg.clone());
            ensure(s >= lo, || format!("seed {seed}: val(f+g) below min"))?;
            if vf != vg {
                ensure(s == lo, || {
                    format!("seed {seed}: val(f+g) != min for distinct valuations")
                })?;
            }
        }
        // triples: associativity of the product against the oracle
        let mut rng = random::rng(seed ^ 0xa5a5);
        let h = random::series(&mut rng, &ground, MAX_TERMS, MAX_PRECISION, false);
        let (f, g) = random_pair(seed, &ground);
        let left = f.mul(&g).unwrap().mul(&h).unwrap();
        let right = schoolbook_mul(&f, &schoolbook_mul(&g, &h));
        let bound = left.precision().clone().min(right.precision().clone());
        if let ExtRat::Finite(b) = &bound {
            ensure(left.agrees_below(&right, b), || {
                format!("seed {seed}: (fg)h != f(gh)")
            })?;
        }
        for u in [&f, &g, &h] {
            if u.is_empty() {
                continue;
            }
            let v = u.valuation().finite().unwrap().clone();
            let p = u.precision().finite().unwrap().clone();
            let target = ExtRat::Finite(&p - int(2) * &v);
            let inv = u.invert(&target).map_err(|e| format!("seed {seed}: {e}"))?;
            let one = u.mul(&inv).unwrap();
            let bound = &p - &v;
            let unit = TruncatedSeries::one(&ground).with_precision(bound.clone().into());
            ensure(one.agrees_below(&unit, &bound), || {
                format!("seed {seed}: u * u^-1 != 1")
            })?;
            inverted += 1;
        }
    }
    ensure(
        mult >= RANDOM_CASES as usize && inverted >= RANDOM_CASES as usize,
        || format!("too few nontrivial cases: {mult} products, {inverted} inversions"),
    )?;
    Ok(format!("{mult} products, {inverted} inversions"))
}

fn criterion_2() -> Outcome {
    let residue = Profile::residue(3, rat(1, 2)).unwrap();
    for seed in 0..RANDOM_CASES {
        let (f, g) = random_pair(seed + 7_000, &residue);
        ensure(f.frobenius(1).frobenius(-1) == f, || {
            format!("seed {seed}: frob^-1 frob != id")
        })?;
        ensure(f.frobenius(-1).frobenius(1) == f, || {
            format!("seed {seed}: frob frob^-1 != id")
        })?;
        let prod = f.mul(&g).unwrap().frobenius(1);
        let mapped = f.frobenius(1).mul(&g.frobenius(1)).unwrap();
        ensure(prod == mapped, || {
            format!("seed {seed}: frobenius not multiplicative")
        })?;
        let sum = f.add(&g).unwrap().frobenius(1);
        ensure(sum == f.frobenius(1).add(&g.frobenius(1)).unwrap(), || {
            format!("seed {seed}: frobenius not additive")
        })?;
    }
    Ok(format!("{RANDOM_CASES} pairs"))
}

fn criterion_3() -> Outcome {
    let plan = build_plan(&Instance::default(), 12, int(26)).map_err(|e| e.to_string())?;
    let report = verify_plan(&PlanDoc::new(&plan, 12)).map_err(|e| e.to_string())?;
    ensure(report.checks == 12, || {
        "verifier did not check 12 stages".into()
    })?;
    for m in 1..=12 {
        let cert = build_adapted(&plan, m).map_err(|e| e.to_string())?;
        let mut local = plan.clone();
        local
            .ensure_image_precision(m - 1, &int(0))
            .map_err(|e| e.to_string())?;
        verify_certificate(&CertificateDoc::new(&local, &cert))
            .map_err(|e| format!("stage {m}: {e}"))?;
        ensure(
            cert.valuation >= int(0) && cert.valuation < rat(1, 4),
            || format!("stage {m}: condition 1"),
        )?;
        ensure(cert.q == plan.stages()[m - 1].omega, || {
            format!("stage {m}: condition 2")
        })?;
        ensure(cert.tail_valuation.gt(&rat(5, 4)), || {
            format!("stage {m}: condition 3")
        })?;
    }
    Ok("12 stages and 12 certificates verified".into())
}

fn criterion_4() -> Outcome {
    let plan = build_plan(&Instance::default(), 12, int(26)).map_err(|e| e.to_string())?;
    let map = plan.substitution().map_err(|e| e.to_string())?;
    let r3 = Profile::tate(3, 3);
    let x1 = TateElement::variable(&r3, 1);
    let v = map.apply(&x1, &ExtRat::Infinite).unwrap().valuation();
    ensure(v == ExtRat::Finite(rat(1, 2)), || format!("v(f(x1)) = {v}"))?;
    ensure(!value_in_ground_group(v.finite().unwrap(), 3), || {
        "1/2 reported in Z[1/3]".into()
    })?;
    let rel = x1
        .mul(&TateElement::variable(&r3, 2))
        .unwrap()
        .sub(
            &TateElement::monomial(&r3, 1, vec![plan.v_c().clone(), int(0), int(0), int(0)])
                .unwrap(),
        )
        .unwrap();
    let img = map.apply(&rel, &ExtRat::Infinite).unwrap();
    ensure(img.is_exact_zero(), || format!("f(x1 x2 - c) = {img}"))?;
    Ok("v(f(x1)) = 1/2 outside Z[1/3]; f(x1 x2 - c) = 0".into())
}

fn criterion_5() -> Outcome {
    let plan = build_plan(&Instance::default(), 12, int(26)).map_err(|e| e.to_string())?;
    let vs = rat(1, 4);
    let check = |label: &str, tr: &hahn_core::division::DivisionTrace| -> Result<(), String> {
        for s in &tr.steps {
            ensure(
                s.residual_valuation.ge(&(int(s.m as i64 + 1) + &vs)),
                || format!("{label} step {}: v(beta) = {}", s.m, s.residual_valuation),
            )?;
            ensure(s.increment_valuation.ge(&int(s.m as i64)), || {
                format!(
                    "{label} step {}: v(a_(m+1) - a_m) = {}",
                    s.m, s.increment_valuation
                )
            })?;
        }
        ensure(
            tr.final_residual_valuation
                .ge(&(int(DIVISION_STEPS as i64) + &vs)),
            || format!("{label}: final residual {}", tr.final_residual_valuation),
        )
    };
    for seed in 0..DIVISION_TARGETS {
        let mut rng = random::rng(0xd1 + seed);
        let beta = random::target(&mut rng, plan.residue().profile(), &vs, DIVISION_TERMS, 10);
        let tr = run_division(&beta, &plan, DIVISION_STEPS)
            .map_err(|e| format!("target {seed}: {e}"))?;
        check(&format!("target {seed}"), &tr)?;
        let doc = TraceDoc::new(&beta.to_string(), 0, &tr);
        cmd_verify(&to_json(&doc)).map_err(|e| format!("target {seed}: {e}"))?;
    }
    let r3 = Profile::tate(3, 3);
    let mut round_trips = 0;
    for seed in 0..5u64 {
        let mut local = plan.clone();
        let mut rng = random::rng(0x77 + seed);
        let mut a = TateElement::new(TruncatedSeries::exact_zero(&r3)).unwrap();
        for _ in 0..3 {
            let k = rng.gen_range(0..12);
            local
                .ensure_image_precision(k, &rat(33, 4))
                .map_err(|e| e.to_string())?;
            let cert = local.certify(k).map_err(|e| e.to_string())?;
            let shift = TateElement::monomial(
                &r3,
                rng.gen_range(1..3),
                vec![int(rng.gen_range(0..3)), int(0), int(0), int(0)],
            )
            .unwrap();
            a = a.add(&shift.mul(&cert.preimage).unwrap()).unwrap();
        }
        let beta = local
            .substitution()
            .unwrap()
            .apply(&a, &int(12).into())
            .map_err(|e| e.to_string())?;
        let (_, tr) =
            divide(&beta, &local, DIVISION_STEPS).map_err(|e| format!("round trip {seed}: {e}"))?;
        check(&format!("round trip {seed}"), &tr)?;
        round_trips += 1;
    }
    Ok(format!(
        "{DIVISION_TARGETS} random targets and {round_trips} round trips certified"
    ))
}

fn criterion_6() -> Outcome {
    let mut checked = 0;
    for seed in 0..TYPE_II_ELEMENTS {
        let mut rng = random::rng(0x600 + seed);
        let f = loop {
            let f = random::tate(&mut rng, 3, 1, 8, 12);
            if !f.series().is_empty() {
                break TateElement::new(f.into_series().with_precision(ExtRat::Infinite)).unwrap();
            }
        };
        for _ in 0..TYPE_II_RADII {
            let r = Rat::from_integer(rng.gen_range(1..=27).into())
                * p_pow(3, -(rng.gen_range(0..=2) as i64));
            let rho = [r.clone()];
            let b =
                type_ii_lower_bound(&f, &rho).map_err(|e| format!("seed {seed}, rho {r}: {e}"))?;
            let s = disk_seminorm(&f, &rho).map_err(|e| e.to_string())?;
            ensure(s <= ExtRat::Finite(b.bound.clone()), || {
                format!("seed {seed}: seminorm {s} above bound {}", b.bound)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (element, radius) pairs"))
}

/// Changes one recorded value of a random stage; returns the stage number.
fn mutate_plan(doc: &mut PlanDoc, rng: &mut impl Rng) -> usize {
    let i = rng.gen_range(0..doc.stages.len());
    let s = &mut doc.stages[i];
    match rng.gen_range(0..3) {
        0 => {
            s.b = if s.b == 0 || rng.gen_bool(0.5) {
                s.b + 1
            } else {
                s.b - 1
            }
        }
        1 => {
            let delta = Rat::new(rng.gen_range(1..5i64).into(), 9.into());
            s.v_e = (hahn_core::valgroup::parse_rat(&s.v_e).unwrap() + delta).to_string();
        }
        _ => {
            let delta = Rat::new(rng.gen_range(1..5i64).into(), 3.into());
            s.v_eps = (hahn_core::valgroup::parse_rat(&s.v_eps).unwrap() + delta).to_string();
        }
    }
    i + 1
}

fn mutate_trace(doc: &mut TraceDoc, rng: &mut impl Rng) -> usize {
    let m = rng.gen_range(0..doc.records.len());
    let r = &mut doc.records[m];
    let bump = |s: &str| {
        (hahn_core::valgroup::parse_rat(s).unwrap() + Rat::new(1.into(), 3.into())).to_string()
    };
    if rng.gen_bool(0.5) {
        r.bound = bump(&r.bound);
    } else {
        r.residual_valuation = bump(&r.residual_valuation);
    }
    m
}

fn criterion_7() -> Outcome {
    let cfg = InstanceConfig::default();
    let a = cmd_build(&cfg).map_err(|e| e.to_string())?;
    let b = cmd_build(&cfg).map_err(|e| e.to_string())?;
    ensure(a == b, || "two builds differ".into())?;
    ensure(a.transcript == GOLDEN_PLAN, || {
        "build differs from the golden transcript".into()
    })?;
    for (name, text) in [
        ("plan", GOLDEN_PLAN),
        ("certificate", GOLDEN_CERT),
        ("trace", GOLDEN_TRACE),
    ] {
        cmd_verify(text).map_err(|e| format!("golden {name}: {e}"))?;
    }
    let Ok(Document::Plan(plan)) = parse_document(GOLDEN_PLAN) else {
        return Err("golden plan unreadable".into());
    };
    let Ok(Document::Trace(trace)) = parse_document(GOLDEN_TRACE) else {
        return Err("golden trace unreadable".into());
    };
    let mut rng = random::rng(0x7777);
    for i in 0..MUTATIONS {
        let mut bad = plan.clone();
        let m = mutate_plan(&mut bad, &mut rng);
        match cmd_verify(&to_json(&bad)) {
            Err(Error::Verification { location, .. }) if location == format!("stage {m}") => {}
            other => return Err(format!("plan mutation {i} at stage {m}: {other:?}")),
        }
        let mut bad = trace.clone();
        let m = mutate_trace(&mut bad, &mut rng);
        match cmd_verify(&to_json(&bad)) {
            Err(Error::Verification { location, .. }) if location == format!("step {m}") => {}
            other => return Err(format!("trace mutation {i} at step {m}: {other:?}")),
        }
    }
    ensure(matches!(cmd_verify(""), Err(Error::Format(_))), || {
        "empty file accepted".into()
    })?;
    Ok(format!(
        "deterministic; goldens pass; {} mutations located",
        2 * MUTATIONS
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            1,
            "series engine laws",
            Duration::from_secs(10),
            criterion_1,
        ),
        (
            2,
            "frobenius and perfectness",
            Duration::from_secs(5),
            criterion_2,
        ),
        (
            3,
            "counterexample construction",
            Duration::from_secs(60),
            criterion_3,
        ),
        (
            4,
            "non-evaluation witness",
            Duration::from_secs(1),
            criterion_4,
        ),
        (
            5,
            "division contraction",
            Duration::from_secs(120),
            criterion_5,
        ),
        (
            6,
            "type II epsilon bound",
            Duration::from_secs(10),
            criterion_6,
        ),
        (
            7,
            "determinism and verification",
            Duration::from_secs(30),
            criterion_7,
        ),
    ];
    let mut failed = 0;
    for (n, name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let verdict = match &outcome {
            Ok(_) if elapsed > limit => Err(format!(
                "took {:.2}s, limit {}s",
                elapsed.as_secs_f64(),
                limit.as_secs()
            )),
            Ok(detail) => Ok(detail.clone()),
            Err(e) => Err(e.clone()),
        };
        match verdict {
            Ok(detail) => println!(
                "criterion {n} [PRIMARY] {name}: PASS ({:.2}s / {}s) {detail}",
                elapsed.as_secs_f64(),
                limit.as_secs()
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "criterion {n} [PRIMARY] {name}: FAIL ({:.2}s / {}s) {why}",
                    elapsed.as_secs_f64(),
                    limit.as_secs()
                );
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} of 7 criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 7 criteria passed");
}
