//! The operations behind the `hahn` subcommands. Each returns text to be
//! written by the caller, so results are testable without a process.

use crate::builder::{build_adapted, build_adapted_for, build_plan, AlphaPlan};
use crate::config::InstanceConfig;
use crate::division::divide;
use crate::error::{Error, Result};
use crate::fields::{classify_disk_point, DiskPoint, PointType, Radius};
use crate::random;
use crate::series::text::parse_series;
use crate::transcript::{to_json, CertificateDoc, PlanDoc, TraceDoc};
use crate::valgroup::{parse_rat, ExtRat};
use crate::verify::{verify_certificate, verify_document, verify_plan, VerifyReport};

#[derive(Clone, Debug, PartialEq)]
pub struct BuildOutput {
    /// Plan transcript (JSON).
    pub transcript: String,
    /// `alpha` in series text form.
    pub alpha: String,
}

fn plan_for(config: &InstanceConfig) -> Result<AlphaPlan> {
    build_plan(&config.instance, config.stages, config.work_prec.clone())
}

/// Builds the plan, certifies every stage, and checks the transcript with
/// the independent verifier before returning it.
pub fn cmd_build(config: &InstanceConfig) -> Result<BuildOutput> {
    let plan = plan_for(config)?;
    for m in 1..=plan.len() {
        build_adapted(&plan, m)?;
    }
    let doc = PlanDoc::new(&plan, plan.len());
    verify_plan(&doc)?;
    Ok(BuildOutput {
        transcript: to_json(&doc),
        alpha: plan.alpha().to_string(),
    })
}

/// Certificate for exponent `q`, extending the plan if `q` is not yet a stage.
pub fn cmd_adapted(config: &InstanceConfig, q: &str) -> Result<String> {
    let q = parse_rat(q)?;
    if !crate::valgroup::is_in_zp(&q, config.instance.p) {
        return Err(Error::Parse(format!(
            "q = {q} is not in Z[1/{}]",
            config.instance.p
        )));
    }
    let mut plan = plan_for(config)?;
    let cert = build_adapted_for(&mut plan, &q)?;
    let doc = CertificateDoc::new(&plan, &cert);
    verify_certificate(&doc)?;
    Ok(to_json(&doc))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivideOutput {
    pub trace: String,
    pub shift: u32,
    pub final_residual_valuation: ExtRat,
}

/// Divides the target in `beta_text` for `steps` steps.
pub fn cmd_divide(config: &InstanceConfig, beta_text: &str, steps: usize) -> Result<DivideOutput> {
    let plan = plan_for(config)?;
    let beta = parse_series(beta_text, plan.residue().profile())?;
    let (shift, trace) = divide(&beta, &plan, steps)?;
    let doc = TraceDoc::new(beta_text, shift, &trace);
    Ok(DivideOutput {
        trace: to_json(&doc),
        shift,
        final_residual_valuation: trace.final_residual_valuation,
    })
}

/// Type of the disk around the origin with the given radius values
/// (`point` or `inf` for radius zero).
pub fn cmd_classify(config: &InstanceConfig, radii: &[String]) -> Result<PointType> {
    if radii.is_empty() {
        return Err(Error::Parse("at least one radius is required".into()));
    }
    let radii = radii
        .iter()
        .map(|r| Radius::parse(r))
        .collect::<Result<Vec<_>>>()?;
    let point = DiskPoint {
        center: Vec::new(),
        radii,
    };
    Ok(classify_disk_point(&point, config.instance.p))
}

pub fn cmd_verify(text: &str) -> Result<VerifyReport> {
    verify_document(text)
}

/// A quick end-to-end pass: build and verify, then a few seeded divisions
/// whose traces go through the verifier.
pub fn cmd_selftest(config: &InstanceConfig) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    let built = cmd_build(config)?;
    let report = verify_document(&built.transcript)?;
    lines.push(format!("build: {} stages verified", report.checks));
    let plan = plan_for(config)?;
    let steps = config.stages.min(6);
    let precision = steps as i64 + 2;
    let mut rng = random::rng(config.seed);
    for trial in 0..5 {
        let beta = random::target(
            &mut rng,
            plan.residue().profile(),
            &config.instance.v_s,
            6,
            precision,
        );
        let text = beta.to_string();
        let out = cmd_divide(config, &text, steps)?;
        verify_document(&out.trace)?;
        lines.push(format!(
            "divide #{trial}: {steps} steps, residual valuation {}",
            out.final_residual_valuation
        ));
    }
    Ok(lines)
}
