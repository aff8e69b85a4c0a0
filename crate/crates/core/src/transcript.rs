//! JSON documents for plans, adapted certificates, and division traces.
//! Rationals are written as strings (`"-4/3"`), series in their text form.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::builder::{AdaptedCertificate, AlphaPlan, Instance, Stage};
use crate::division::DivisionTrace;
use crate::error::{Error, Result};
use crate::valgroup::{fmt_rat, Rat};

pub const PLAN_FORMAT: &str = "hahn-plan/1";
pub const CERTIFICATE_FORMAT: &str = "hahn-adapted/1";
pub const TRACE_FORMAT: &str = "hahn-trace/1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub p: u32,
    pub gamma_x: String,
    pub v_s: String,
}

impl From<&Instance> for InstanceDoc {
    fn from(i: &Instance) -> Self {
        InstanceDoc {
            p: i.p,
            gamma_x: fmt_rat(&i.gamma_x),
            v_s: fmt_rat(&i.v_s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageDoc {
    pub m: usize,
    pub omega: String,
    pub origin: String,
    pub v_e: String,
    pub b: u32,
    pub v_eps: String,
}

impl From<&Stage> for StageDoc {
    fn from(s: &Stage) -> Self {
        StageDoc {
            m: s.m,
            omega: fmt_rat(&s.omega),
            origin: s.origin.to_string(),
            v_e: fmt_rat(&s.v_e),
            b: s.b,
            v_eps: fmt_rat(&s.v_eps),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryDoc {
    pub stages_checked: usize,
    pub certificates_checked: usize,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDoc {
    pub format: String,
    pub instance: InstanceDoc,
    pub c_valuation: String,
    pub work_prec: String,
    pub stages: Vec<StageDoc>,
    pub tail_bound: String,
    pub alpha_sha256: String,
    pub verification: SummaryDoc,
}

impl PlanDoc {
    pub fn new(plan: &AlphaPlan, certificates_checked: usize) -> Self {
        PlanDoc {
            format: PLAN_FORMAT.into(),
            instance: plan.instance().into(),
            c_valuation: fmt_rat(plan.v_c()),
            work_prec: fmt_rat(plan.work_prec()),
            stages: plan.stages().iter().map(StageDoc::from).collect(),
            tail_bound: fmt_rat(&plan.tail_bound()),
            alpha_sha256: sha256_hex(plan.alpha().to_string().as_bytes()),
            verification: SummaryDoc {
                stages_checked: plan.len(),
                certificates_checked,
                status: "pass".into(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadingDoc {
    pub t: String,
    pub q: String,
    pub coeff: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksDoc {
    pub valuation: String,
    pub upper: String,
    pub tail_valuation: String,
    pub tail_bound: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDoc {
    pub format: String,
    pub instance: InstanceDoc,
    pub c_valuation: String,
    pub stage: usize,
    pub q: String,
    pub stages: Vec<StageDoc>,
    pub preimage: String,
    pub image: String,
    pub leading: LeadingDoc,
    pub checks: ChecksDoc,
}

impl CertificateDoc {
    /// `plan` must be the (possibly extended) plan the certificate was built on.
    pub fn new(plan: &AlphaPlan, cert: &AdaptedCertificate) -> Self {
        let one_s = Rat::from_integer(1.into()) + &cert.v_s;
        CertificateDoc {
            format: CERTIFICATE_FORMAT.into(),
            instance: plan.instance().into(),
            c_valuation: fmt_rat(plan.v_c()),
            stage: cert.stage,
            q: fmt_rat(&cert.q),
            stages: plan.stages()[..cert.stages_used]
                .iter()
                .map(StageDoc::from)
                .collect(),
            preimage: cert.preimage.series().to_string(),
            image: cert.image.to_string(),
            leading: LeadingDoc {
                t: fmt_rat(&cert.leading_t),
                q: fmt_rat(&cert.q),
                coeff: cert.leading_coeff,
            },
            checks: ChecksDoc {
                valuation: fmt_rat(&cert.valuation),
                upper: fmt_rat(&cert.v_s),
                tail_valuation: cert.tail_valuation.to_string(),
                tail_bound: fmt_rat(&one_s),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDoc {
    pub m: usize,
    pub slice: String,
    pub e: String,
    pub residual: String,
    pub bound: String,
    pub residual_valuation: String,
    pub increment_valuation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceDoc {
    pub format: String,
    pub instance: InstanceDoc,
    pub c_valuation: String,
    pub work_prec: String,
    pub steps: usize,
    pub beta_sha256: String,
    pub beta: String,
    pub shift: u32,
    pub target: String,
    pub cap: String,
    pub stages: Vec<StageDoc>,
    pub records: Vec<StepDoc>,
    pub final_residual_valuation: String,
}

impl TraceDoc {
    /// `beta_text` is the target exactly as supplied, before normalization.
    pub fn new(beta_text: &str, shift: u32, trace: &DivisionTrace) -> Self {
        let plan = &trace.plan;
        TraceDoc {
            format: TRACE_FORMAT.into(),
            instance: plan.instance().into(),
            c_valuation: fmt_rat(plan.v_c()),
            work_prec: fmt_rat(plan.work_prec()),
            steps: trace.steps.len(),
            beta_sha256: sha256_hex(beta_text.as_bytes()),
            beta: beta_text.to_string(),
            shift,
            target: trace.target.to_string(),
            cap: fmt_rat(&trace.cap),
            stages: plan.stages().iter().map(StageDoc::from).collect(),
            records: trace
                .steps
                .iter()
                .map(|s| StepDoc {
                    m: s.m,
                    slice: s.slice.to_string(),
                    e: s.e.series().to_string(),
                    residual: s.residual.to_string(),
                    bound: fmt_rat(&s.bound),
                    residual_valuation: s.residual_valuation.to_string(),
                    increment_valuation: s.increment_valuation.to_string(),
                })
                .collect(),
            final_residual_valuation: trace.final_residual_valuation.to_string(),
        }
    }
}

/// Any of the three documents.
#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Plan(PlanDoc),
    Certificate(CertificateDoc),
    Trace(TraceDoc),
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

/// Dispatches on the `format` field.
pub fn parse_document(text: &str) -> Result<Document> {
    if text.trim().is_empty() {
        return Err(Error::Format("empty document".into()));
    }
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("invalid JSON: {e}")))?;
    let format = value
        .get("format")
        .and_then(|f| f.as_str())
        .ok_or_else(|| Error::Format("missing `format` field".into()))?
        .to_string();
    let bad = |e: serde_json::Error| Error::Format(format!("malformed {format} document: {e}"));
    match format.as_str() {
        PLAN_FORMAT => Ok(Document::Plan(
            serde_json::from_value(value.clone()).map_err(bad)?,
        )),
        CERTIFICATE_FORMAT => Ok(Document::Certificate(
            serde_json::from_value(value.clone()).map_err(bad)?,
        )),
        TRACE_FORMAT => Ok(Document::Trace(
            serde_json::from_value(value.clone()).map_err(bad)?,
        )),
        other => Err(Error::Format(format!("unknown format `{other}`"))),
    }
}
