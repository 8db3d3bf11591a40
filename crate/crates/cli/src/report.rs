//! Report documents and their JSON, CSV and text renderings.
//!
//! Every command builds a [`Report`]: a header shared by all commands and a
//! command-specific body. JSON is the full-fidelity form; CSV flattens the
//! body into one row per item; text is for reading.

use std::collections::BTreeMap;

use matchaudit::manipulation::ManipulationWitness;
use matchaudit::mechanisms::DaTrace;
use matchaudit::{Allocation, ContractSet, DoctorOutcome, DoctorPreference, Market};
use serde::Serialize;

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub market_digest: Option<String>,
    pub result: Body,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Body {
    Validate(ValidateBody),
    Da(DaBody),
    Stable(StableBody),
    Quantile(QuantileBody),
    Audit(AuditBody),
    Matrix(MatrixBody),
    Reproduce(ReproduceBody),
}

#[derive(Debug, Serialize)]
pub struct ValidateBody {
    pub ok: bool,
    pub checks: Vec<AxiomCheck>,
}

#[derive(Debug, Serialize)]
pub struct AxiomCheck {
    pub hospital: String,
    pub axiom: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct DaBody {
    pub profile: String,
    pub side: String,
    pub allocation: Vec<String>,
    pub outcomes: BTreeMap<String, Option<String>>,
    pub rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<RoundRow>>,
}

#[derive(Debug, Serialize)]
pub struct RoundRow {
    pub round: usize,
    pub available: Vec<String>,
    pub offers: Vec<String>,
    pub accepted: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct StableBody {
    pub profile: String,
    pub count: usize,
    pub allocations: Vec<Vec<String>>,
    pub doctor_optimal: Vec<String>,
    pub hospital_optimal: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct QuantileBody {
    pub profile: String,
    pub q: String,
    pub stable_count: usize,
    pub position: usize,
    pub allocation: Vec<String>,
    pub outcomes: BTreeMap<String, Option<String>>,
}

#[derive(Debug, Serialize)]
pub struct AuditBody {
    pub rule: String,
    pub verdict: String,
    pub profiles_total: u64,
    pub profiles_evaluated: u64,
    pub partial_coverage: bool,
    pub manipulations: u64,
    pub obvious_manipulations: u64,
    pub witnesses: Vec<WitnessRow>,
}

#[derive(Debug, Serialize)]
pub struct WitnessRow {
    pub doctor: String,
    pub truth: Vec<String>,
    pub misreport: Vec<String>,
    pub others: BTreeMap<String, Vec<String>>,
    pub truthful_outcome: Option<String>,
    pub manipulated_outcome: Option<String>,
    pub obvious: String,
    pub truthful_options: Vec<Option<String>>,
    pub misreport_options: Vec<Option<String>>,
}

#[derive(Debug, Serialize)]
pub struct MatrixBody {
    pub rows: Vec<MatrixRow>,
}

#[derive(Debug, Serialize)]
pub struct MatrixRow {
    pub rule: String,
    pub verdict: String,
    pub manipulations: u64,
    pub obvious_manipulations: u64,
}

#[derive(Debug, Serialize)]
pub struct ReproduceBody {
    pub scenario: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub audit: AuditBody,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
}

pub fn set_names(market: &Market, set: ContractSet) -> Vec<String> {
    set.iter().map(|c| market.contract_label(c).to_owned()).collect()
}

pub fn allocation_names(market: &Market, a: Allocation) -> Vec<String> {
    set_names(market, a.contracts())
}

pub fn outcome_name(market: &Market, o: DoctorOutcome) -> Option<String> {
    o.contract().map(|c| market.contract_label(c).to_owned())
}

pub fn outcomes(market: &Market, a: Allocation) -> BTreeMap<String, Option<String>> {
    market
        .doctors()
        .map(|d| (market.doctor_name(d).to_owned(), outcome_name(market, a.outcome_of(market, d))))
        .collect()
}

pub fn pref_names(market: &Market, p: &DoctorPreference) -> Vec<String> {
    p.acceptable().iter().map(|&c| market.contract_label(c).to_owned()).collect()
}

pub fn trace_rows(market: &Market, trace: &DaTrace) -> Vec<RoundRow> {
    trace
        .rounds
        .iter()
        .enumerate()
        .map(|(i, r)| RoundRow {
            round: i + 1,
            available: set_names(market, r.available),
            offers: set_names(market, r.offers),
            accepted: set_names(market, r.accepted),
        })
        .collect()
}

pub fn witness_row(market: &Market, w: &ManipulationWitness) -> WitnessRow {
    let others = market
        .doctors()
        .filter(|&d| d != w.doctor)
        .zip(&w.subprofile)
        .map(|(d, p)| (market.doctor_name(d).to_owned(), pref_names(market, p)))
        .collect();
    let (truthful_options, misreport_options) = match &w.option_sets {
        Some(sets) => (
            sets.truthful.iter().map(|&o| outcome_name(market, o)).collect(),
            sets.misreport.iter().map(|&o| outcome_name(market, o)).collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    WitnessRow {
        doctor: market.doctor_name(w.doctor).to_owned(),
        truth: pref_names(market, &w.truth),
        misreport: pref_names(market, &w.misreport),
        others,
        truthful_outcome: outcome_name(market, w.truthful_outcome),
        manipulated_outcome: outcome_name(market, w.manipulated_outcome),
        obvious: w.obvious.map_or("unclassified", |o| o.as_str()).to_owned(),
        truthful_options,
        misreport_options,
    }
}

// ---- rendering -------------------------------------------------------------

fn braces(items: &[String]) -> String {
    format!("{{{}}}", items.join(", "))
}

fn list_pref(items: &[String]) -> String {
    let mut parts: Vec<&str> = items.iter().map(String::as_str).collect();
    parts.push("∅");
    parts.join(",")
}

fn outcome_text(o: &Option<String>) -> String {
    o.clone().unwrap_or_else(|| "∅".to_owned())
}

fn options_text(items: &[Option<String>]) -> String {
    let names: Vec<String> = items.iter().map(outcome_text).collect();
    braces(&names)
}

fn others_text(others: &BTreeMap<String, Vec<String>>) -> String {
    others
        .iter()
        .map(|(d, p)| format!("{d}: {}", list_pref(p)))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut out = serde_json::to_string_pretty(report).expect("reports serialise");
            out.push('\n');
            out
        }
        Format::Csv => render_csv(report),
        Format::Text => render_text(report),
    }
}

fn render_csv(report: &Report) -> String {
    let (header, rows): (Vec<&str>, Vec<Vec<String>>) = match &report.result {
        Body::Validate(b) => (
            vec!["hospital", "axiom", "holds", "witness"],
            b.checks
                .iter()
                .map(|c| {
                    vec![
                        c.hospital.clone(),
                        c.axiom.clone(),
                        c.holds.to_string(),
                        c.witness.clone().unwrap_or_default(),
                    ]
                })
                .collect(),
        ),
        Body::Da(b) => match &b.trace {
            Some(trace) => (
                vec!["round", "available", "offers", "accepted"],
                trace
                    .iter()
                    .map(|r| {
                        vec![
                            r.round.to_string(),
                            braces(&r.available),
                            braces(&r.offers),
                            braces(&r.accepted),
                        ]
                    })
                    .collect(),
            ),
            None => (
                vec!["doctor", "outcome"],
                b.outcomes.iter().map(|(d, o)| vec![d.clone(), outcome_text(o)]).collect(),
            ),
        },
        Body::Stable(b) => (
            vec!["index", "allocation"],
            b.allocations
                .iter()
                .enumerate()
                .map(|(i, a)| vec![(i + 1).to_string(), braces(a)])
                .collect(),
        ),
        Body::Quantile(b) => (
            vec!["doctor", "outcome"],
            b.outcomes.iter().map(|(d, o)| vec![d.clone(), outcome_text(o)]).collect(),
        ),
        Body::Audit(b) => witness_csv(&b.rule, &b.witnesses),
        Body::Matrix(b) => (
            vec!["rule", "verdict", "manipulations", "obvious_manipulations"],
            b.rows
                .iter()
                .map(|r| {
                    vec![
                        r.rule.clone(),
                        r.verdict.clone(),
                        r.manipulations.to_string(),
                        r.obvious_manipulations.to_string(),
                    ]
                })
                .collect(),
        ),
        Body::Reproduce(b) => (
            vec!["check", "expected", "observed", "passed"],
            b.checks
                .iter()
                .map(|c| vec![c.name.clone(), c.expected.clone(), c.observed.clone(), c.passed.to_string()])
                .collect(),
        ),
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&header).expect("in-memory csv");
    for row in rows {
        writer.write_record(&row).expect("in-memory csv");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn witness_csv(rule: &str, witnesses: &[WitnessRow]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    (
        vec![
            "rule",
            "doctor",
            "truth",
            "misreport",
            "others",
            "truthful_outcome",
            "manipulated_outcome",
            "obvious",
            "truthful_options",
            "misreport_options",
        ],
        witnesses
            .iter()
            .map(|w| {
                vec![
                    rule.to_owned(),
                    w.doctor.clone(),
                    list_pref(&w.truth),
                    list_pref(&w.misreport),
                    others_text(&w.others),
                    outcome_text(&w.truthful_outcome),
                    outcome_text(&w.manipulated_outcome),
                    w.obvious.clone(),
                    options_text(&w.truthful_options),
                    options_text(&w.misreport_options),
                ]
            })
            .collect(),
    )
}

fn audit_text(out: &mut Vec<String>, b: &AuditBody) {
    out.push(format!("rule: {}", b.rule));
    out.push(format!("verdict: {}", b.verdict));
    out.push(format!(
        "profiles: {} of {} evaluated{}",
        b.profiles_evaluated,
        b.profiles_total,
        if b.partial_coverage { " (partial coverage)" } else { "" }
    ));
    out.push(format!(
        "manipulations: {} ({} obvious)",
        b.manipulations, b.obvious_manipulations
    ));
    for w in &b.witnesses {
        out.push(format!(
            "witness [{}] {}: truth {} -> misreport {} | others {} | {} -> {} | options {} vs {}",
            w.obvious,
            w.doctor,
            list_pref(&w.truth),
            list_pref(&w.misreport),
            others_text(&w.others),
            outcome_text(&w.truthful_outcome),
            outcome_text(&w.manipulated_outcome),
            options_text(&w.truthful_options),
            options_text(&w.misreport_options),
        ));
    }
}

fn render_text(report: &Report) -> String {
    let mut out = vec![format!("command: {}", report.command)];
    if let Some(digest) = &report.market_digest {
        out.push(format!("market: {digest}"));
    }
    let outcome_lines = |out: &mut Vec<String>, outcomes: &BTreeMap<String, Option<String>>| {
        for (d, o) in outcomes {
            out.push(format!("  {d}: {}", outcome_text(o)));
        }
    };
    match &report.result {
        Body::Validate(b) => {
            out.push(format!("valid: {}", b.ok));
            for c in &b.checks {
                let status = if c.holds { "holds" } else { "fails" };
                match &c.witness {
                    Some(w) => out.push(format!("{} {}: {status} ({w})", c.hospital, c.axiom)),
                    None => out.push(format!("{} {}: {status}", c.hospital, c.axiom)),
                }
            }
        }
        Body::Da(b) => {
            out.push(format!("profile: {}", b.profile));
            out.push(format!("proposing side: {}", b.side));
            out.push(format!("allocation: {}", braces(&b.allocation)));
            out.push(format!("rounds: {}", b.rounds));
            outcome_lines(&mut out, &b.outcomes);
            for r in b.trace.iter().flatten() {
                out.push(format!(
                    "round {}: available {} offers {} accepted {}",
                    r.round,
                    braces(&r.available),
                    braces(&r.offers),
                    braces(&r.accepted)
                ));
            }
        }
        Body::Stable(b) => {
            out.push(format!("profile: {}", b.profile));
            out.push(format!("stable allocations: {}", b.count));
            for a in &b.allocations {
                out.push(format!("  {}", braces(a)));
            }
            out.push(format!("doctor-optimal: {}", braces(&b.doctor_optimal)));
            out.push(format!("hospital-optimal: {}", braces(&b.hospital_optimal)));
        }
        Body::Quantile(b) => {
            out.push(format!("profile: {}", b.profile));
            out.push(format!("q: {} (position {} of {})", b.q, b.position, b.stable_count));
            out.push(format!("allocation: {}", braces(&b.allocation)));
            outcome_lines(&mut out, &b.outcomes);
        }
        Body::Audit(b) => audit_text(&mut out, b),
        Body::Matrix(b) => {
            for r in &b.rows {
                out.push(format!(
                    "{}: {} ({} manipulations, {} obvious)",
                    r.rule, r.verdict, r.manipulations, r.obvious_manipulations
                ));
            }
        }
        Body::Reproduce(b) => {
            out.push(format!("scenario: {}", b.scenario));
            out.push(format!("passed: {}", b.passed));
            for c in &b.checks {
                let mark = if c.passed { "ok" } else { "MISMATCH" };
                out.push(format!("{mark} {}: expected {} observed {}", c.name, c.expected, c.observed));
            }
            audit_text(&mut out, &b.audit);
        }
    }
    let mut text = out.join("\n");
    text.push('\n');
    text
}
