//! The `matchaudit` command line.
//!
//! Exit codes: 0 success, 1 `validate` found a violated axiom, 2 usage error,
//! 3 input error, 4 the enumeration budget was exceeded, 5 a `reproduce`
//! scenario did not reach its expected conclusion.

pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use matchaudit::axioms::{check_lad, check_responsive, check_substitutable, Witness};
use matchaudit::fixtures;
use matchaudit::manipulation::{AuditReport, DEFAULT_BUDGET};
use matchaudit::mechanisms::{unanimous_doctor_best, unanimous_hospital_best};
use matchaudit::spec_file::{market_digest, parse_market, parse_market_str, MarketSpec, SpecError};
use matchaudit::{
    doctor_proposing_da, enumerate_stable, hospital_proposing_da, quantile_rule, AuditConfig, Auditor,
    AxiomViolation, DoctorOutcome, DoctorPreference, Error, Market, Quantile, Rule, Verdict,
};

use report::{
    allocation_names, outcome_name, outcomes, trace_rows, witness_row, AuditBody, AxiomCheck, Body, Check, DaBody,
    Format, MatrixBody, MatrixRow, QuantileBody, Report, ReproduceBody, StableBody, ValidateBody,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_GUARDRAIL: i32 = 4;
pub const EXIT_MISMATCH: i32 = 5;

/// Overrides the default enumeration budget when `--budget` is absent.
pub const BUDGET_ENV: &str = "MATCHAUDIT_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "matchaudit", version, about = "Stable matching with contracts and manipulation audits")]
pub struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value = "json")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check hospital rankings against substitutability, LAD or responsiveness.
    Validate {
        /// Market file, or `builtin:<name>`.
        market: String,
        /// Comma separated: subs, lad, resp:<quota>. Defaults to subs,lad.
        #[arg(long, value_delimiter = ',', value_parser = parse_axiom)]
        axioms: Vec<AxiomArg>,
    },
    /// Run deferred acceptance.
    Da {
        market: String,
        #[arg(long)]
        profile: String,
        #[arg(long, value_enum, default_value = "doctors")]
        side: SideArg,
        /// Include every round.
        #[arg(long)]
        trace: bool,
    },
    /// List every stable allocation.
    Stable {
        market: String,
        #[arg(long)]
        profile: String,
    },
    /// Apply the q-quantile stable rule.
    Quantile {
        market: String,
        #[arg(long)]
        profile: String,
        /// `num/den` in [0, 1].
        #[arg(long, value_parser = parse_quantile)]
        q: Quantile,
    },
    /// Search every profile for obvious manipulations by doctors.
    Audit {
        market: String,
        /// doctor-optimal, hospital-optimal or quantile:<num>/<den>.
        #[arg(long, value_parser = parse_rule)]
        rule: Rule,
        /// Maximum number of profiles to evaluate.
        #[arg(long)]
        budget: Option<u64>,
        /// Also report manipulations that are not obvious.
        #[arg(long)]
        all_witnesses: bool,
    },
    /// Audit the doctor-optimal, hospital-optimal and quantile rules side by side.
    Matrix {
        market: String,
        /// Quantiles to include (repeatable).
        #[arg(long, value_parser = parse_quantile, default_value = "1/2")]
        q: Vec<Quantile>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Rerun a bundled scenario and check its known conclusion.
    Reproduce {
        #[arg(value_enum)]
        scenario: Scenario,
        /// Number of contracts between d1 and h1 (theorem4 only).
        #[arg(long)]
        k: Option<usize>,
        /// Quantile with ⌈kq⌉ = 2 (theorem4 only).
        #[arg(long, value_parser = parse_quantile)]
        q: Option<Quantile>,
        #[arg(long)]
        budget: Option<u64>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AxiomArg {
    Substitutability,
    Lad,
    Responsive(usize),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Doctors,
    Hospitals,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Theorem2,
    Theorem4,
}

fn parse_axiom(s: &str) -> Result<AxiomArg, String> {
    match s {
        "subs" | "substitutability" => Ok(AxiomArg::Substitutability),
        "lad" => Ok(AxiomArg::Lad),
        _ => {
            let quota = s
                .strip_prefix("resp:")
                .or_else(|| s.strip_prefix("responsive:"))
                .ok_or_else(|| format!("unknown axiom `{s}` (expected subs, lad or resp:<quota>)"))?;
            quota
                .parse()
                .map(AxiomArg::Responsive)
                .map_err(|_| format!("quota `{quota}` is not a non-negative integer"))
        }
    }
}

fn parse_quantile(s: &str) -> Result<Quantile, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_rule(s: &str) -> Result<Rule, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failure mapped to its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn core(market: Option<&Market>, e: Error) -> Self {
        let code = match e {
            Error::Guardrail { .. } => EXIT_GUARDRAIL,
            _ => EXIT_INPUT,
        };
        let message = match (&e, market) {
            (Error::AxiomViolated(v), Some(m)) => format!(
                "hospital preferences violate a required axiom: {}",
                describe_violation(m, v)
            ),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::input(e.to_string())
    }
}

/// Parses arguments, runs the command and writes the report. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(&cli, stderr) {
        Ok((report, code)) => {
            let _ = stdout.write_all(report::render(&report, cli.format).as_bytes());
            code
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn load(source: &str) -> Result<MarketSpec, Failure> {
    match source.strip_prefix("builtin:") {
        Some("theorem2") => Ok(fixtures::theorem2_spec()),
        Some("theorem4_k3") => Ok(parse_market_str(fixtures::THEOREM4_K3_JSON)?),
        Some("no_contracts_2x2") => Ok(fixtures::no_contracts_2x2_spec()),
        Some(other) => Err(Failure::input(format!(
            "unknown builtin market `{other}` (expected theorem2, theorem4_k3 or no_contracts_2x2)"
        ))),
        None => Ok(parse_market(source)?),
    }
}

fn budget(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{BUDGET_ENV}=`{v}` is not a non-negative integer"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn header(command: &str, market: &Market, result: Body) -> Report {
    Report {
        command: command.to_owned(),
        market_digest: Some(market_digest(market)),
        result,
    }
}

fn execute(cli: &Cli, stderr: &mut dyn Write) -> Result<(Report, i32), Failure> {
    match &cli.command {
        Command::Validate { market, axioms } => {
            let spec = load(market)?;
            let body = validate(&spec.market, axioms);
            let code = if body.ok { EXIT_OK } else { EXIT_VIOLATIONS };
            Ok((header("validate", &spec.market, Body::Validate(body)), code))
        }
        Command::Da {
            market,
            profile,
            side,
            trace,
        } => {
            let spec = load(market)?;
            let m = &spec.market;
            let p = spec.profile(profile)?;
            let run = match side {
                SideArg::Doctors => doctor_proposing_da(m, p),
                SideArg::Hospitals => hospital_proposing_da(m, p),
            }
            .map_err(|e| Failure::core(Some(m), e))?;
            let body = DaBody {
                profile: profile.clone(),
                side: match side {
                    SideArg::Doctors => "doctors",
                    SideArg::Hospitals => "hospitals",
                }
                .to_owned(),
                allocation: allocation_names(m, run.output),
                outcomes: outcomes(m, run.output),
                rounds: run.round_count(),
                trace: trace.then(|| trace_rows(m, &run)),
            };
            Ok((header("da", m, Body::Da(body)), EXIT_OK))
        }
        Command::Stable { market, profile } => {
            let spec = load(market)?;
            let m = &spec.market;
            let p = spec.profile(profile)?;
            Rule::DoctorOptimal.check_market(m).map_err(|e| Failure::core(Some(m), e))?;
            let stable = enumerate_stable(m, p);
            let best = |a: Option<matchaudit::Allocation>| a.map(|a| allocation_names(m, a)).unwrap_or_default();
            let body = StableBody {
                profile: profile.clone(),
                count: stable.len(),
                allocations: stable.iter().map(|&a| allocation_names(m, a)).collect(),
                doctor_optimal: best(unanimous_doctor_best(m, p, &stable)),
                hospital_optimal: best(unanimous_hospital_best(m, &stable)),
            };
            Ok((header("stable", m, Body::Stable(body)), EXIT_OK))
        }
        Command::Quantile { market, profile, q } => {
            let spec = load(market)?;
            let m = &spec.market;
            let p = spec.profile(profile)?;
            let a = quantile_rule(m, p, *q).map_err(|e| Failure::core(Some(m), e))?;
            let stable_count = enumerate_stable(m, p).len();
            let body = QuantileBody {
                profile: profile.clone(),
                q: q.to_string(),
                stable_count,
                position: q.position(stable_count),
                allocation: allocation_names(m, a),
                outcomes: outcomes(m, a),
            };
            Ok((header("quantile", m, Body::Quantile(body)), EXIT_OK))
        }
        Command::Audit {
            market,
            rule,
            budget: b,
            all_witnesses,
        } => {
            let spec = load(market)?;
            let m = &spec.market;
            let config = AuditConfig {
                budget: budget(*b)?,
                all_witnesses: *all_witnesses,
                ..AuditConfig::default()
            };
            let started = Instant::now();
            let audit = Auditor::new(rule.clone(), m, config)
                .map_err(|e| Failure::core(Some(m), e))?
                .audit();
            let _ = writeln!(stderr, "audit took {} ms", started.elapsed().as_millis());
            Ok((header("audit", m, Body::Audit(audit_body(m, &audit))), EXIT_OK))
        }
        Command::Matrix { market, q, budget: b } => {
            let spec = load(market)?;
            let m = &spec.market;
            let config = AuditConfig {
                budget: budget(*b)?,
                ..AuditConfig::default()
            };
            let mut rules = vec![Rule::DoctorOptimal, Rule::HospitalOptimal];
            rules.extend(q.iter().map(|&q| Rule::Quantile(q)));
            let mut rows = Vec::new();
            for rule in rules {
                let audit = Auditor::new(rule.clone(), m, config)
                    .map_err(|e| Failure::core(Some(m), e))?
                    .audit();
                rows.push(MatrixRow {
                    rule: rule.to_string(),
                    verdict: audit.verdict.as_str().to_owned(),
                    manipulations: audit.stats.manipulations,
                    obvious_manipulations: audit.stats.obvious_manipulations,
                });
            }
            Ok((header("matrix", m, Body::Matrix(MatrixBody { rows })), EXIT_OK))
        }
        Command::Reproduce {
            scenario,
            k,
            q,
            budget: b,
        } => {
            let budget = budget(*b)?;
            let (market, body) = match scenario {
                Scenario::Theorem2 => {
                    if k.is_some() || q.is_some() {
                        return Err(Failure::usage("--k and --q only apply to theorem4"));
                    }
                    reproduce_theorem2(budget)?
                }
                Scenario::Theorem4 => {
                    let k = k.unwrap_or(3);
                    let q = q.unwrap_or(Quantile::new(1, 2).expect("1/2 is a quantile"));
                    reproduce_theorem4(k, q, budget)?
                }
            };
            let code = if body.passed { EXIT_OK } else { EXIT_MISMATCH };
            Ok((header("reproduce", &market, Body::Reproduce(body)), code))
        }
    }
}

fn describe_violation(m: &Market, v: &AxiomViolation) -> String {
    let set = |s| m.format_set(s);
    let one = |c: Option<matchaudit::ContractId>| c.map_or("∅".to_owned(), |c| m.contract_label(c).to_owned());
    let hospital = m.hospital_name(v.hospital);
    let detail = match &v.witness {
        Witness::Nested {
            smaller,
            larger,
            contract: Some(x),
        } => format!(
            "{} is chosen from {} but not from {}",
            m.contract_label(*x),
            set(*larger),
            set(*smaller)
        ),
        Witness::Nested { smaller, larger, .. } => format!(
            "C({}) = {} is larger than C({}) = {}",
            set(*smaller),
            set(m.hospital_pref(v.hospital).choose(*smaller)),
            set(*larger),
            set(m.hospital_pref(v.hospital).choose(*larger))
        ),
        Witness::OverQuota { set: s } => format!("{} exceeds the quota but is ranked above {{}}", set(*s)),
        Witness::Pairwise { base, first, second } => format!(
            "adding {} rather than {} to {} reverses the ranking of the singletons",
            one(*first),
            one(*second),
            set(*base)
        ),
    };
    format!("{} at {hospital}: {detail}", v.axiom)
}

fn validate(m: &Market, axioms: &[AxiomArg]) -> ValidateBody {
    let defaults = [AxiomArg::Substitutability, AxiomArg::Lad];
    let axioms = if axioms.is_empty() { &defaults[..] } else { axioms };
    let mut checks = Vec::new();
    for h in m.hospitals() {
        let pref = m.hospital_pref(h);
        for axiom in axioms {
            let (name, outcome) = match *axiom {
                AxiomArg::Substitutability => ("substitutability".to_owned(), check_substitutable(pref)),
                AxiomArg::Lad => ("lad".to_owned(), check_lad(pref)),
                AxiomArg::Responsive(q) => (format!("responsiveness:{q}"), check_responsive(m, pref, q)),
            };
            checks.push(AxiomCheck {
                hospital: m.hospital_name(h).to_owned(),
                axiom: name,
                holds: outcome.is_ok(),
                witness: outcome.err().map(|v| describe_violation(m, &v)),
            });
        }
    }
    ValidateBody {
        ok: checks.iter().all(|c| c.holds),
        checks,
    }
}

fn audit_body(m: &Market, audit: &AuditReport) -> AuditBody {
    AuditBody {
        rule: audit.rule.clone(),
        verdict: audit.verdict.as_str().to_owned(),
        profiles_total: audit.stats.profiles_total,
        profiles_evaluated: audit.stats.profiles_evaluated,
        partial_coverage: audit.stats.partial_coverage,
        manipulations: audit.stats.manipulations,
        obvious_manipulations: audit.stats.obvious_manipulations,
        witnesses: audit.witnesses.iter().map(|w| witness_row(m, w)).collect(),
    }
}

fn check(name: &str, expected: String, observed: String) -> Check {
    Check {
        name: name.to_owned(),
        passed: expected == observed,
        expected,
        observed,
    }
}

fn pref(m: &Market, doctor: &str, names: &[&str]) -> DoctorPreference {
    let d = m.doctor_id(doctor).expect("bundled doctor");
    DoctorPreference::new(m, d, names.iter().map(|n| m.contract_id(n).expect("bundled contract")).collect())
        .expect("bundled preference")
}

fn options_text(m: &Market, options: &[DoctorOutcome]) -> String {
    let names: Vec<String> = options
        .iter()
        .map(|&o| outcome_name(m, o).unwrap_or_else(|| "∅".to_owned()))
        .collect();
    format!("{{{}}}", names.join(", "))
}

fn witness_check(m: &Market, audit: &AuditReport, truth: &DoctorPreference, lie: &DoctorPreference) -> Check {
    let found = audit
        .witnesses
        .iter()
        .find(|w| w.truth == *truth && w.misreport == *lie);
    let observed = match found {
        Some(w) => format!("{} {}", m.format_preference(&w.truth), m.format_preference(&w.misreport)),
        None => "absent".to_owned(),
    };
    check(
        "witness",
        format!("{} {}", m.format_preference(truth), m.format_preference(lie)),
        observed,
    )
}

fn option_checks(
    m: &Market,
    auditor: &Auditor<'_>,
    truth: &DoctorPreference,
    lie: &DoctorPreference,
    expected: (&str, &str),
) -> Result<Vec<Check>, Failure> {
    let d = truth.owner();
    let honest = auditor.option_set(d, truth).map_err(|e| Failure::core(Some(m), e))?;
    let misreport = auditor.option_set(d, lie).map_err(|e| Failure::core(Some(m), e))?;
    Ok(vec![
        check("truthful option set", expected.0.to_owned(), options_text(m, honest)),
        check("misreport option set", expected.1.to_owned(), options_text(m, misreport)),
    ])
}

fn reproduce_theorem2(budget: u64) -> Result<(Market, ReproduceBody), Failure> {
    let m = fixtures::theorem2();
    let config = AuditConfig {
        budget,
        ..AuditConfig::default()
    };
    let auditor = Auditor::new(Rule::HospitalOptimal, &m, config).map_err(|e| Failure::core(Some(&m), e))?;
    let audit = auditor.audit();
    let truth = pref(&m, "d1", &["y", "x"]);
    let lie = pref(&m, "d1", &["y"]);
    let mut checks = vec![
        check("verdict", Verdict::Om.as_str().to_owned(), audit.verdict.as_str().to_owned()),
        witness_check(&m, &audit, &truth, &lie),
    ];
    checks.extend(option_checks(&m, &auditor, &truth, &lie, ("{x}", "{y}"))?);
    let body = ReproduceBody {
        scenario: "theorem2".to_owned(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        audit: audit_body(&m, &audit),
    };
    Ok((m, body))
}

fn reproduce_theorem4(k: usize, q: Quantile, budget: u64) -> Result<(Market, ReproduceBody), Failure> {
    if k < 2 {
        return Err(Failure::usage("--k must be at least 2"));
    }
    if q.position(k) != 2 {
        return Err(Failure::usage(format!(
            "the scenario needs ⌈k·q⌉ = 2, but k = {k} and q = {q} give {}",
            q.position(k)
        )));
    }
    let spec = fixtures::theorem4_spec(k).map_err(|e| Failure::core(None, e))?;
    let m = spec.market;
    let rule = Rule::Quantile(q);
    let config = AuditConfig {
        budget,
        ..AuditConfig::default()
    };
    let d1 = m.doctor_id("d1").expect("bundled doctor");
    let outcome = |name: &str| -> Result<String, Failure> {
        let a = quantile_rule(&m, &spec.profiles[name], q).map_err(|e| Failure::core(Some(&m), e))?;
        Ok(outcome_name(&m, a.outcome_of(&m, d1)).unwrap_or_else(|| "∅".to_owned()))
    };
    let mut checks = vec![
        check("d1 outcome when truthful", "x2".to_owned(), outcome("main")?),
        check("d1 outcome when misreporting", "x1".to_owned(), outcome("misreport")?),
    ];
    let auditor = Auditor::new(rule, &m, config).map_err(|e| Failure::core(Some(&m), e))?;
    let audit = auditor.audit();
    let truth = spec.profiles["main"].get(d1).clone();
    let lie = spec.profiles["misreport"].get(d1).clone();
    checks.push(check("verdict", Verdict::Om.as_str().to_owned(), audit.verdict.as_str().to_owned()));
    checks.push(witness_check(&m, &audit, &truth, &lie));
    let body = ReproduceBody {
        scenario: format!("theorem4 k={k} q={q}"),
        passed: checks.iter().all(|c| c.passed),
        checks,
        audit: audit_body(&m, &audit),
    };
    Ok((m, body))
}
