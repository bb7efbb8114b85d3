//! The four subcommands as library functions.
//!
//! Each command takes input text plus a configuration and produces either
//! an [`Outcome`] — a sealed report document with the exit code its
//! contents dictate — or a [`Failure`] carrying a diagnostic and the exit
//! code for the failure class. Exit codes follow one contract everywhere:
//!
//! * 0 — success (bounds gap closed, or at least one certificate)
//! * 1 — internal inconsistency (cross-validation or verification failure)
//! * 2 — partial result (budget ran out before the gap target)
//! * 3 — no certificate / undecided
//! * 4 — invalid input (malformed documents, violated parameter gates)

use std::time::Instant;

use jsr_core::bounds;
use jsr_core::criteria::CriterionRegistry;
use jsr_core::eigen::spectral_radius;
use jsr_core::switching::{build_model, decide_finiteness, certify_with_bounds, Finiteness};
use jsr_core::words::evaluate;
use jsr_core::{Config, Error, MatrixSet, Word};

use crate::doc::{parse_set_document, to_matrix_set, SetDocument};
use crate::report::{
    input_echo, BoundsDto, CertificateDto, ConfigEcho, Document, FrequencyDto, KozyakinDto,
    PhaseDto, ReportBody, TimingDto, SOURCE_DOCUMENT, SOURCE_PARAMETERS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

/// Fallback re-derivation tolerance, relative to the certified value, for
/// certificates that do not store an explicit value tolerance.
const REDERIVE_REL_TOL: f64 = 1e-9;

/// A diagnostic plus the exit code its class maps to.
#[derive(Debug)]
pub struct Failure {
    pub message: String,
    pub exit_code: i32,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Failure {
        Failure {
            message: message.into(),
            exit_code: EXIT_INVALID,
        }
    }

    pub fn internal(message: impl Into<String>) -> Failure {
        Failure {
            message: message.into(),
            exit_code: EXIT_INTERNAL,
        }
    }

    /// Maps library errors onto the exit-code contract: cross-validation
    /// and convergence failures are internal inconsistencies, budget
    /// refusals are partial results, and everything else is invalid input.
    pub fn from_core(e: Error) -> Failure {
        let exit_code = match &e {
            Error::CrossValidation { .. } | Error::EigenNoConvergence { .. } => EXIT_INTERNAL,
            Error::BudgetExceeded { .. } => EXIT_PARTIAL,
            _ => EXIT_INVALID,
        };
        Failure {
            message: e.to_string(),
            exit_code,
        }
    }
}

/// A sealed report plus the exit code its contents dictate.
#[derive(Debug)]
pub struct Outcome {
    pub document: Document,
    pub exit_code: i32,
}

/// Stopwatch for the per-phase timing block.
struct Phases {
    started: Instant,
    last: Instant,
    phases: Vec<PhaseDto>,
}

impl Phases {
    fn new() -> Phases {
        let now = Instant::now();
        Phases {
            started: now,
            last: now,
            phases: Vec::new(),
        }
    }

    fn mark(&mut self, name: &str) {
        let now = Instant::now();
        self.phases.push(PhaseDto {
            name: name.to_string(),
            millis: now.duration_since(self.last).as_millis() as u64,
        });
        self.last = now;
    }

    fn finish(self) -> TimingDto {
        TimingDto {
            total_millis: self.started.elapsed().as_millis() as u64,
            phases: self.phases,
        }
    }
}

fn parse_input(text: &str) -> Result<(SetDocument, MatrixSet), Failure> {
    let doc = parse_set_document(text).map_err(Failure::invalid)?;
    let (set, _) = to_matrix_set(&doc).map_err(Failure::invalid)?;
    Ok((doc, set))
}

/// Two-sided bounds on a family: exit 0 when the gap closed to the
/// configured tolerance, 2 when the run stopped short (depth or budget).
pub fn cmd_bounds(text: &str, cfg: &Config) -> Result<Outcome, Failure> {
    let mut phases = Phases::new();
    let (doc, set) = parse_input(text)?;
    phases.mark("parse");

    let report = bounds::refine(&set, cfg).map_err(Failure::from_core)?;
    phases.mark("refine");

    let exit_code = if report.complete { EXIT_OK } else { EXIT_PARTIAL };
    let body = ReportBody {
        command: "bounds".to_string(),
        input: input_echo(&doc, SOURCE_DOCUMENT),
        config: ConfigEcho::from_config(cfg),
        bounds: BoundsDto::from_report(&report),
        certificates: Vec::new(),
        frequency: None,
        kozyakin: None,
    };
    Ok(Outcome {
        document: Document::new(body, phases.finish()),
        exit_code,
    })
}

/// Full certification: every detector, the triangular dispatcher, and one
/// cross-validation of the collected certificates against fresh bounds.
/// Exit 0 with at least one certificate, 3 with none (the bounds are still
/// reported), 1 when a certificate fails cross-validation.
pub fn cmd_certify(text: &str, cfg: &Config) -> Result<Outcome, Failure> {
    let mut phases = Phases::new();
    let (doc, set) = parse_input(text)?;
    phases.mark("parse");

    let (certificates, report) =
        certify_with_bounds(&set, cfg).map_err(Failure::from_core)?;
    phases.mark("certify");

    let exit_code = if certificates.is_empty() {
        EXIT_UNDECIDED
    } else {
        EXIT_OK
    };
    let body = ReportBody {
        command: "certify".to_string(),
        input: input_echo(&doc, SOURCE_DOCUMENT),
        config: ConfigEcho::from_config(cfg),
        bounds: BoundsDto::from_report(&report),
        certificates: certificates
            .iter()
            .map(CertificateDto::from_certificate)
            .collect(),
        frequency: None,
        kozyakin: None,
    };
    Ok(Outcome {
        document: Document::new(body, phases.finish()),
        exit_code,
    })
}

/// Input to the switching-model command: a document with a parameter
/// block, or the six parameters given directly.
pub enum KozyakinInput<'a> {
    Document(&'a str),
    Parameters {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        alpha: f64,
        beta: f64,
    },
}

/// Switching-model analysis: extremal-norm iteration, frequency
/// estimation, and the rationality decision. Exit 0 with a certificate
/// (cross-checked against fresh bounds), 3 when undecided (the estimate is
/// still attached), 4 when a parameter gate is violated.
pub fn cmd_kozyakin(input: KozyakinInput, cfg: &Config) -> Result<Outcome, Failure> {
    let mut phases = Phases::new();
    let (doc, model, source) = match input {
        KozyakinInput::Document(text) => {
            let doc = parse_set_document(text).map_err(Failure::invalid)?;
            let (_, model) = to_matrix_set(&doc).map_err(Failure::invalid)?;
            let model = model.ok_or_else(|| {
                Failure::invalid(
                    "the document has no kozyakin block; supply one or pass the six \
                     parameters directly",
                )
            })?;
            (doc, model, SOURCE_DOCUMENT)
        }
        KozyakinInput::Parameters {
            a,
            b,
            c,
            d,
            alpha,
            beta,
        } => {
            let model = build_model(a, b, c, d, alpha, beta).map_err(Failure::from_core)?;
            (SetDocument::from_model(&model), model, SOURCE_PARAMETERS)
        }
    };
    phases.mark("parse");

    let decision = decide_finiteness(&model, cfg).map_err(Failure::from_core)?;
    phases.mark("decide");

    let report = bounds::refine(model.set(), cfg).map_err(Failure::from_core)?;
    phases.mark("refine");

    let (certificates, verdict, reason, exit_code) = match decision.finiteness {
        Finiteness::Certified(cert) => {
            // The decision pipeline validates against its own bracket; this
            // recheck ties the certificate to the independently scanned
            // product bounds before the report claims success.
            if cert.value < report.lower - cfg.value_tol
                || cert.value > report.upper + cfg.value_tol
            {
                return Err(Failure::internal(format!(
                    "certificate value {:e} from `{}` disagrees with the refine interval \
                     [{:e}, {:e}] beyond {:e}",
                    cert.value,
                    cert.name(),
                    report.lower,
                    report.upper,
                    cfg.value_tol,
                )));
            }
            (vec![cert], "certified", None, EXIT_OK)
        }
        Finiteness::Undecided { reason } => {
            (Vec::new(), "undecided", Some(reason), EXIT_UNDECIDED)
        }
    };

    let body = ReportBody {
        command: "kozyakin".to_string(),
        input: input_echo(&doc, source),
        config: ConfigEcho::from_config(cfg),
        bounds: BoundsDto::from_report(&report),
        certificates: certificates
            .iter()
            .map(CertificateDto::from_certificate)
            .collect(),
        frequency: Some(FrequencyDto::from_estimate(&decision.estimate)),
        kozyakin: Some(KozyakinDto::from_approx(&decision.approx, verdict, reason)),
    };
    Ok(Outcome {
        document: Document::new(body, phases.finish()),
        exit_code,
    })
}

/// Re-derives every certificate value in a report from the set document.
///
/// Checks, in order: the body hash (tamper seal), the set identity (the
/// document must hash to the input echoed by the report), and then each
/// certificate — through its realizing word when it has one, otherwise by
/// re-running the named detector under the echoed configuration. Values
/// must agree within the certificate's stored tolerance (`value_tol` or
/// `refine_tol` when stored, else the stored relative consistency bound,
/// else `REDERIVE_REL_TOL`). Returns one finding line per check.
pub fn cmd_verify(report_text: &str, set_text: &str) -> Result<Vec<String>, Failure> {
    let document = Document::parse(report_text).map_err(Failure::invalid)?;
    let computed = document.body.sha256();
    if computed != document.body_sha256 {
        return Err(Failure::internal(format!(
            "report body hash mismatch: stored {}, computed {}",
            document.body_sha256, computed
        )));
    }
    let mut findings = vec!["body hash verified".to_string()];

    let doc = parse_set_document(set_text).map_err(Failure::invalid)?;
    let echo = &document.body.input;
    if doc.sha256() != echo.set_sha256 {
        let names: Vec<&str> = doc.matrices.iter().map(|m| m.name.as_str()).collect();
        return Err(Failure::invalid(format!(
            "set file does not match the report input: report dim {} with {} members named \
             [{}], set file dim {} with {} members named [{}]",
            echo.dim,
            echo.members,
            echo.matrix_names.join(", "),
            doc.dim,
            doc.matrices.len(),
            names.join(", "),
        )));
    }
    findings.push("set identity verified".to_string());

    let (set, _) = to_matrix_set(&doc).map_err(Failure::invalid)?;
    let cfg = document.body.config.to_config();
    let registry = CriterionRegistry::standard();

    for (index, cert) in document.body.certificates.iter().enumerate() {
        let value = cert.value.get();
        let tol = rederive_tolerance(cert, value);
        let rederived = match &cert.word {
            Some(letters) => {
                let word = Word::new(letters.clone(), set.len()).map_err(|e| {
                    Failure::internal(format!(
                        "certificate {index} ({}): stored word is invalid: {e}",
                        cert.criterion
                    ))
                })?;
                let product = evaluate(&set, &word).map_err(|e| {
                    Failure::internal(format!(
                        "certificate {index} ({}): word product failed: {e}",
                        cert.criterion
                    ))
                })?;
                let rho = spectral_radius(&product).map_err(|e| {
                    Failure::internal(format!(
                        "certificate {index} ({}): {e}",
                        cert.criterion
                    ))
                })?;
                rho.powf(1.0 / word.len() as f64)
            }
            None => {
                let detector = registry.get(&cert.criterion).ok_or_else(|| {
                    Failure::internal(format!(
                        "certificate {index}: unknown criterion {}",
                        cert.criterion
                    ))
                })?;
                let again = detector
                    .check(&set, &cfg)
                    .map_err(|e| {
                        Failure::internal(format!(
                            "certificate {index} ({}): re-derivation failed: {e}",
                            cert.criterion
                        ))
                    })?
                    .ok_or_else(|| {
                        Failure::internal(format!(
                            "certificate {index} ({}): the criterion no longer applies to \
                             this set",
                            cert.criterion
                        ))
                    })?;
                again.value
            }
        };
        if (rederived - value).abs() > tol {
            return Err(Failure::internal(format!(
                "certificate {index} ({}): stored value {value:e} but re-derivation gives \
                 {rederived:e}, beyond {tol:e}",
                cert.criterion
            )));
        }
        findings.push(format!(
            "certificate {index} ({}): value re-derived within {tol:e}",
            cert.criterion
        ));
    }
    Ok(findings)
}

/// The comparison tolerance a certificate's stored map implies.
fn rederive_tolerance(cert: &CertificateDto, value: f64) -> f64 {
    if let Some(tol) = cert.tolerances.get("value_tol") {
        return tol.get();
    }
    if let Some(tol) = cert.tolerances.get("refine_tol") {
        return tol.get();
    }
    let rel = cert
        .tolerances
        .get("value_consistency_rel")
        .map_or(REDERIVE_REL_TOL, |t| t.get());
    rel * value.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY_SINGLETON: &str = r#"{
        "schema_version": "1",
        "dim": 2,
        "matrices": [
            {"name": "I", "rows": [[1, 0], [0, 1]]}
        ]
    }"#;

    #[test]
    fn bounds_on_the_identity_singleton_close_at_one() {
        let outcome = cmd_bounds(IDENTITY_SINGLETON, &Config::default()).expect("runs");
        assert_eq!(outcome.exit_code, EXIT_OK);
        let bounds = &outcome.document.body.bounds;
        assert_eq!(bounds.lower.get(), 1.0);
        assert_eq!(bounds.upper.get(), 1.0);
        assert!(bounds.complete);
    }

    #[test]
    fn malformed_documents_map_to_invalid_input() {
        let failure = cmd_bounds("{", &Config::default()).expect_err("parse fails");
        assert_eq!(failure.exit_code, EXIT_INVALID);
    }

    #[test]
    fn a_violated_gate_surfaces_with_its_inequality() {
        let failure = cmd_kozyakin(
            KozyakinInput::Parameters {
                a: 1.5,
                b: 1.0,
                c: 1.0,
                d: 1.0,
                alpha: 1.0,
                beta: 1.0,
            },
            &Config::default(),
        )
        .expect_err("gate violated");
        assert_eq!(failure.exit_code, EXIT_INVALID);
        assert!(failure.message.contains("a <= 1"), "{}", failure.message);
    }

    #[test]
    fn a_verified_round_trip_reports_every_check() {
        let cfg = Config::default();
        let outcome = cmd_certify(
            r#"{
                "schema_version": "1",
                "dim": 2,
                "matrices": [
                    {"name": "A1", "rows": [[1, 1], [0, 1]]},
                    {"name": "A2", "rows": [[1, 0], [1, 1]]}
                ]
            }"#,
            &cfg,
        )
        .expect("certifies");
        assert_eq!(outcome.exit_code, EXIT_OK);
        let set_text = r#"{
            "schema_version": "1",
            "dim": 2,
            "matrices": [
                {"name": "A1", "rows": [[1.0, 1.0], [0.0, 1.0]]},
                {"name": "A2", "rows": [[1.0, 0.0], [1.0, 1.0]]}
            ]
        }"#;
        let findings =
            cmd_verify(&outcome.document.render(), set_text).expect("verifies");
        assert!(findings.len() >= 3, "{findings:?}");
        assert!(findings[0].contains("body hash"));
    }

    #[test]
    fn a_tampered_value_breaks_the_hash_seal() {
        let outcome = cmd_bounds(IDENTITY_SINGLETON, &Config::default()).expect("runs");
        let tampered = outcome
            .document
            .render()
            .replace("1.0000000000000000e0", "2.0000000000000000e0");
        let failure = cmd_verify(&tampered, IDENTITY_SINGLETON).expect_err("seal broken");
        assert_eq!(failure.exit_code, EXIT_INTERNAL);
        assert!(failure.message.contains("hash mismatch"), "{}", failure.message);
    }
}
