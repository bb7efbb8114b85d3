//! Report documents: a typed, hashed body plus out-of-band timing.
//!
//! Everything a verifier needs — the input identity, the configuration
//! actually used, bounds, certificates, and any frequency analysis — lives
//! in the `body` object. Its SHA-256 (of the compact serialization) is
//! stored alongside so tampering is detectable, and the timing block sits
//! outside the hashed region: elapsed milliseconds are the one part of a
//! run that honest reproduction cannot reproduce.
//!
//! Serialization is deterministic: struct fields emit in declaration
//! order, maps are sorted, and every float is a canonical 17-digit decimal
//! string, so identical inputs and configuration produce byte-identical
//! bodies regardless of thread count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use jsr_core::bounds::BoundsReport;
use jsr_core::config::Config;
use jsr_core::criteria::Certificate;
use jsr_core::switching::{BarabanovApprox, FrequencyEstimate};
use jsr_core::Word;

use crate::doc::{hex_sha256, Dec, SetDocument};

/// Where the input family came from.
pub const SOURCE_DOCUMENT: &str = "document";
/// The family was synthesized from command-line model parameters.
pub const SOURCE_PARAMETERS: &str = "parameters";

/// Identity and shape of the analyzed input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputEcho {
    /// SHA-256 of the canonical set document.
    pub set_sha256: String,
    /// [`SOURCE_DOCUMENT`] or [`SOURCE_PARAMETERS`].
    pub source: String,
    pub dim: usize,
    pub members: usize,
    pub matrix_names: Vec<String>,
    /// The six model parameters, echoed when the input carried them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kozyakin_parameters: Option<ModelParameters>,
}

/// The six switching-model parameters in canonical order.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParameters {
    pub a: Dec,
    pub b: Dec,
    pub c: Dec,
    pub d: Dec,
    pub alpha: Dec,
    pub beta: Dec,
}

/// Every tolerance and budget the run actually used, echoed so a verifier
/// can reproduce the computation exactly. The thread count is deliberately
/// absent: results are identical for any count, so it is an execution
/// detail on par with timing, not part of the reproducible identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub dim_cap: usize,
    pub sym_tol: Dec,
    pub eq_tol: Dec,
    pub membership_tol: Dec,
    pub word_budget: u64,
    pub gram_depth_max: usize,
    pub tie_rel_tol: Dec,
    pub tie_cap: usize,
    pub refine_tol: Dec,
    pub max_depth: usize,
    pub value_tol: Dec,
    pub stability_margin: Dec,
    pub grid: usize,
    pub bracket_tol: Dec,
    pub max_sweeps: usize,
    pub burn_in: usize,
    pub horizon: usize,
    pub q_max: u64,
    pub rational_tol: Dec,
}

impl ConfigEcho {
    pub fn from_config(cfg: &Config) -> ConfigEcho {
        ConfigEcho {
            dim_cap: cfg.dim_cap,
            sym_tol: Dec(cfg.sym_tol),
            eq_tol: Dec(cfg.eq_tol),
            membership_tol: Dec(cfg.membership_tol),
            word_budget: cfg.word_budget,
            gram_depth_max: cfg.gram_depth_max,
            tie_rel_tol: Dec(cfg.tie_rel_tol),
            tie_cap: cfg.tie_cap,
            refine_tol: Dec(cfg.refine_tol),
            max_depth: cfg.max_depth,
            value_tol: Dec(cfg.value_tol),
            stability_margin: Dec(cfg.stability_margin),
            grid: cfg.grid,
            bracket_tol: Dec(cfg.bracket_tol),
            max_sweeps: cfg.max_sweeps,
            burn_in: cfg.burn_in,
            horizon: cfg.horizon,
            q_max: cfg.q_max,
            rational_tol: Dec(cfg.rational_tol),
        }
    }

    /// Reconstructs the configuration a report was produced under.
    pub fn to_config(&self) -> Config {
        Config {
            dim_cap: self.dim_cap,
            sym_tol: self.sym_tol.0,
            eq_tol: self.eq_tol.0,
            membership_tol: self.membership_tol.0,
            word_budget: self.word_budget,
            gram_depth_max: self.gram_depth_max,
            tie_rel_tol: self.tie_rel_tol.0,
            tie_cap: self.tie_cap,
            refine_tol: self.refine_tol.0,
            max_depth: self.max_depth,
            value_tol: self.value_tol.0,
            stability_margin: self.stability_margin.0,
            grid: self.grid,
            bracket_tol: self.bracket_tol.0,
            max_sweeps: self.max_sweeps,
            burn_in: self.burn_in,
            horizon: self.horizon,
            q_max: self.q_max,
            rational_tol: self.rational_tol.0,
            threads: 1,
            ray_roles: None,
        }
    }
}

/// One row of the per-depth table.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthDto {
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Dec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Dec>,
}

/// Two-sided bounds as reported.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsDto {
    pub lower: Dec,
    /// Letters of the word realizing the lower bound, 1-based.
    pub lower_witness: Vec<usize>,
    pub lower_depth: usize,
    pub upper: Dec,
    pub upper_depth: usize,
    pub gap: Dec,
    pub complete: bool,
    pub nodes_used: u64,
    pub per_depth: Vec<DepthDto>,
}

impl BoundsDto {
    pub fn from_report(report: &BoundsReport) -> BoundsDto {
        BoundsDto {
            lower: Dec(report.lower),
            lower_witness: report.lower_witness.letters().to_vec(),
            lower_depth: report.lower_depth,
            upper: Dec(report.upper),
            upper_depth: report.upper_depth,
            gap: Dec(report.gap),
            complete: report.complete,
            nodes_used: report.nodes_used,
            per_depth: report
                .per_depth
                .iter()
                .map(|row| DepthDto {
                    depth: row.depth,
                    lower: row.lower.map(Dec),
                    upper: row.upper.map(Dec),
                })
                .collect(),
        }
    }
}

/// A labelled witness matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessDto {
    pub name: String,
    pub rows: Vec<Vec<Dec>>,
}

/// A finiteness certificate as reported.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateDto {
    /// Registry name of the producing criterion.
    pub criterion: String,
    pub value: Dec,
    /// Letters of the realizing word, 1-based, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<Vec<usize>>,
    pub witness: Vec<WitnessDto>,
    pub tolerances: BTreeMap<String, Dec>,
    pub notes: Vec<String>,
}

impl CertificateDto {
    pub fn from_certificate(cert: &Certificate) -> CertificateDto {
        CertificateDto {
            criterion: cert.name().to_string(),
            value: Dec(cert.value),
            word: cert.word.as_ref().map(|w: &Word| w.letters().to_vec()),
            witness: cert
                .witness
                .iter()
                .map(|(name, m)| WitnessDto {
                    name: name.clone(),
                    rows: m.rows().into_iter().map(|r| r.into_iter().map(Dec).collect()).collect(),
                })
                .collect(),
            tolerances: cert
                .tolerances
                .iter()
                .map(|(k, v)| (k.to_string(), Dec(*v)))
                .collect(),
            notes: cert.notes.clone(),
        }
    }
}

/// Switching-frequency estimate as reported.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyDto {
    pub sigma: Dec,
    pub p: u64,
    pub q: u64,
    pub approx_error: Dec,
    pub horizon: usize,
    pub burn_in: usize,
}

impl FrequencyDto {
    pub fn from_estimate(estimate: &FrequencyEstimate) -> FrequencyDto {
        FrequencyDto {
            sigma: Dec(estimate.sigma),
            p: estimate.p,
            q: estimate.q,
            approx_error: Dec(estimate.approx_error),
            horizon: estimate.horizon,
            burn_in: estimate.burn_in,
        }
    }
}

/// Extremal-norm iteration record: verdict, bracket, and the bracket's
/// sweep-by-sweep history.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KozyakinDto {
    /// "certified" or "undecided".
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undecided_reason: Option<String>,
    pub rho_hat: Dec,
    pub bracket: [Dec; 2],
    pub grid_size: usize,
    pub sweeps: usize,
    pub residual: Dec,
    pub converged: bool,
    pub bracket_history: Vec<[Dec; 2]>,
}

impl KozyakinDto {
    pub fn from_approx(
        approx: &BarabanovApprox,
        verdict: &str,
        undecided_reason: Option<String>,
    ) -> KozyakinDto {
        KozyakinDto {
            verdict: verdict.to_string(),
            undecided_reason,
            rho_hat: Dec(approx.rho_hat),
            bracket: [Dec(approx.bracket.0), Dec(approx.bracket.1)],
            grid_size: approx.grid_size,
            sweeps: approx.iterations,
            residual: Dec(approx.residual),
            converged: approx.converged,
            bracket_history: approx
                .history
                .iter()
                .map(|&(lo, hi)| [Dec(lo), Dec(hi)])
                .collect(),
        }
    }
}

/// The hashed portion of a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBody {
    /// Which subcommand produced the report.
    pub command: String,
    pub input: InputEcho,
    pub config: ConfigEcho,
    pub bounds: BoundsDto,
    pub certificates: Vec<CertificateDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencyDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kozyakin: Option<KozyakinDto>,
}

impl ReportBody {
    /// The canonical bytes that get hashed: compact serialization.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    pub fn sha256(&self) -> String {
        hex_sha256(self.canonical_json().as_bytes())
    }
}

/// One timed phase of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDto {
    pub name: String,
    pub millis: u64,
}

/// Wall-clock record, outside the hashed body.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingDto {
    pub phases: Vec<PhaseDto>,
    pub total_millis: u64,
}

/// A complete emitted report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub body: ReportBody,
    pub body_sha256: String,
    pub timing: TimingDto,
}

impl Document {
    /// Seals a body with its hash and the run's timing.
    pub fn new(body: ReportBody, timing: TimingDto) -> Document {
        let body_sha256 = body.sha256();
        Document {
            body,
            body_sha256,
            timing,
        }
    }

    /// Pretty rendering with a trailing newline, as written to stdout or
    /// `--out`.
    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }

    /// Parses a rendered report.
    pub fn parse(text: &str) -> Result<Document, String> {
        serde_json::from_str(text).map_err(|e| format!("report parse error: {e}"))
    }
}

/// Builds the input echo for a document-sourced run.
pub fn input_echo(doc: &SetDocument, source: &str) -> InputEcho {
    InputEcho {
        set_sha256: doc.sha256(),
        source: source.to_string(),
        dim: doc.dim,
        members: doc.matrices.len(),
        matrix_names: doc.matrices.iter().map(|m| m.name.clone()).collect(),
        kozyakin_parameters: doc.kozyakin.map(|block| ModelParameters {
            a: block.a,
            b: block.b,
            c: block.c,
            d: block.d,
            alpha: block.alpha,
            beta: block.beta,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_body() -> ReportBody {
        ReportBody {
            command: "bounds".to_string(),
            input: InputEcho {
                set_sha256: "00".repeat(32),
                source: SOURCE_DOCUMENT.to_string(),
                dim: 2,
                members: 1,
                matrix_names: vec!["A1".to_string()],
                kozyakin_parameters: None,
            },
            config: ConfigEcho::from_config(&Config::default()),
            bounds: BoundsDto {
                lower: Dec(1.0),
                lower_witness: vec![1],
                lower_depth: 1,
                upper: Dec(1.0),
                upper_depth: 1,
                gap: Dec(0.0),
                complete: true,
                nodes_used: 1,
                per_depth: vec![DepthDto {
                    depth: 1,
                    lower: Some(Dec(1.0)),
                    upper: Some(Dec(1.0)),
                }],
            },
            certificates: Vec::new(),
            frequency: None,
            kozyakin: None,
        }
    }

    #[test]
    fn the_body_hash_is_stable_across_a_parse_cycle() {
        let body = tiny_body();
        let document = Document::new(
            body,
            TimingDto {
                phases: vec![PhaseDto {
                    name: "parse".to_string(),
                    millis: 0,
                }],
                total_millis: 0,
            },
        );
        let reparsed = Document::parse(&document.render()).expect("own output parses");
        assert_eq!(reparsed.body.sha256(), document.body_sha256);
    }

    #[test]
    fn timing_does_not_shift_the_body_hash() {
        let body = tiny_body();
        let fast = Document::new(
            body.clone(),
            TimingDto {
                phases: Vec::new(),
                total_millis: 1,
            },
        );
        let slow = Document::new(
            body,
            TimingDto {
                phases: Vec::new(),
                total_millis: 99,
            },
        );
        assert_eq!(fast.body_sha256, slow.body_sha256);
    }

    #[test]
    fn the_config_echo_reconstructs_the_configuration() {
        let mut cfg = Config::default();
        cfg.max_depth = 12;
        cfg.refine_tol = 1e-7;
        let echo = ConfigEcho::from_config(&cfg);
        let back = echo.to_config();
        assert_eq!(back.max_depth, 12);
        assert_eq!(back.refine_tol.to_bits(), (1e-7f64).to_bits());
        assert_eq!(back.word_budget, cfg.word_budget);
    }
}
