//! Diagnostic reports in text and JSON form.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::supergraph::HandlerId;
use crate::transform::Analysis;
use crate::uninit::{report_uses, UninitProblem};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Plain IFDS diagnostics.
    Ifds,
    /// Diagnostics surviving the event-aware filter.
    Ide,
    /// Every IFDS diagnostic, marked reported or filtered.
    Diff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Reported,
    Filtered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDiagnostic {
    pub file: String,
    pub line: u32,
    pub var: String,
    pub status: Status,
    /// For filtered diagnostics: the handler states that made the fact
    /// infeasible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handler_states: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportStats {
    pub nodes: usize,
    pub edges: usize,
    pub facts: usize,
    pub handlers: usize,
    pub exploded_nodes: usize,
    pub exploded_edges: usize,
    pub ifds_path_edges: usize,
    pub ifds_summary_edges: usize,
    pub ifds_worklist_steps: usize,
    pub ide_jump_functions: usize,
    pub ide_phase1_steps: usize,
    pub ide_phase2_steps: usize,
    pub compositions: usize,
    pub max_handlers_touched: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub files: Vec<String>,
    pub mode: Mode,
    pub diagnostics: Vec<ReportDiagnostic>,
    pub stats: ReportStats,
}

impl Report {
    pub fn reported(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.status == Status::Reported).count()
    }

    pub fn filtered(&self) -> usize {
        self.diagnostics.len() - self.reported()
    }

    /// 1 when any diagnostic is reported, else 0.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.reported() > 0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Report, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn build_report(a: &Analysis, files: &[String], mode: Mode, wall_time_ms: f64) -> Report {
    let problem = UninitProblem::new(&a.program);
    let handlers = a.graph.handlers();
    let diagnostics = match mode {
        Mode::Ifds | Mode::Ide => {
            let holds = |n, d| match mode {
                Mode::Ifds => a.ifds.holds(n, d),
                _ => a.filtered.holds(n, d),
            };
            report_uses(&a.program, &a.graph, &problem, holds)
                .into_iter()
                .map(|d| ReportDiagnostic {
                    file: d.file,
                    line: d.line,
                    var: d.var,
                    status: Status::Reported,
                    handler_states: None,
                })
                .collect()
        }
        Mode::Diff => report_uses(&a.program, &a.graph, &problem, |n, d| a.ifds.holds(n, d))
            .into_iter()
            .map(|d| {
                let kept = a.filtered.holds(d.node, d.fact);
                let handler_states = if kept {
                    None
                } else {
                    a.filtered.provenance.get(&(d.node, d.fact)).map(|m| {
                        handlers
                            .iter()
                            .enumerate()
                            .map(|(i, h)| (h.clone(), m.get(HandlerId(i as u32)).to_string()))
                            .collect()
                    })
                };
                ReportDiagnostic {
                    file: d.file,
                    line: d.line,
                    var: d.var,
                    status: if kept { Status::Reported } else { Status::Filtered },
                    handler_states,
                }
            })
            .collect(),
    };
    let s = &a.stats;
    Report {
        version: REPORT_VERSION,
        files: files.to_vec(),
        mode,
        diagnostics,
        stats: ReportStats {
            nodes: s.nodes,
            edges: s.edges,
            facts: s.facts,
            handlers: s.handlers,
            exploded_nodes: s.exploded_nodes,
            exploded_edges: s.exploded_edges,
            ifds_path_edges: s.ifds.path_edges,
            ifds_summary_edges: s.ifds.summary_edges,
            ifds_worklist_steps: s.ifds.worklist_steps,
            ide_jump_functions: s.ide.jump_functions,
            ide_phase1_steps: s.ide.phase1_steps,
            ide_phase2_steps: s.ide.phase2_steps,
            compositions: s.ide.ops.compositions,
            max_handlers_touched: s.ide.ops.max_touched,
            wall_time_ms,
        },
    }
}

fn paint(text: &str, code: &str, color: bool) -> String {
    if color {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

pub fn render_text(r: &Report, color: bool) -> String {
    let mut out = String::new();
    for d in &r.diagnostics {
        let msg = format!("{}:{}: variable '{}' may be uninitialized", d.file, d.line, d.var);
        match d.status {
            Status::Reported => {
                let _ = writeln!(out, "{msg}");
            }
            Status::Filtered => {
                let tag = paint("[infeasible-path artifact]", "2", color);
                let _ = writeln!(out, "{msg} {tag}");
                if let Some(states) = &d.handler_states {
                    for h in states.iter().filter(|(_, s)| s.as_str() == "X").map(|(h, _)| h) {
                        let _ = writeln!(
                            out,
                            "  {}: would require handler '{h}' invoked before emission",
                            paint("filtered", "36", color)
                        );
                    }
                    let all: Vec<String> = states.iter().map(|(h, s)| format!("{h}: {s}")).collect();
                    let _ = writeln!(out, "  handler states: {{{}}}", all.join(", "));
                }
            }
        }
    }
    let reported = r.reported();
    let summary = match r.mode {
        Mode::Diff => format!("{reported} reported, {} filtered", r.filtered()),
        _ => format!("{reported} diagnostic{}", if reported == 1 { "" } else { "s" }),
    };
    let code = if reported > 0 { "33" } else { "32" };
    let _ = writeln!(out, "{}", paint(&summary, code, color));
    out
}
