//! Report assembly and CSV / Markdown rendering.
//!
//! Percentages are rounded half-up to integers; ratios in the appendix-style
//! tables to two decimals.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Aggregate, FnAttribution, LabelConfusion, LabelFrequency, Prf};
use crate::corpus::{display_name, LabelSet};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModePair {
    pub strict: Prf,
    pub relaxed: Prf,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpanMetrics {
    pub incl_writer: ModePair,
    pub excl_writer: ModePair,
    /// Writer span alone, strict matching.
    pub writer_only: Prf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelResult {
    pub confusion: LabelConfusion,
    pub aggregate: Aggregate,
}

impl LabelResult {
    pub fn new(confusion: LabelConfusion) -> Self {
        let aggregate = super::aggregate(&confusion);
        LabelResult {
            confusion,
            aggregate,
        }
    }
}

/// Label metrics of one family in gold-spans and/or pipeline setting.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    pub labels: LabelSet,
    pub gold: Option<LabelResult>,
    pub pipeline: Option<LabelResult>,
}

impl LabelTable {
    /// Pipeline F1 minus gold-spans F1 for `label`.
    pub fn delta_f1(&self, label: &str) -> Option<f64> {
        let gold = self.gold.as_ref()?.aggregate.label(label)?.f1;
        let pipeline = self.pipeline.as_ref()?.aggregate.label(label)?.f1;
        Some(pipeline - gold)
    }

    pub fn delta_macro_f1(&self) -> Option<f64> {
        Some(
            self.pipeline.as_ref()?.aggregate.macro_avg.f1
                - self.gold.as_ref()?.aggregate.macro_avg.f1,
        )
    }

    pub fn delta_micro_f1(&self) -> Option<f64> {
        Some(
            self.pipeline.as_ref()?.aggregate.micro_avg.f1
                - self.gold.as_ref()?.aggregate.micro_avg.f1,
        )
    }

    /// FN attribution from the pipeline setting when present, else from the
    /// gold-spans setting (where nothing is attributed to missing spans).
    pub fn fn_attribution(&self) -> Vec<FnAttribution> {
        self.pipeline
            .as_ref()
            .or(self.gold.as_ref())
            .map(|r| super::fn_attribution_table(&r.confusion))
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// Absent when only gold spans were classified.
    pub spans: Option<SpanMetrics>,
    pub emotions: LabelTable,
    pub appraisals: LabelTable,
    pub emotion_frequency: Vec<LabelFrequency>,
    pub appraisal_frequency: Vec<LabelFrequency>,
    /// Key/value lines identifying the inputs the report was computed from.
    pub provenance: Vec<(String, String)>,
}

/// A rendered table: header plus string cells, first column is the row label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: &'static str,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!(
                "unknown report format `{other}` (expected csv or markdown)"
            )),
        }
    }
}

/// Half-up rounding at `decimals` places.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale + 0.5).floor() / scale
}

/// Fraction rendered as an integer percentage.
pub fn percent(value: f64) -> i64 {
    round_half_up(value * 100.0, 0) as i64
}

fn pct(value: f64) -> String {
    percent(value).to_string()
}

/// Difference of the two rounded percentages, so the column agrees with the
/// F1 cells printed beside it.
fn delta(gold_f1: f64, pipeline_f1: f64) -> String {
    match percent(pipeline_f1) - percent(gold_f1) {
        0 => "±0".to_string(),
        d if d > 0 => format!("+{d}"),
        d => d.to_string(),
    }
}

fn ratio2(value: f64) -> String {
    format!("{:.2}", round_half_up(value, 2))
}

impl EvaluationReport {
    pub fn tables(&self) -> Vec<Table> {
        let mut tables = Vec::new();
        if let Some(spans) = &self.spans {
            tables.push(span_table(spans));
        }
        tables.push(label_table(
            "emotions",
            "Emotion",
            "Emotion classification",
            &self.emotions,
        ));
        tables.push(label_table(
            "appraisals",
            "Appraisal",
            "Appraisal classification",
            &self.appraisals,
        ));
        tables.push(frequency_table(
            "emotion_frequency",
            "Emotion",
            "Writer and non-writer spans per emotion",
            &self.emotion_frequency,
        ));
        tables.push(fn_table(
            "emotion_fn",
            "Emotion",
            "Emotion false negatives due to unrecognized spans",
            &self.emotions.fn_attribution(),
        ));
        tables.push(frequency_table(
            "appraisal_frequency",
            "Appraisal",
            "Writer and non-writer spans per appraisal",
            &self.appraisal_frequency,
        ));
        tables.push(fn_table(
            "appraisal_fn",
            "Appraisal",
            "Appraisal false negatives due to unrecognized spans",
            &self.appraisals.fn_attribution(),
        ));
        tables
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Evaluation report\n\n");
        if !self.provenance.is_empty() {
            for (key, value) in &self.provenance {
                let _ = writeln!(out, "- {key}: `{value}`");
            }
            out.push('\n');
        }
        for table in self.tables() {
            let _ = writeln!(out, "## {}\n", table.title);
            let _ = writeln!(out, "| {} |", table.header.join(" | "));
            let _ = writeln!(
                out,
                "|{}",
                table
                    .header
                    .iter()
                    .enumerate()
                    .map(|(i, _)| if i == 0 { ":---|" } else { "---:|" })
                    .collect::<String>()
            );
            for row in &table.rows {
                let _ = writeln!(out, "| {} |", row.join(" | "));
            }
            out.push('\n');
            if table.name == "spans" {
                if let Some(spans) = &self.spans {
                    let _ = writeln!(out, "Writer span F1: {}\n", pct(spans.writer_only.f1));
                }
            }
        }
        out
    }

    /// One CSV document per table, keyed by file name.
    pub fn to_csv(&self) -> Vec<(String, String)> {
        let mut files = Vec::new();
        if !self.provenance.is_empty() {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["key", "value"]).expect("in-memory write");
            for (k, v) in &self.provenance {
                w.write_record([k, v]).expect("in-memory write");
            }
            files.push(("provenance.csv".to_string(), into_string(w)));
        }
        for table in self.tables() {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.header).expect("in-memory write");
            for row in &table.rows {
                w.write_record(row).expect("in-memory write");
            }
            files.push((format!("{}.csv", table.name), into_string(w)));
        }
        files
    }

    /// Rendered output files for `format`.
    pub fn render(&self, format: ReportFormat) -> Vec<(String, String)> {
        match format {
            ReportFormat::Markdown => vec![("report.md".to_string(), self.to_markdown())],
            ReportFormat::Csv => self.to_csv(),
        }
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn span_table(spans: &SpanMetrics) -> Table {
    let row = |label: &str, m: &ModePair| {
        vec![
            label.to_string(),
            pct(m.strict.precision),
            pct(m.relaxed.precision),
            pct(m.strict.recall),
            pct(m.relaxed.recall),
            pct(m.strict.f1),
            pct(m.relaxed.f1),
        ]
    };
    Table {
        name: "spans",
        title: "Span detection (s: strict, r: relaxed)".to_string(),
        header: ["", "P s", "P r", "R s", "R r", "F1 s", "F1 r"]
            .map(String::from)
            .to_vec(),
        rows: vec![
            row("incl. writer", &spans.incl_writer),
            row("excl. writer", &spans.excl_writer),
        ],
    }
}

fn label_table(name: &'static str, first: &str, title: &str, table: &LabelTable) -> Table {
    let mut header = vec![first.to_string()];
    if table.gold.is_some() {
        header.extend(["gold P", "gold R", "gold F1"].map(String::from));
    }
    if table.pipeline.is_some() {
        header.extend(["pipeline P", "pipeline R", "pipeline F1"].map(String::from));
    }
    let both = table.gold.as_ref().zip(table.pipeline.as_ref());
    if both.is_some() {
        header.push("ΔF1".to_string());
    }

    let cells = |prf: Option<&Prf>| -> Vec<String> {
        prf.map(|p| vec![pct(p.precision), pct(p.recall), pct(p.f1)])
            .unwrap_or_default()
    };
    let settings = [table.gold.as_ref(), table.pipeline.as_ref()];

    let mut rows = Vec::new();
    for label in table.labels.iter() {
        let mut row = vec![display_name(label).to_string()];
        for setting in settings.iter().flatten() {
            row.extend(cells(setting.aggregate.label(label)));
        }
        if let Some((gold, pipeline)) = both {
            let f1 = |r: &LabelResult| r.aggregate.label(label).map_or(0.0, |p| p.f1);
            row.push(delta(f1(gold), f1(pipeline)));
        }
        rows.push(row);
    }
    for (row_label, pick) in [
        (
            "Macro avg.",
            (|a: &Aggregate| a.macro_avg) as fn(&Aggregate) -> Prf,
        ),
        ("Micro avg.", |a: &Aggregate| a.micro_avg),
    ] {
        let mut row = vec![row_label.to_string()];
        for setting in settings.iter().flatten() {
            row.extend(cells(Some(&pick(&setting.aggregate))));
        }
        if let Some((gold, pipeline)) = both {
            row.push(delta(
                pick(&gold.aggregate).f1,
                pick(&pipeline.aggregate).f1,
            ));
        }
        rows.push(row);
    }
    Table {
        name,
        title: title.to_string(),
        header,
        rows,
    }
}

fn frequency_table(name: &'static str, first: &str, title: &str, rows: &[LabelFrequency]) -> Table {
    Table {
        name,
        title: title.to_string(),
        header: [
            first,
            "writer %",
            "writer #",
            "non-writer %",
            "non-writer #",
        ]
        .map(String::from)
        .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    display_name(&r.label).to_string(),
                    ratio2(r.writer_ratio),
                    r.writer.to_string(),
                    ratio2(r.non_writer_ratio),
                    r.non_writer.to_string(),
                ]
            })
            .collect(),
    }
}

fn fn_table(name: &'static str, first: &str, title: &str, rows: &[FnAttribution]) -> Table {
    Table {
        name,
        title: title.to_string(),
        header: [first, "total #", "missing span #", "missing span %"]
            .map(String::from)
            .to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    display_name(&r.label).to_string(),
                    r.fn_total.to_string(),
                    r.fn_missing.to_string(),
                    ratio2(r.ratio),
                ]
            })
            .collect(),
    }
}
