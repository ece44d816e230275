//! Report emission: deterministic CSVs under `reports/`, with optional SVG
//! plots. The CSV is the contract; plots are convenience.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use forge_core::align::AlignmentReport;
use forge_core::corpus::{corpus_stats, ParallelCorpus, SolutionRecord};
use forge_core::jsonl;
use forge_core::lang::Language;
use forge_core::mixture::CellAllocation;

use crate::atomic::write_atomic;
use crate::config::PipelineConfig;
use crate::error::{StageError, StageResult};
use crate::stages::{
    mixture_alloc_file, ALIGN_REPORT_JSON, CORPUS, EVAL_REPORT,
};

pub fn emit_report(
    config: &PipelineConfig,
    kind: &str,
    plots: bool,
) -> StageResult<Vec<PathBuf>> {
    let work_dir = config.work_dir();
    let reports_dir = work_dir.join("reports");
    match kind {
        "stats" => stats_report(config, &reports_dir, plots),
        "mixture" => mixture_report(config, &reports_dir),
        "eval" => eval_report(work_dir, &reports_dir, plots),
        "alignment" => alignment_report(work_dir, &reports_dir, plots),
        other => Err(StageError::validation(format!(
            "unknown report kind: {other} (expected stats, mixture, eval, alignment)"
        ))),
    }
}

fn require_output(work_dir: &Path, name: &str, stage: &'static str) -> StageResult<PathBuf> {
    let path = work_dir.join(name);
    if !path.exists() {
        return Err(StageError::UpstreamMissing {
            stage: stage.to_string(),
            path,
        });
    }
    Ok(path)
}

fn stats_report(
    config: &PipelineConfig,
    reports_dir: &Path,
    plots: bool,
) -> StageResult<Vec<PathBuf>> {
    let work_dir = config.work_dir();
    let corpus_path = require_output(work_dir, CORPUS, "verify")?;
    let corpus = ParallelCorpus::from_records(
        jsonl::read_all::<SolutionRecord>(&corpus_path).map_err(|e| StageError::Other(e.into()))?,
    )
    .map_err(|e| StageError::validation(e.to_string()))?;

    // Declared grid: the mix languages when configured, else whatever the
    // corpus contains.
    let declared: Vec<Language> = config
        .mix
        .as_ref()
        .map(|m| m.languages.iter().map(Language::new).collect())
        .unwrap_or_default();
    let stats = corpus_stats(&corpus, &declared);

    let mut csv = String::from("metric,value\n");
    let _ = writeln!(csv, "questions,{}", stats.questions);
    let _ = writeln!(csv, "total_solutions,{}", stats.total_solutions);
    let _ = writeln!(
        csv,
        "mean_per_declared_cell,{}",
        optional(stats.mean_per_declared_cell)
    );
    let _ = writeln!(
        csv,
        "mean_per_nonempty_cell,{}",
        optional(stats.mean_per_nonempty_cell)
    );
    let _ = writeln!(csv, "coverage_pct,{}", optional(stats.coverage_pct));
    for (language, count) in &stats.per_language {
        let _ = writeln!(csv, "solutions_{language},{count}");
    }

    let csv_path = reports_dir.join("stats.csv");
    write_atomic(&csv_path, csv.as_bytes())?;
    let mut written = vec![csv_path];
    if plots {
        let series: Vec<(String, f64)> = stats
            .per_language
            .iter()
            .map(|(l, c)| (l.to_string(), *c as f64))
            .collect();
        let svg_path = reports_dir.join("stats.svg");
        write_atomic(&svg_path, bar_chart("verified solutions per language", &series).as_bytes())?;
        written.push(svg_path);
    }
    Ok(written)
}

fn mixture_report(config: &PipelineConfig, reports_dir: &Path) -> StageResult<Vec<PathBuf>> {
    let work_dir = config.work_dir();
    let mix = config
        .mix
        .as_ref()
        .ok_or_else(|| StageError::validation("config has no [mix] section"))?;

    let mut csv =
        String::from("mixture,language,questions,instances,with_replacement_cells\n");
    for kind in &mix.kinds {
        let path = require_output(work_dir, &mixture_alloc_file(kind), "mix")?;
        let allocations: Vec<CellAllocation> =
            jsonl::read_all(&path).map_err(|e| StageError::Other(e.into()))?;
        let mut per_language: BTreeMap<Language, (u64, u64, u64)> = BTreeMap::new();
        for cell in allocations {
            let entry = per_language.entry(cell.language).or_default();
            if cell.target > 0 {
                entry.0 += 1;
                entry.1 += cell.target;
                entry.2 += u64::from(cell.with_replacement);
            }
        }
        for (language, (questions, instances, with_replacement)) in per_language {
            let _ = writeln!(
                csv,
                "{kind},{language},{questions},{instances},{with_replacement}"
            );
        }
    }
    let csv_path = reports_dir.join("mixture.csv");
    write_atomic(&csv_path, csv.as_bytes())?;
    Ok(vec![csv_path])
}

fn eval_report(work_dir: &Path, reports_dir: &Path, plots: bool) -> StageResult<Vec<PathBuf>> {
    let source = require_output(work_dir, EVAL_REPORT, "evaluate")?;
    let contents = std::fs::read(&source).map_err(|e| StageError::Other(e.into()))?;
    let csv_path = reports_dir.join("eval.csv");
    write_atomic(&csv_path, &contents)?;

    let mut written = vec![csv_path];
    if plots {
        let text = String::from_utf8_lossy(&contents);
        let mut series = Vec::new();
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() >= 3 {
                if let Ok(value) = fields[2].parse::<f64>() {
                    series.push((format!("{} {}", fields[0], fields[1]), value));
                }
            }
        }
        let svg_path = reports_dir.join("eval.svg");
        write_atomic(&svg_path, bar_chart("evaluation metrics", &series).as_bytes())?;
        written.push(svg_path);
    }
    Ok(written)
}

fn alignment_report(work_dir: &Path, reports_dir: &Path, plots: bool) -> StageResult<Vec<PathBuf>> {
    let source = require_output(work_dir, ALIGN_REPORT_JSON, "align")?;
    let report: AlignmentReport = serde_json::from_str(
        &std::fs::read_to_string(&source).map_err(|e| StageError::Other(e.into()))?,
    )
    .map_err(|e| StageError::Other(anyhow::anyhow!("alignment report parse: {e}")))?;

    let csv_path = reports_dir.join("alignment.csv");
    write_atomic(&csv_path, report.to_csv().as_bytes())?;

    let mut written = vec![csv_path];
    if plots {
        for metric in ["retrieval_accuracy", "adjusted_cosine"] {
            let series = report.averaged_over_pairs(metric);
            let svg_path = reports_dir.join(format!("alignment_{metric}.svg"));
            write_atomic(
                &svg_path,
                line_chart(&format!("{metric} by layer (pair-averaged)"), &series).as_bytes(),
            )?;
            written.push(svg_path);
        }
    }
    Ok(written)
}

fn optional(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.6}"),
        None => "undefined".to_string(),
    }
}

// Minimal deterministic SVG renderers.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    )
}

fn bar_chart(title: &str, series: &[(String, f64)]) -> String {
    let mut svg = svg_header(title);
    if !series.is_empty() {
        let max = series.iter().map(|(_, v)| *v).fold(f64::MIN, f64::max).max(1e-9);
        let band = (WIDTH - 2.0 * MARGIN) / series.len() as f64;
        for (i, (label, value)) in series.iter().enumerate() {
            let h = (value / max) * (HEIGHT - 2.0 * MARGIN);
            let x = MARGIN + i as f64 * band;
            let y = HEIGHT - MARGIN - h;
            let _ = write!(
                svg,
                "<rect x=\"{:.1}\" y=\"{y:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"#4878a8\"/>\n\
                 <text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"9\">{}</text>\n",
                x + band * 0.1,
                band * 0.8,
                x + band / 2.0,
                HEIGHT - MARGIN + 14.0,
                xml_escape(label)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn line_chart(title: &str, series: &[(usize, f64)]) -> String {
    let mut svg = svg_header(title);
    if series.len() > 1 {
        let min = series.iter().map(|(_, v)| *v).fold(f64::MAX, f64::min);
        let max = series.iter().map(|(_, v)| *v).fold(f64::MIN, f64::max);
        let span = (max - min).max(1e-9);
        let step = (WIDTH - 2.0 * MARGIN) / (series.len() - 1) as f64;
        let points: Vec<String> = series
            .iter()
            .enumerate()
            .map(|(i, (_, value))| {
                let x = MARGIN + i as f64 * step;
                let y = HEIGHT - MARGIN - (value - min) / span * (HEIGHT - 2.0 * MARGIN);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        let _ = write!(
            svg,
            "<polyline fill=\"none\" stroke=\"#a84848\" stroke-width=\"2\" points=\"{}\"/>\n",
            points.join(" ")
        );
        let _ = write!(
            svg,
            "<text x=\"{MARGIN}\" y=\"{}\" font-family=\"monospace\" font-size=\"10\">min {min:.4} / max {max:.4}</text>\n",
            HEIGHT - 12.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
