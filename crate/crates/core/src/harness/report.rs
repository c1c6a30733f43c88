//! Text table and CSV renderings of a [`MetricsReport`].
//!
//! The CSV starts with `#`-prefixed lines (format version, run settings),
//! then one row per episode under a fixed header, then a `#`-prefixed
//! summary block. Readers that skip `#` lines see a plain CSV table.

use std::fmt::Write as _;

use crate::format::{fmt_num, parse_finite};
use crate::metrics::{EpisodeSummary, MetricsReport, ProfileRow, Stats};

pub const CSV_VERSION: &str = "navbench-csv v1";
pub const TABLE_VERSION: &str = "navbench-report v1";

/// Per-episode columns, in schema order. New columns are only ever appended.
pub const CSV_COLUMNS: [&str; 12] = [
    "scene",
    "episode",
    "goal",
    "success",
    "path_length",
    "geodesic_length",
    "final_distance",
    "steps",
    "rotations",
    "infractions",
    "termination",
    "coverage",
];

/// Run description printed with every report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportContext {
    pub agent: String,
    pub privileged: bool,
    pub settings: Vec<(String, String)>,
}

fn stats_text(s: &Stats) -> String {
    format!(
        "mean {:.4}  median {:.4}  max {:.4}",
        s.mean, s.median, s.max
    )
}

/// Aligned text table; SPL is always the first measure.
pub fn emit_table(report: &MetricsReport, ctx: &ReportContext) -> String {
    let mut rows: Vec<(String, String)> = vec![
        ("SPL".into(), format!("{:.4}", report.spl)),
        ("success rate".into(), format!("{:.4}", report.success_rate)),
        ("episodes".into(), report.n_episodes.to_string()),
        (
            "final distance (m)".into(),
            stats_text(&report.final_distance),
        ),
        (
            "final distance / optimal".into(),
            stats_text(&report.final_distance_normalized),
        ),
        ("infractions".into(), {
            format!(
                "{}  total {}",
                stats_text(&report.infractions),
                report.total_infractions()
            )
        }),
        ("steps".into(), stats_text(&report.steps)),
        ("rotations".into(), stats_text(&report.rotations)),
    ];
    if let Some(c) = report.coverage {
        rows.push(("exploration coverage".into(), format!("{c:.4}")));
    }
    for p in &report.tau_sweep.points {
        rows.push((
            format!("SPL @ tau={}", fmt_num(p.tau)),
            format!("{:.4}  (success {:.4})", p.spl, p.success_rate),
        ));
    }
    if report.tau_sweep.fixed_rows > 0 {
        rows.push((
            "tau-independent episodes".into(),
            report.tau_sweep.fixed_rows.to_string(),
        ));
    }
    for (t, rate) in report.efficiency_curve.iter().step_by(5) {
        rows.push((
            format!("success w/ efficiency >= {t:.2}"),
            format!("{rate:.4}"),
        ));
    }
    let hist = report
        .efficiency_histogram
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    rows.push(("efficiency histogram (20 bins)".into(), hist));
    rows.push(("agent".into(), ctx.agent.clone()));
    rows.push((
        "privileged".into(),
        if ctx.privileged { "yes (full map)" } else { "no" }.into(),
    ));

    let width = rows
        .iter()
        .map(|(k, _)| k.len())
        .chain(ctx.settings.iter().map(|(k, _)| k.len() + 2))
        .max()
        .unwrap_or(0);
    let mut out = format!("{TABLE_VERSION}\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    if !ctx.settings.is_empty() {
        out.push_str("config\n");
        for (k, v) in &ctx.settings {
            let key = format!("  {k}");
            let _ = writeln!(out, "{key:<width$}  {v}");
        }
    }
    out
}

/// Versioned CSV with a summary block.
pub fn emit_csv(report: &MetricsReport, ctx: &ReportContext) -> String {
    let mut out = format!("# {CSV_VERSION}\n");
    let _ = writeln!(out, "# agent={} privileged={}", ctx.agent, ctx.privileged);
    for (k, v) in &ctx.settings {
        let _ = writeln!(out, "# config {k}={v}");
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in &report.rows {
        w.write_record([
            r.scene_id.clone(),
            r.episode_id.to_string(),
            r.goal_kind.to_string(),
            (r.success as u8).to_string(),
            fmt_num(r.path_length),
            fmt_num(r.geodesic_length),
            fmt_num(r.final_distance),
            r.steps.to_string(),
            r.rotations.to_string(),
            r.infractions.to_string(),
            r.termination.to_string(),
            r.coverage.map_or(String::new(), fmt_num),
        ])
        .expect("in-memory write");
    }
    let body = w.into_inner().expect("in-memory flush");
    out.push_str(&String::from_utf8(body).expect("utf-8 fields"));
    let _ = writeln!(out, "# summary spl={}", fmt_num(report.spl));
    let _ = writeln!(out, "# summary success_rate={}", fmt_num(report.success_rate));
    let _ = writeln!(out, "# summary episodes={}", report.n_episodes);
    let _ = writeln!(
        out,
        "# summary final_distance_mean={} final_distance_median={}",
        fmt_num(report.final_distance.mean),
        fmt_num(report.final_distance.median)
    );
    let _ = writeln!(
        out,
        "# summary infractions_mean={} infractions_max={}",
        fmt_num(report.infractions.mean),
        fmt_num(report.infractions.max)
    );
    if let Some(c) = report.coverage {
        let _ = writeln!(out, "# summary coverage={}", fmt_num(c));
    }
    for p in &report.tau_sweep.points {
        let _ = writeln!(
            out,
            "# summary tau={} spl={} success_rate={}",
            fmt_num(p.tau),
            fmt_num(p.spl),
            fmt_num(p.success_rate)
        );
    }
    out
}

/// Reads back the per-episode rows of [`emit_csv`] output as string maps.
pub fn parse_csv_rows(text: &str) -> Result<Vec<Vec<String>>, csv::Error> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_COLUMNS {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "unexpected CSV columns",
        )));
    }
    r.records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect()
}

/// Per-episode rows and run description recovered from [`emit_csv`] output.
pub fn read_csv_report(text: &str) -> Result<(Vec<EpisodeSummary>, ReportContext), String> {
    let mut lines = text.lines();
    if lines.next() != Some(&format!("# {CSV_VERSION}")) {
        return Err(format!("not a {CSV_VERSION} file"));
    }
    let mut ctx = ReportContext::default();
    for line in lines {
        if let Some(rest) = line.strip_prefix("# agent=") {
            let (agent, privileged) = rest
                .split_once(" privileged=")
                .ok_or("malformed agent line")?;
            ctx.agent = agent.to_string();
            ctx.privileged = privileged == "true";
        } else if let Some(kv) = line.strip_prefix("# config ") {
            let (k, v) = kv.split_once('=').ok_or("malformed config line")?;
            ctx.settings.push((k.to_string(), v.to_string()));
        } else if !line.starts_with('#') {
            break;
        }
    }
    let rows = parse_csv_rows(text).map_err(|e| e.to_string())?;
    let rows = rows
        .iter()
        .enumerate()
        .map(|(i, r)| summary_of(r).map_err(|e| format!("row {}: {e}", i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((rows, ctx))
}

fn summary_of(r: &[String]) -> Result<EpisodeSummary, String> {
    let num = |i: usize| parse_finite(&r[i]).ok_or_else(|| format!("bad {}", CSV_COLUMNS[i]));
    let int = |i: usize| r[i].parse::<u32>().map_err(|_| format!("bad {}", CSV_COLUMNS[i]));
    Ok(EpisodeSummary {
        scene_id: r[0].clone(),
        episode_id: r[1].parse().map_err(|_| "bad episode")?,
        goal_kind: r[2].parse()?,
        success: match r[3].as_str() {
            "0" => false,
            "1" => true,
            _ => return Err("bad success".into()),
        },
        path_length: num(4)?,
        geodesic_length: num(5)?,
        final_distance: if r[6] == "inf" { f64::INFINITY } else { num(6)? },
        steps: int(7)?,
        rotations: int(8)?,
        infractions: int(9)?,
        termination: r[10].parse()?,
        coverage: if r[11].is_empty() { None } else { Some(num(11)?) },
    })
}

/// Exploration–navigation profile table.
pub fn emit_profile(rows: &[ProfileRow]) -> String {
    let agent_w = rows.iter().map(|r| r.agent.len()).max().unwrap_or(5).max(5);
    let mut out = format!(
        "{:<agent_w$}  {:>10}  {:>8}  {:>8}  {:>8}  pareto\n",
        "agent", "budget_m", "SPL", "success", "coverage"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<agent_w$}  {:>10.1}  {:>8.4}  {:>8.4}  {:>8.4}  {}",
            r.agent,
            r.budget_m,
            r.spl,
            r.success_rate,
            r.coverage,
            if r.pareto { "*" } else { "" }
        );
    }
    out
}
