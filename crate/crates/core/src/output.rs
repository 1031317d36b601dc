//! CSV, summary, plot and manifest artifacts.
//!
//! Renderers are pure functions returning strings; [`OutputDir`] writes them
//! and keeps a checksum for the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::agent::AgentMode;
use crate::config::RunConfig;
use crate::env::TwoAgentVariant;
use crate::error::{Error, Result};
use crate::experiments::{Arm, DetectResult, EmpathyResult, FosterResult, Summary};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// An output directory that has passed a write check.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<(String, String)>,
}

impl OutputDir {
    /// Creates `root` if needed and checks that files can be written there.
    pub fn prepare(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let probe = root.join(".write-check");
        fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
        fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
        Ok(Self {
            root,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `contents` to the relative path `name`, creating parent directories.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.retain(|(n, _)| n != name);
        self.written
            .push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    pub fn artifacts(&self) -> &[(String, String)] {
        &self.written
    }

    /// Writes `manifest.txt`. Call with `complete = false` before simulating
    /// so an interrupted run is recognizable.
    pub fn write_manifest(&self, command: &str, config: &RunConfig, complete: bool) -> Result<()> {
        let text = manifest_text(command, config, complete, &self.written);
        let path = self.root.join("manifest.txt");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

pub fn manifest_text(
    command: &str,
    config: &RunConfig,
    complete: bool,
    artifacts: &[(String, String)],
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "status = {}",
        if complete { "complete" } else { "incomplete" }
    );
    let _ = writeln!(out, "command = {command}");
    let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
    for (k, v) in config.entries() {
        let _ = writeln!(out, "config.{k} = {v}");
    }
    let mut sorted = artifacts.to_vec();
    sorted.sort();
    for (name, sha) in sorted {
        let _ = writeln!(out, "sha256.{name} = {sha}");
    }
    out
}

pub fn foster_csv(results: &[FosterResult]) -> String {
    let mut out =
        String::from("variant,mode,replicate,latent_social,bad_pct,bad_pct_per_step,loops\n");
    for r in results {
        for rep in &r.replicates {
            let m = &rep.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.variant.number(),
                rep.mode.name(),
                rep.replicate,
                m.latent_social,
                m.bad_pct,
                m.bad_pct_per_step,
                m.loops
            );
        }
    }
    out
}

/// Aggregates in the layout of a modes-by-columns table: two metric rows
/// per environment variant.
pub fn foster_summary_csv(results: &[FosterResult]) -> String {
    let modes = summary_modes(results);
    let mut out = String::from("variant,metric");
    for m in &modes {
        let _ = write!(out, ",{0}_mean,{0}_std", m.name());
    }
    out.push_str(",replicates\n");
    for r in results {
        for (metric, pick) in metric_rows() {
            let _ = write!(out, "{},{metric}", r.variant.number());
            for &m in &modes {
                match r.summary(m) {
                    Some(s) => {
                        let v = pick(s);
                        let _ = write!(out, ",{},{}", v.mean, v.std);
                    }
                    None => out.push_str(",,"),
                }
            }
            let count = r.summaries.first().map_or(0, |s| s.latent_social.count);
            let _ = writeln!(out, ",{count}");
        }
    }
    out
}

type MetricPick = fn(&crate::experiments::ModeSummary) -> Summary;

fn metric_rows() -> [(&'static str, MetricPick); 2] {
    [
        ("latent_social", |s| s.latent_social),
        ("bad_pct", |s| s.bad_pct),
    ]
}

fn summary_modes(results: &[FosterResult]) -> Vec<AgentMode> {
    AgentMode::ALL
        .into_iter()
        .filter(|&m| results.iter().any(|r| r.summary(m).is_some()))
        .collect()
}

/// Plain-text table, one column per agent mode.
pub fn foster_summary_table(results: &[FosterResult]) -> String {
    let modes = summary_modes(results);
    let mut out = format!("{:<34}", "");
    for m in &modes {
        let _ = write!(out, "{:>20}", m.name());
    }
    out.push('\n');
    for r in results {
        for (metric, pick) in metric_rows() {
            let label = match metric {
                "latent_social" => "latent average social reward",
                _ => "bad actions per loop, %",
            };
            let _ = write!(out, "{:<34}", format!("v{} {label}", r.variant.number()));
            for &m in &modes {
                let cell = r
                    .summary(m)
                    .map(|s| {
                        let v = pick(s);
                        format!("{:.3} ± {:.3}", v.mean, v.std)
                    })
                    .unwrap_or_default();
                let _ = write!(out, "{cell:>20}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn detect_csv(result: &DetectResult) -> String {
    let mut out = String::from("variant,run,replicate,cycle,dl_one,dl_two,verdict\n");
    for r in &result.replicates {
        for (run, curve, det) in [
            ("agent", &r.curve, &r.detection),
            ("control", &r.control_curve, &r.control_detection),
        ] {
            for i in 0..curve.len() {
                let _ = writeln!(
                    out,
                    "{},{run},{},{},{},{},{}",
                    r.variant.name(),
                    r.replicate,
                    curve.cycles[i],
                    curve.dl_one[i],
                    curve.dl_two[i],
                    det.present
                );
            }
        }
    }
    out
}

/// Relative paths and contents of one curve file per replicate and run.
pub fn detect_curve_files(result: &DetectResult) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for r in &result.replicates {
        let v = r.variant.name();
        files.push((
            format!("detect_curves/{v}_agent_{:03}.csv", r.replicate),
            r.curve.to_csv(),
        ));
        files.push((
            format!("detect_curves/{v}_control_{:03}.csv", r.replicate),
            r.control_curve.to_csv(),
        ));
    }
    files
}

pub fn detect_summary_csv(result: &DetectResult) -> String {
    let mut out = String::from(
        "variant,replicates,detection_rate,control_false_positive_rate,first_cycle_two_longer_rate,mean_crossover\n",
    );
    for v in TwoAgentVariant::ALL {
        let reps: Vec<_> = result.for_variant(v).collect();
        if reps.is_empty() {
            continue;
        }
        let n = reps.len() as f64;
        let first_longer = reps
            .iter()
            .filter(|r| r.curve.dl_two[0] > r.curve.dl_one[0])
            .count() as f64
            / n;
        let crossovers: Vec<f64> = reps
            .iter()
            .filter_map(|r| r.detection.crossover)
            .map(|c| c as f64)
            .collect();
        let mean_crossover = if crossovers.is_empty() {
            String::new()
        } else {
            (crossovers.iter().sum::<f64>() / crossovers.len() as f64).to_string()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            v.name(),
            reps.len(),
            result.detection_rate(v),
            result.control_false_positive_rate(v),
            first_longer,
            mean_crossover
        );
    }
    out
}

/// Mean curves over replicates for one variant, or `None` without replicates.
pub fn mean_curves(
    result: &DetectResult,
    v: TwoAgentVariant,
) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let reps: Vec<_> = result.for_variant(v).collect();
    let first = reps.first()?;
    let n = reps.len() as f64;
    let len = first.curve.len();
    let x: Vec<f64> = first.curve.cycles.iter().map(|&c| c as f64).collect();
    let mean = |f: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        (0..len)
            .map(|i| (0..reps.len()).map(|r| f(r, i)).sum::<f64>() / n)
            .collect()
    };
    let one = mean(&|r, i| reps[r].curve.dl_one[i]);
    let two = mean(&|r, i| reps[r].curve.dl_two[i]);
    Some((x, one, two))
}

pub fn detect_svg(result: &DetectResult, v: TwoAgentVariant) -> Option<String> {
    let (x, one, two) = mean_curves(result, v)?;
    Some(line_plot(
        &format!("Description length, {} environment", v.name()),
        "cycle",
        "bits",
        &x,
        &[
            ("one-agent model", &one, "#333333"),
            ("two-agent model", &two, "#9ab7d3"),
        ],
    ))
}

pub fn empathy_csv(result: &EmpathyResult) -> String {
    let mut out = String::from("variant,arm,replicate,mean_r1,mean_r2,env_sha256\n");
    for o in &result.outcomes {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            o.variant.name(),
            o.arm.name(),
            o.replicate,
            o.mean_r1,
            o.mean_r2,
            o.env_checksum
        );
    }
    out
}

pub fn empathy_summary_csv(result: &EmpathyResult) -> String {
    let mut out = String::from("variant,arm,r1_mean,r1_std,r2_mean,r2_std,replicates\n");
    for s in &result.summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.variant.name(),
            s.arm.name(),
            s.r1.mean,
            s.r1.std,
            s.r2.mean,
            s.r2.std,
            s.r1.count
        );
    }
    out
}

pub fn empathy_svg(result: &EmpathyResult) -> String {
    let mut groups = Vec::new();
    for v in TwoAgentVariant::ALL {
        for arm in Arm::ALL {
            if let Some(s) = result.summary(v, arm) {
                groups.push((format!("{} {}", v.name(), arm.name()), s.r1.mean, s.r2.mean));
            }
        }
    }
    bar_plot("Mean rewards per step (dark r1, light r2)", &groups)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 60.0;

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn axes(s: &mut String, xlabel: &str, ylabel: &str, (y0, y1): (f64, f64)) {
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#,
        PAD - 4.0,
        H - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#,
        PAD - 4.0,
        PAD + 4.0
    );
}

pub fn line_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    x: &[f64],
    series: &[(&str, &[f64], &str)],
) -> String {
    let mut s = svg_open(title);
    let (x0, x1) = range(x.iter().copied());
    let (y0, y1) = range(series.iter().flat_map(|(_, ys, _)| ys.iter().copied()));
    axes(&mut s, xlabel, ylabel, (y0, y1));
    let px = |v: f64| PAD + (v - x0) / (x1 - x0) * (W - 1.5 * PAD);
    let py = |v: f64| H - PAD - (v - y0) / (y1 - y0) * (H - 2.0 * PAD);
    for (i, (name, ys, color)) in series.iter().enumerate() {
        let points: Vec<String> = x
            .iter()
            .zip(ys.iter())
            .map(|(&a, &b)| format!("{:.2},{:.2}", px(a), py(b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        );
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="12" height="4" fill="{color}"/>"#,
            PAD + 10.0,
            ly
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            PAD + 28.0,
            ly + 6.0,
            escape(name)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}" text-anchor="middle">{x0}</text>"#,
        H - PAD + 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x1}</text>"#,
        W - PAD / 2.0,
        H - PAD + 14.0
    );
    s.push_str("</svg>\n");
    s
}

/// Paired bars per group.
pub fn bar_plot(title: &str, groups: &[(String, f64, f64)]) -> String {
    let mut s = svg_open(title);
    let (lo, hi) = range(groups.iter().flat_map(|g| [g.1, g.2]));
    let y0 = lo.min(0.0);
    axes(&mut s, "", "mean reward", (y0, hi));
    let py = |v: f64| H - PAD - (v - y0) / (hi - y0) * (H - 2.0 * PAD);
    let slot = (W - 1.5 * PAD) / groups.len().max(1) as f64;
    for (i, (label, a, b)) in groups.iter().enumerate() {
        let x = PAD + slot * i as f64 + slot * 0.15;
        let bw = slot * 0.35;
        for (j, (v, color)) in [(*a, "#333333"), (*b, "#9ab7d3")].into_iter().enumerate() {
            let top = py(v.max(0.0));
            let height = (py(v.min(0.0)) - top).max(0.0);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{top:.2}" width="{bw:.2}" height="{height:.2}" fill="{color}"/>"#,
                x + bw * j as f64
            );
        }
        let cx = x + bw;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{}" text-anchor="end" transform="rotate(-30 {cx:.2} {})" font-size="10">{}</text>"#,
            H - PAD + 14.0,
            H - PAD + 14.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}
