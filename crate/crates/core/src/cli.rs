//! Command dispatch and the files each command writes.
//!
//! | command    | table                  | summary                   | plots |
//! |------------|------------------------|---------------------------|-------|
//! | `clt`      | `clt_trials.csv`       | `clt_summary.json`        | `clt_{beta,linear}_stat.svg` |
//! | `coverage` | `coverage_trials.csv`  | `coverage_summary.json`   | per-spike `coverage_spike{j}_{beta,linear}_stat.svg` |
//! | `mixture`  | `mixture_trials.csv`   | `mixture_summary.json`    | per-spike `mixture_spike{j}_{beta,linear}_stat.svg` |
//! | `sweep`    | `sweep_curve.csv`      | `sweep_summary.json`      | none |
//! | `weights`  | `weights.csv`          | `weights_summary.json`    | none |
//!
//! Every summary carries the fully resolved config under `"config"`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use crate::config::{RunConfig, Subcommand, WeightsConfig};
use crate::error::{invalid, Error, Result};
use crate::experiments::{
    check_mixture_config, coverage_summary, mixture_summary, run_clt_experiment, run_threshold_sweep, run_trials, DirectionSpec,
    ExperimentConfig, InitSpec, SweepSpec, TrialTable,
};
use crate::inference::{mixture_weights, mixture_weights_mc};
use crate::rng::{derive_stream, StreamKey};
use crate::stats::{histogram, normal_pdf, uniform_edges, Histogram};

/// Paths written by one command.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputBundle {
    pub trials_csv_path: PathBuf,
    pub summary_json_path: PathBuf,
    pub svg_paths: Vec<PathBuf>,
}

pub const SVG_WIDTH: f64 = 640.0;
pub const SVG_HEIGHT: f64 = 400.0;
pub const SVG_MARGIN_LEFT: f64 = 50.0;
pub const SVG_MARGIN_RIGHT: f64 = 20.0;
pub const SVG_MARGIN_TOP: f64 = 40.0;
pub const SVG_MARGIN_BOTTOM: f64 = 40.0;
const OVERLAY_POINTS: usize = 200;
const HIST_RANGE: f64 = 4.0;
const HIST_BINS: usize = 40;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Standalone SVG of `hist` on a density scale, with an optional density curve
/// drawn over the same x range. Output depends only on the inputs.
pub fn emit_svg_histogram(hist: &Histogram, overlay: Option<&dyn Fn(f64) -> f64>, title: &str) -> Result<String> {
    if hist.bins() == 0 || hist.total == 0 {
        return Err(invalid("cannot plot an empty histogram"));
    }
    let (x0, x1) = (hist.edges[0], hist.edges[hist.bins()]);
    let curve: Vec<(f64, f64)> = overlay
        .map(|f| {
            (0..=OVERLAY_POINTS)
                .map(|i| {
                    let x = x0 + (x1 - x0) * i as f64 / OVERLAY_POINTS as f64;
                    (x, f(x))
                })
                .collect()
        })
        .unwrap_or_default();
    let top = (0..hist.bins())
        .map(|b| hist.density(b))
        .chain(curve.iter().map(|p| p.1))
        .fold(0.0f64, f64::max);
    let y_max = if top > 0.0 { top * 1.05 } else { 1.0 };

    let plot_w = SVG_WIDTH - SVG_MARGIN_LEFT - SVG_MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - SVG_MARGIN_TOP - SVG_MARGIN_BOTTOM;
    let sx = |x: f64| SVG_MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| SVG_MARGIN_TOP + plot_h * (1.0 - y / y_max);
    let base = SVG_HEIGHT - SVG_MARGIN_BOTTOM;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        SVG_WIDTH / 2.0,
        escape(title)
    );
    for b in 0..hist.bins() {
        let d = hist.density(b);
        let (l, r) = (sx(hist.edges[b]), sx(hist.edges[b + 1]));
        let y = sy(d);
        let _ = writeln!(
            s,
            r##"<rect class="bar" x="{l:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5" data-density="{d}"/>"##,
            r - l,
            base - y
        );
    }
    if !curve.is_empty() {
        let pts: Vec<String> = curve.iter().map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r##"<polyline class="overlay" fill="none" stroke="#d62728" stroke-width="2" points="{}"/>"##,
            pts.join(" ")
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{SVG_MARGIN_LEFT}" y1="{base}" x2="{:.3}" y2="{base}" stroke="black"/>"#,
        SVG_WIDTH - SVG_MARGIN_RIGHT
    );
    let _ = writeln!(
        s,
        r#"<line x1="{SVG_MARGIN_LEFT}" y1="{SVG_MARGIN_TOP}" x2="{SVG_MARGIN_LEFT}" y2="{base}" stroke="black"/>"#
    );
    for i in 0..=4 {
        let x = x0 + (x1 - x0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            sx(x),
            base + 16.0,
            trim_label(x)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
        SVG_MARGIN_LEFT - 4.0,
        SVG_MARGIN_TOP + 4.0,
        trim_label(y_max)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn trim_label(x: f64) -> String {
    let t = format!("{x:.3}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" { "0".into() } else { t.to_string() }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn init_json(init: &InitSpec) -> Value {
    match *init {
        InitSpec::Random => json!({ "kind": "random" }),
        InitSpec::Warm { target, mix } => json!({ "kind": "warm", "target": target, "mix": mix }),
        InitSpec::Overlap { target, overlap } => json!({ "kind": "overlap", "target": target, "overlap": overlap }),
    }
}

pub fn experiment_config_json(c: &ExperimentConfig) -> Value {
    let a = match &c.a_spec {
        DirectionSpec::Paper => json!("paper"),
        DirectionSpec::Explicit(p) => json!(p.iter().map(|(i, w)| json!([i, w])).collect::<Vec<_>>()),
    };
    json!({
        "n": c.n,
        "k": c.k,
        "r": c.r,
        "betas": c.betas,
        "trials": c.trials,
        "init": init_json(&c.init),
        "a": a,
        "alpha": c.alpha,
        "seed": c.seed,
        "t_max": c.iteration.t_max,
        "tol": c.iteration.tol,
        "fixed_spikes": c.fixed_spikes,
        "noise": c.noise,
        "memory_budget": c.memory_budget,
    })
}

pub fn run_config_json(config: &RunConfig) -> Value {
    match config {
        RunConfig::Experiment(c) => experiment_config_json(c),
        RunConfig::Sweep(c, s) => {
            let mut v = experiment_config_json(c);
            v["grid"] = json!(s.grid);
            v["mode"] = json!(s.mode);
            v
        }
        RunConfig::Weights(w) => json!({
            "k": w.k,
            "betas": w.betas,
            "mc_samples": w.mc_samples,
            "seed": w.seed,
        }),
    }
}

struct Writer<'a> {
    dir: &'a Path,
    cmd: Subcommand,
    svgs: Vec<PathBuf>,
}

impl Writer<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn plot(&mut self, name: &str, samples: &[f64], title: &str) -> Result<()> {
        if samples.is_empty() {
            return Ok(());
        }
        let hist = histogram(samples, &uniform_edges(-HIST_RANGE, HIST_RANGE, HIST_BINS))?;
        if hist.total == 0 {
            return Ok(());
        }
        let svg = emit_svg_histogram(&hist, Some(&normal_pdf), title)?;
        let path = self.path(&format!("{}_{name}.svg", self.cmd));
        write_file(&path, &svg)?;
        self.svgs.push(path);
        Ok(())
    }

    /// One pair of plots for rank one, one pair per landing spike otherwise.
    fn plot_stats(&mut self, table: &TrialTable) -> Result<()> {
        let groups: Vec<(String, Option<usize>)> = if table.r == 1 {
            vec![(String::new(), None)]
        } else {
            (0..table.r).map(|j| (format!("spike{j}_"), Some(j))).collect()
        };
        for (prefix, spike) in groups {
            let members: Vec<_> = table
                .converged()
                .filter(|(r, _)| spike.is_none() || r.converged_index == spike)
                .map(|(_, i)| (i.beta_stat, i.linear_stat))
                .collect();
            let label = spike.map(|j| format!(" (spike {j})")).unwrap_or_default();
            let b: Vec<f64> = members.iter().map(|p| p.0).collect();
            let l: Vec<f64> = members.iter().map(|p| p.1).collect();
            self.plot(&format!("{prefix}beta_stat"), &b, &format!("normalized beta estimate{label}"))?;
            self.plot(&format!("{prefix}linear_stat"), &l, &format!("normalized linear functional{label}"))?;
        }
        Ok(())
    }
}

fn weights_outputs(w: &WeightsConfig) -> Result<(String, Value)> {
    let p = mixture_weights(&w.betas, w.k)?.p;
    let mc = if w.mc_samples > 0 {
        let mut s = derive_stream(&StreamKey::new(w.seed, "weights-mc", 0));
        Some(mixture_weights_mc(&w.betas, w.k, w.mc_samples, &mut s)?.p)
    } else {
        None
    };
    let mut csv = String::from(if mc.is_some() { "spike,beta,p,p_mc\n" } else { "spike,beta,p\n" });
    for (j, (b, pj)) in w.betas.iter().zip(&p).enumerate() {
        match &mc {
            Some(m) => csv.push_str(&format!("{j},{b},{pj},{}\n", m[j])),
            None => csv.push_str(&format!("{j},{b},{pj}\n")),
        }
    }
    Ok((csv, json!({ "p": p, "p_mc": mc })))
}

fn expect_experiment(cmd: Subcommand, config: &RunConfig) -> Result<&ExperimentConfig> {
    match config {
        RunConfig::Experiment(c) => Ok(c),
        _ => Err(Error::InvalidConfig(format!("`{cmd}` needs an experiment config"))),
    }
}

fn expect_sweep(config: &RunConfig) -> Result<(&ExperimentConfig, &SweepSpec)> {
    match config {
        RunConfig::Sweep(c, s) => Ok((c, s)),
        _ => Err(Error::InvalidConfig("`sweep` needs a grid".into())),
    }
}

/// Runs `cmd` and writes its table, summary and plots into `out_dir`.
pub fn run_command(cmd: Subcommand, config: &RunConfig, out_dir: &Path) -> Result<OutputBundle> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let start = Instant::now();
    let mut w = Writer {
        dir: out_dir,
        cmd,
        svgs: Vec::new(),
    };
    let (csv_name, csv, summary) = match cmd {
        Subcommand::Clt => {
            let report = run_clt_experiment(expect_experiment(cmd, config)?)?;
            w.plot_stats(&report.table)?;
            ("clt_trials.csv", report.table.to_csv(), json!(report.summary))
        }
        Subcommand::Coverage => {
            let c = expect_experiment(cmd, config)?;
            let table = run_trials(c)?;
            w.plot_stats(&table)?;
            ("coverage_trials.csv", table.to_csv(), json!(coverage_summary(c, &table)))
        }
        Subcommand::Mixture => {
            let c = expect_experiment(cmd, config)?;
            check_mixture_config(c)?;
            let table = run_trials(c)?;
            w.plot_stats(&table)?;
            ("mixture_trials.csv", table.to_csv(), json!(mixture_summary(c, &table)?))
        }
        Subcommand::Sweep => {
            let (c, s) = expect_sweep(config)?;
            let table = run_threshold_sweep(c, s)?;
            ("sweep_curve.csv", table.to_csv(), json!(table))
        }
        Subcommand::Weights => {
            let RunConfig::Weights(wc) = config else {
                return Err(Error::InvalidConfig("`weights` needs k and beta".into()));
            };
            let (csv, summary) = weights_outputs(wc)?;
            ("weights.csv", csv, summary)
        }
    };
    let summary_name = format!("{cmd}_summary.json");
    let doc = json!({
        "command": cmd.as_str(),
        "config": run_config_json(config),
        "summary": summary,
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
    });
    let trials_csv_path = w.path(csv_name);
    write_file(&trials_csv_path, &csv)?;
    let summary_json_path = w.path(&summary_name);
    let text = serde_json::to_string_pretty(&doc).map_err(|e| invalid(e.to_string()))?;
    write_file(&summary_json_path, &(text + "\n"))?;
    Ok(OutputBundle {
        trials_csv_path,
        summary_json_path,
        svg_paths: w.svgs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    #[test]
    fn single_bin_single_rect() {
        let h = histogram(&[0.25], &[0.0, 0.5]).unwrap();
        let svg = emit_svg_histogram(&h, None, "one").unwrap();
        assert_eq!(svg.matches(r#"class="bar""#).count(), 1);
        assert!(svg.contains(r#"data-density="2""#));
        assert!(!svg.contains("polyline"));
    }

    #[test]
    fn empty_histogram_rejected() {
        let h = histogram(&[], &[0.0, 1.0]).unwrap();
        assert!(emit_svg_histogram(&h, None, "x").is_err());
    }

    #[test]
    fn svg_is_deterministic_and_overlay_peaks_at_zero() {
        let draw = || {
            let mut s = derive_stream(&StreamKey::new(3, "svg", 0));
            let xs: Vec<f64> = (0..5000).map(|_| s.next_standard_normal()).collect();
            let h = histogram(&xs, &uniform_edges(-4.0, 4.0, 40)).unwrap();
            emit_svg_histogram(&h, Some(&normal_pdf), "N(0,1) <check>").unwrap()
        };
        let a = draw();
        assert_eq!(a, draw());
        assert!(a.contains("&lt;check&gt;"));

        let pts = a.split(r#"points=""#).nth(1).unwrap().split('"').next().unwrap();
        let (px, _) = pts
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse::<f64>().unwrap(), y.parse::<f64>().unwrap())
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        let plot_w = SVG_WIDTH - SVG_MARGIN_LEFT - SVG_MARGIN_RIGHT;
        let x = -4.0 + (px - SVG_MARGIN_LEFT) / plot_w * 8.0;
        assert!(x.abs() <= 0.2, "peak at {x}");
    }

    #[test]
    fn weights_command_writes_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let config = RunConfig::Weights(WeightsConfig {
            k: 3,
            betas: vec![1.0, 1.2],
            mc_samples: 0,
            seed: 0,
        });
        let out = run_command(Subcommand::Weights, &config, dir.path()).unwrap();
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out.summary_json_path).unwrap()).unwrap();
        let p = doc["summary"]["p"].as_array().unwrap();
        let exact = 2.0 / std::f64::consts::PI * (1.0f64 / 1.2).atan();
        assert!((p[0].as_f64().unwrap() - exact).abs() < 1e-8);
        assert!((p[1].as_f64().unwrap() - (1.0 - exact)).abs() < 1e-8);
        assert_eq!(doc["config"]["k"], 3);
        assert!(out.svg_paths.is_empty());
    }
}
