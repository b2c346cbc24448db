//! CSV, manifest and PNG artifacts.

use std::fs;
use std::path::Path;

use plotters::prelude::*;
use serde_json::json;

use crate::aggregate::AggregateCurve;
use crate::experiment::{EnvSpec, ExperimentSpec, Metric};
use crate::sweep::{ExperimentResult, SweepTable};
use crate::{Error, Result};

pub const CURVES_HEADER: [&str; 5] = ["round", "policy", "mean", "std", "n"];

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `round,policy,mean,std,n` rows with 1-based rounds.
///
/// Floats use the shortest representation that parses back to the same value.
pub fn emit_csv(curves: &[AggregateCurve], path: &Path) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::Usage("no curves to write".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(CURVES_HEADER).map_err(csv_err(path))?;
    for c in curves {
        let n = c.n.to_string();
        for (i, (m, s)) in c.mean.iter().zip(&c.std).enumerate() {
            w.write_record([(i + 1).to_string(), c.label.clone(), m.to_string(), s.to_string(), n.clone()])
                .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`emit_csv`], keeping policy order.
pub fn read_csv(path: &Path) -> Result<Vec<AggregateCurve>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(CURVES_HEADER) {
        return Err(Error::Usage(format!("{}: unexpected header {:?}", path.display(), header)));
    }
    let mut curves: Vec<AggregateCurve> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |what: &str| Error::Usage(format!("{}: line {}: bad {what}", path.display(), line + 2));
        let round: usize = rec[0].parse().map_err(|_| bad("round"))?;
        let mean: f64 = rec[2].parse().map_err(|_| bad("mean"))?;
        let std: f64 = rec[3].parse().map_err(|_| bad("std"))?;
        let n: usize = rec[4].parse().map_err(|_| bad("n"))?;
        let label = &rec[1];
        let idx = match curves.iter().position(|c| c.label == label) {
            Some(i) => i,
            None => {
                curves.push(AggregateCurve {
                    label: label.to_string(),
                    mean: vec![],
                    std: vec![],
                    n,
                });
                curves.len() - 1
            }
        };
        let c = &mut curves[idx];
        if round != c.mean.len() + 1 {
            return Err(bad("round sequence"));
        }
        c.mean.push(mean);
        c.std.push(std);
    }
    Ok(curves)
}

/// Writes `policy,alpha,final_mean,final_std,n,best`.
pub fn emit_sweep_csv(table: &SweepTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["policy", "alpha", "final_mean", "final_std", "n", "best"])
        .map_err(csv_err(path))?;
    for row in &table.rows {
        let best = table
            .best
            .iter()
            .any(|b| b.policy == row.policy && b.alpha == row.alpha);
        w.write_record([
            row.policy.clone(),
            row.alpha.to_string(),
            row.final_mean.to_string(),
            row.final_std.to_string(),
            row.n.to_string(),
            best.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn env_json(env: &EnvSpec) -> serde_json::Value {
    match env {
        EnvSpec::Synthetic { k, d, noise_r } => json!({"kind": "synthetic", "K": k, "d": d, "R": noise_r}),
        EnvSpec::EndOfOptimism { eps, noise_r } => json!({"kind": "eoo", "eps": eps, "R": noise_r}),
        EnvSpec::MovieLens {
            ratings,
            k,
            d,
            min_ratings,
            factor_seed,
        } => json!({
            "kind": "movielens",
            "ratings": ratings.display().to_string(),
            "K": k,
            "d": d,
            "min_ratings": min_ratings,
            "factor_seed": factor_seed,
        }),
    }
}

/// Provenance record: the experiment, every run seed and the tool versions.
pub fn manifest_json(spec: &ExperimentSpec, result: &ExperimentResult) -> serde_json::Value {
    let policies: Vec<_> = spec
        .policies
        .iter()
        .map(|p| {
            json!({
                "policy": p.mode.label(),
                "lambda": p.lambda,
                "S": p.bound_s,
                "L": p.bound_l,
                "R": p.noise_r,
                "gamma": format!("{:?}", p.gamma_schedule),
                "alpha": p.alpha_scale,
                "C": p.constant_c,
                "T": p.horizon,
            })
        })
        .collect();
    let seeds: Vec<_> = result
        .seeds
        .iter()
        .map(|s| {
            json!({
                "policy": spec.policies[s.policy].mode.label(),
                "alpha_index": s.alpha_index,
                "repeat": s.repeat,
                "seed": s.seed,
            })
        })
        .collect();
    let best: Vec<_> = result
        .table
        .best
        .iter()
        .map(|b| json!({"policy": b.policy, "alpha": b.alpha, "final_mean": b.final_mean}))
        .collect();
    json!({
        "env": env_json(&spec.env),
        "policies": policies,
        "T": spec.horizon,
        "repeats": spec.repeats,
        "base_seed": spec.base_seed,
        "alpha_grid": spec.alpha_grid,
        "policy_grids": spec.policy_grids,
        "metric": spec.metric.label(),
        "best": best,
        "seeds": seeds,
        "versions": {
            "linimed-harness": env!("CARGO_PKG_VERSION"),
        },
    })
}

pub fn write_manifest(spec: &ExperimentSpec, result: &ExperimentResult, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&manifest_json(spec, result))
        .map_err(|e| Error::Usage(format!("manifest: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

const FONT_PATH: &str = "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf";

/// Registers a system sans-serif font once; `false` when none is available.
fn ensure_font() -> bool {
    static FONT: std::sync::OnceLock<bool> = std::sync::OnceLock::new();
    *FONT.get_or_init(|| match fs::read(FONT_PATH) {
        Ok(bytes) => {
            let bytes: &'static [u8] = Box::leak(bytes.into_boxed_slice());
            plotters::style::register_font("sans-serif", FontStyle::Normal, bytes).is_ok()
        }
        Err(_) => false,
    })
}

const PALETTE: [RGBColor; 7] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(127, 127, 127),
];

/// Draws each mean curve with a shaded `± std` band.
pub fn emit_plot(curves: &[AggregateCurve], metric: Metric, path: &Path) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::Usage("no curves to plot".into()));
    }
    let plot_err = |e: &dyn std::fmt::Display| Error::Plot(e.to_string());
    let rounds = curves.iter().map(|c| c.mean.len()).max().unwrap_or(0).max(1);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in curves {
        for (m, s) in c.mean.iter().zip(&c.std) {
            lo = lo.min(m - s);
            hi = hi.max(m + s);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if metric == Metric::CumulativeRegret {
        lo = lo.min(0.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let labels = ensure_font();

    let root = BitMapBackend::new(path, (1024, 640)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut builder = ChartBuilder::on(&root);
    builder.margin(16);
    if labels {
        builder.x_label_area_size(40).y_label_area_size(64);
    }
    let mut chart = builder
        .build_cartesian_2d(1f64..rounds as f64, lo..hi)
        .map_err(|e| plot_err(&e))?;
    if labels {
        chart
            .configure_mesh()
            .x_desc("round")
            .y_desc(metric.label())
            .draw()
            .map_err(|e| plot_err(&e))?;
    } else {
        chart
            .configure_mesh()
            .x_labels(0)
            .y_labels(0)
            .draw()
            .map_err(|e| plot_err(&e))?;
    }
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper = c.mean.iter().zip(&c.std).enumerate().map(|(t, (m, s))| ((t + 1) as f64, m + s));
        let lower = c.mean.iter().zip(&c.std).enumerate().rev().map(|(t, (m, s))| ((t + 1) as f64, m - s));
        chart
            .draw_series(std::iter::once(Polygon::new(upper.chain(lower).collect::<Vec<_>>(), color.mix(0.2))))
            .map_err(|e| plot_err(&e))?;
        let line = chart
            .draw_series(LineSeries::new(
                c.mean.iter().enumerate().map(|(t, m)| ((t + 1) as f64, *m)),
                color.stroke_width(2),
            ))
            .map_err(|e| plot_err(&e))?;
        if labels {
            line.label(c.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        }
    }
    if labels {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .position(if metric.higher_is_better() {
                SeriesLabelPosition::LowerRight
            } else {
                SeriesLabelPosition::UpperLeft
            })
            .draw()
            .map_err(|e| plot_err(&e))?;
    }
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(label: &str, mean: Vec<f64>, std: Vec<f64>, n: usize) -> AggregateCurve {
        AggregateCurve {
            label: label.into(),
            mean,
            std,
            n,
        }
    }

    #[test]
    fn header_and_rounds() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("curves.csv");
        emit_csv(&[curve("LinUCB", vec![0.1, 0.2, 0.30000000000000004], vec![0.0; 3], 1)], &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("round,policy,mean,std,n"));
        let rounds: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(rounds, vec!["1", "2", "3"]);
    }

    #[test]
    fn empty_curves_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_csv(&[], &dir.path().join("c.csv")).is_err());
        assert!(emit_plot(&[], Metric::Ctr, &dir.path().join("p.png")).is_err());
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let c = [curve("a", vec![1.0], vec![0.0], 1)];
        let err = emit_csv(&c, Path::new("/nonexistent-dir/x/curves.csv")).unwrap_err();
        assert!(matches!(err, Error::Csv { .. } | Error::Io { .. }));
    }

    #[test]
    fn plot_writes_png() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("plot.png");
        let c = [
            curve("LinUCB", vec![0.0, 1.0, 1.5], vec![0.0, 0.2, 0.3], 2),
            curve("LinIMED-3", vec![0.0, 0.5, 0.7], vec![0.0, 0.1, 0.1], 2),
        ];
        emit_plot(&c, Metric::CumulativeRegret, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[1..4], b"PNG");
    }
}
