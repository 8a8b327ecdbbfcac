//! Run reports: per-frame metric tables, aggregates, timings, CSV layout,
//! and run comparison.
//!
//! Frozen CSV column orders (all floats serialized as `{:.9e}`):
//! - `metrics.csv`:   frame,time_s,object,te_m,re_rad,iou_mean,loss_pre,loss_post,wrench_force_n,wrench_torque_nm,iou_cam0..N
//! - `trajectory.csv`: frame,time_s,entity,x,y,z,qx,qy,qz,qw
//! - `episodes.csv`:  goal,push,start_radius_m,start_angle_rad,end_dx_m,end_dy_m,predicted_reward,pos_error_m,yaw_error_rad
//! - `aggregates.csv`: metric,mean,std
//! - `meta.csv`:      key,value
//! - `timing.csv`:    stage,calls,total_ms,mean_ms   (wall-clock; excluded
//!   from the byte-determinism guarantee)

use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug, Default)]
pub struct FrameRow {
    pub frame: usize,
    pub time: f64,
    pub object: String,
    pub te: f64,
    pub re: f64,
    pub iou: Vec<f64>,
    pub loss_pre: f64,
    pub loss_post: f64,
    pub wrench_force: f64,
    pub wrench_torque: f64,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRow {
    pub frame: usize,
    pub time: f64,
    pub entity: String,
    pub position: [f64; 3],
    pub orientation_xyzw: [f64; 4],
}

#[derive(Clone, Debug)]
pub struct EpisodeRow {
    pub goal: usize,
    pub push: usize,
    pub action: [f64; 4],
    pub predicted_reward: f64,
    pub pos_error: f64,
    pub yaw_error: f64,
}

/// Wall-clock totals per pipeline stage; the stage set is fixed.
#[derive(Clone, Debug, Default)]
pub struct StageTimings {
    pub predict_s: f64,
    pub render_s: f64,
    pub optimize_s: f64,
    pub wrench_s: f64,
    pub step_s: f64,
    pub calls: u64,
}

pub const STAGES: [&str; 5] = ["predict", "render", "optimize", "wrench", "step"];

impl StageTimings {
    fn totals(&self) -> [f64; 5] {
        [self.predict_s, self.render_s, self.optimize_s, self.wrench_s, self.step_s]
    }
}

/// Everything one scenario run produced.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub scenario_name: String,
    pub scene_name: String,
    pub mode: String,
    pub duration: f64,
    pub seed: u64,
    pub frames: Vec<FrameRow>,
    pub trajectory: Vec<TrajectoryRow>,
    pub episodes: Vec<EpisodeRow>,
    pub final_errors: Vec<(f64, f64)>,
    pub timing: StageTimings,
}

fn fnum(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

impl RunReport {
    /// Aggregate statistics, recomputable from the per-frame/per-episode
    /// tables: `(metric, mean, std)` in a fixed order.
    pub fn aggregates(&self) -> Vec<(String, f64, f64)> {
        let mut out = Vec::new();
        if !self.frames.is_empty() {
            let mut objects: Vec<String> =
                self.frames.iter().map(|r| r.object.clone()).collect();
            objects.dedup();
            objects.sort();
            objects.dedup();
            for obj in &objects {
                let rows: Vec<&FrameRow> =
                    self.frames.iter().filter(|r| &r.object == obj).collect();
                let te: Vec<f64> = rows.iter().map(|r| r.te).collect();
                let re: Vec<f64> = rows.iter().map(|r| r.re).collect();
                let iou: Vec<f64> = rows
                    .iter()
                    .filter(|r| !r.iou.is_empty())
                    .map(|r| r.iou.iter().sum::<f64>() / r.iou.len() as f64)
                    .collect();
                let (m, s) = mean_std(&te);
                out.push((format!("te_m[{obj}]"), m, s));
                let (m, s) = mean_std(&re);
                out.push((format!("re_rad[{obj}]"), m, s));
                let (m, s) = mean_std(&iou);
                out.push((format!("iou[{obj}]"), m, s));
            }
        }
        if !self.episodes.is_empty() || !self.final_errors.is_empty() {
            let firsts: Vec<&EpisodeRow> =
                self.episodes.iter().filter(|e| e.push == 0).collect();
            let agg = |rows: &[&EpisodeRow], f: fn(&EpisodeRow) -> f64| {
                mean_std(&rows.iter().map(|r| f(r)).collect::<Vec<f64>>())
            };
            let (m, s) = agg(&firsts, |e| e.predicted_reward);
            out.push(("first_push_reward".into(), m, s));
            let (m, s) = agg(&firsts, |e| e.pos_error);
            out.push(("first_push_pos_error_m".into(), m, s));
            let (m, s) = agg(&firsts, |e| e.yaw_error);
            out.push(("first_push_yaw_error_rad".into(), m, s));

            let (m, s) = mean_std(&self.final_errors.iter().map(|e| e.0).collect::<Vec<_>>());
            out.push(("final_pos_error_m".into(), m, s));
            let (m, s) = mean_std(&self.final_errors.iter().map(|e| e.1).collect::<Vec<_>>());
            out.push(("final_yaw_error_rad".into(), m, s));

            let mut pushes_per_goal = std::collections::BTreeMap::new();
            for e in &self.episodes {
                *pushes_per_goal.entry(e.goal).or_insert(0usize) += 1;
            }
            let counts: Vec<f64> = (0..self.final_errors.len())
                .map(|g| *pushes_per_goal.get(&g).unwrap_or(&0) as f64)
                .collect();
            let (m, s) = mean_std(&counts);
            out.push(("pushes_per_goal".into(), m, s));
        }
        out
    }

    fn metrics_csv(&self) -> String {
        let cams = self.frames.first().map(|r| r.iou.len()).unwrap_or(0);
        let mut s = String::from(
            "frame,time_s,object,te_m,re_rad,iou_mean,loss_pre,loss_post,wrench_force_n,wrench_torque_nm",
        );
        for c in 0..cams {
            let _ = write!(s, ",iou_cam{c}");
        }
        s.push('\n');
        for r in &self.frames {
            let iou_mean = if r.iou.is_empty() {
                0.0
            } else {
                r.iou.iter().sum::<f64>() / r.iou.len() as f64
            };
            let _ = write!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.frame,
                fnum(r.time),
                r.object,
                fnum(r.te),
                fnum(r.re),
                fnum(iou_mean),
                fnum(r.loss_pre),
                fnum(r.loss_post),
                fnum(r.wrench_force),
                fnum(r.wrench_torque),
            );
            for v in &r.iou {
                let _ = write!(s, ",{}", fnum(*v));
            }
            s.push('\n');
        }
        s
    }

    fn trajectory_csv(&self) -> String {
        let mut s = String::from("frame,time_s,entity,x,y,z,qx,qy,qz,qw\n");
        for r in &self.trajectory {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.frame,
                fnum(r.time),
                r.entity,
                fnum(r.position[0]),
                fnum(r.position[1]),
                fnum(r.position[2]),
                fnum(r.orientation_xyzw[0]),
                fnum(r.orientation_xyzw[1]),
                fnum(r.orientation_xyzw[2]),
                fnum(r.orientation_xyzw[3]),
            );
        }
        s
    }

    fn episodes_csv(&self) -> String {
        let mut s = String::from(
            "goal,push,start_radius_m,start_angle_rad,end_dx_m,end_dy_m,predicted_reward,pos_error_m,yaw_error_rad\n",
        );
        for e in &self.episodes {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                e.goal,
                e.push,
                fnum(e.action[0]),
                fnum(e.action[1]),
                fnum(e.action[2]),
                fnum(e.action[3]),
                fnum(e.predicted_reward),
                fnum(e.pos_error),
                fnum(e.yaw_error),
            );
        }
        s
    }

    fn aggregates_csv(&self) -> String {
        let mut s = String::from("metric,mean,std\n");
        for (name, mean, std) in self.aggregates() {
            let _ = writeln!(s, "{name},{},{}", fnum(mean), fnum(std));
        }
        s
    }

    fn meta_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        let _ = writeln!(s, "scenario,{}", self.scenario_name);
        let _ = writeln!(s, "scene,{}", self.scene_name);
        let _ = writeln!(s, "mode,{}", self.mode);
        let _ = writeln!(s, "duration_s,{}", fnum(self.duration));
        let _ = writeln!(s, "seed,{}", self.seed);
        let _ = writeln!(s, "frames,{}", self.frames.len());
        let _ = writeln!(s, "trajectory_rows,{}", self.trajectory.len());
        let _ = writeln!(s, "episodes,{}", self.episodes.len());
        s
    }

    fn timing_csv(&self) -> String {
        let mut s = String::from("stage,calls,total_ms,mean_ms\n");
        let totals = self.timing.totals();
        let calls = self.timing.calls.max(1);
        for (stage, total) in STAGES.iter().zip(totals) {
            let _ = writeln!(
                s,
                "{stage},{},{:.3},{:.6}",
                self.timing.calls,
                total * 1e3,
                total * 1e3 / calls as f64
            );
        }
        s
    }

    fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {} (scene {}, mode {})", self.scenario_name, self.scene_name, self.mode);
        let _ = writeln!(s, "seed: {}  duration: {:.2} s", self.seed, self.duration);
        let _ = writeln!(s, "\naggregates (mean ± std):");
        for (name, mean, std) in self.aggregates() {
            let _ = writeln!(s, "  {name}: {mean:.6} ± {std:.6}");
        }
        let _ = writeln!(s, "\ntiming:");
        let totals = self.timing.totals();
        for (stage, total) in STAGES.iter().zip(totals) {
            let _ = writeln!(s, "  {stage}: {:.1} ms total", total * 1e3);
        }
        s
    }

    /// Writes every report file into `dir`. The metric CSVs are
    /// byte-deterministic per seed; `timing.csv` and `summary.txt` are not.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("meta.csv"), self.meta_csv())?;
        std::fs::write(dir.join("aggregates.csv"), self.aggregates_csv())?;
        std::fs::write(dir.join("timing.csv"), self.timing_csv())?;
        std::fs::write(dir.join("summary.txt"), self.summary_text())?;
        if !self.frames.is_empty() {
            std::fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        }
        if !self.trajectory.is_empty() {
            std::fs::write(dir.join("trajectory.csv"), self.trajectory_csv())?;
        }
        if !self.episodes.is_empty() || self.mode == "plan" {
            std::fs::write(dir.join("episodes.csv"), self.episodes_csv())?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("cannot read '{path}': {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error("malformed report file '{0}'")]
    Malformed(String),
    #[error("mismatched scenarios: {0}")]
    MismatchedScenario(String),
}

/// One metric's comparison between two runs.
#[derive(Clone, Debug)]
pub struct MetricDelta {
    pub metric: String,
    pub a: f64,
    pub b: f64,
    pub ratio: f64,
    pub improved_by_factor: bool,
}

fn read_kv(path: &Path) -> Result<Vec<(String, String)>, CompareError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CompareError::Io { path: path.to_path_buf(), source })?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        let mut parts = line.splitn(2, ',');
        match (parts.next(), parts.next()) {
            (Some(k), Some(v)) => out.push((k.to_string(), v.to_string())),
            _ => return Err(CompareError::Malformed(path.display().to_string())),
        }
    }
    Ok(out)
}

fn read_aggregates(dir: &Path) -> Result<Vec<(String, f64)>, CompareError> {
    let path = dir.join("aggregates.csv");
    let text = std::fs::read_to_string(&path)
        .map_err(|source| CompareError::Io { path, source })?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(CompareError::Malformed(line.to_string()));
        }
        let mean: f64 = parts[1]
            .parse()
            .map_err(|_| CompareError::Malformed(line.to_string()))?;
        out.push((parts[0].to_string(), mean));
    }
    Ok(out)
}

/// True when lower is better for the metric.
fn lower_is_better(metric: &str) -> bool {
    !metric.starts_with("iou") && !metric.contains("reward")
}

/// Compares two run directories: per-metric ratios and deltas, flagging
/// metrics where run A improves on run B by at least `factor`. Runs must
/// come from the same scenario identity (scene, mode, duration).
pub fn compare_runs(
    dir_a: &Path,
    dir_b: &Path,
    factor: f64,
) -> Result<Vec<MetricDelta>, CompareError> {
    let meta_a = read_kv(&dir_a.join("meta.csv"))?;
    let meta_b = read_kv(&dir_b.join("meta.csv"))?;
    let field = |meta: &[(String, String)], key: &str| -> String {
        meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone()).unwrap_or_default()
    };
    for key in ["scene", "mode", "duration_s"] {
        let (a, b) = (field(&meta_a, key), field(&meta_b, key));
        if a != b {
            return Err(CompareError::MismatchedScenario(format!("{key}: '{a}' vs '{b}'")));
        }
    }

    let agg_a = read_aggregates(dir_a)?;
    let agg_b = read_aggregates(dir_b)?;
    let mut out = Vec::new();
    for (metric, a) in &agg_a {
        let Some((_, b)) = agg_b.iter().find(|(m, _)| m == metric) else { continue };
        let ratio = if *b != 0.0 { a / b } else { f64::INFINITY };
        let improved = if lower_is_better(metric) {
            *b != 0.0 && a * factor <= *b
        } else {
            *a != 0.0 && b * factor <= *a
        };
        out.push(MetricDelta {
            metric: metric.clone(),
            a: *a,
            b: *b,
            ratio,
            improved_by_factor: improved,
        });
    }
    Ok(out)
}
