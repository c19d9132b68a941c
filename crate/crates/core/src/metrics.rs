//! Evaluation metrics over an engine log.

use std::fmt::Write as _;

use crate::engine::{EngineLog, TickRecord};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub arrivals: usize,
    pub succeeded: usize,
    pub expired: usize,
    pub waiting: usize,
    /// `succeeded / (succeeded + waiting)`, with waiting counted at the end
    /// of the log.
    pub success_rate: f64,
    /// `succeeded / arrivals`.
    pub success_rate_total: f64,
    pub avg_ms_per_query: f64,
    pub avg_mesh_length: f64,
    pub rel_k: f64,
    pub rel_dt: f64,
    pub volume_series: Vec<TickRecord>,
    pub no_data: bool,
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn compute_metrics(log: &EngineLog) -> MetricsReport {
    if log.arrivals == 0 {
        return MetricsReport {
            no_data: true,
            volume_series: log.ticks.clone(),
            ..Default::default()
        };
    }
    let s = log.results.len();
    let w = log.final_waiting;
    MetricsReport {
        arrivals: log.arrivals,
        succeeded: s,
        expired: log.expired.len(),
        waiting: w,
        success_rate: if s + w == 0 { 0.0 } else { s as f64 / (s + w) as f64 },
        success_rate_total: s as f64 / log.arrivals as f64,
        avg_ms_per_query: log.total_processing_ms() / log.arrivals as f64,
        avg_mesh_length: mean(log.results.iter().map(|r| r.mesh.total_length)),
        rel_k: mean(log.results.iter().map(|r| r.members.len() as f64 / r.k as f64)),
        rel_dt: mean(log.results.iter().map(|r| r.delay / r.dt)),
        volume_series: log.ticks.clone(),
        no_data: false,
    }
}

pub const CSV_HEADER: &str =
    "label,arrivals,succeeded,expired,waiting,success_rate,success_rate_total,avg_ms_per_query,avg_mesh_length,rel_k,rel_dt";

impl MetricsReport {
    /// `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "no_data={}", self.no_data);
        let _ = writeln!(out, "arrivals={}", self.arrivals);
        let _ = writeln!(out, "succeeded={}", self.succeeded);
        let _ = writeln!(out, "expired={}", self.expired);
        let _ = writeln!(out, "waiting={}", self.waiting);
        let _ = writeln!(out, "success_rate={}", self.success_rate);
        let _ = writeln!(out, "success_rate_total={}", self.success_rate_total);
        let _ = writeln!(out, "avg_ms_per_query={}", self.avg_ms_per_query);
        let _ = writeln!(out, "avg_mesh_length={}", self.avg_mesh_length);
        let _ = writeln!(out, "rel_k={}", self.rel_k);
        let _ = writeln!(out, "rel_dt={}", self.rel_dt);
        let _ = writeln!(out, "ticks={}", self.volume_series.len());
        out
    }

    /// Reads back the scalar fields written by [`MetricsReport::to_text`].
    pub fn parse_text(text: &str) -> Result<Self, String> {
        let mut r = MetricsReport::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("not a key=value line: `{line}`"))?;
            let f = || v.parse::<f64>().map_err(|e| format!("{k}: {e}"));
            let u = || v.parse::<usize>().map_err(|e| format!("{k}: {e}"));
            match k {
                "no_data" => r.no_data = v == "true",
                "arrivals" => r.arrivals = u()?,
                "succeeded" => r.succeeded = u()?,
                "expired" => r.expired = u()?,
                "waiting" => r.waiting = u()?,
                "success_rate" => r.success_rate = f()?,
                "success_rate_total" => r.success_rate_total = f()?,
                "avg_ms_per_query" => r.avg_ms_per_query = f()?,
                "avg_mesh_length" => r.avg_mesh_length = f()?,
                "rel_k" => r.rel_k = f()?,
                "rel_dt" => r.rel_dt = f()?,
                _ => {}
            }
        }
        Ok(r)
    }

    pub fn csv_row(&self, label: &str) -> String {
        format!(
            "{label},{},{},{},{},{},{},{},{},{},{}",
            self.arrivals,
            self.succeeded,
            self.expired,
            self.waiting,
            self.success_rate,
            self.success_rate_total,
            self.avg_ms_per_query,
            self.avg_mesh_length,
            self.rel_k,
            self.rel_dt
        )
    }
}

/// Configuration label such as `P1-3-5`: profile, dt, upper k.
pub fn config_label(profile: &str, dt: f64, k_hi: u32) -> String {
    format!("{profile}-{dt}-{k_hi}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::CloakingResult;
    use crate::mesh::CloakingMesh;

    fn result(id: u64, k: u32, size: usize, delay: f64, dt: f64) -> CloakingResult {
        CloakingResult {
            query_id: id,
            user: id,
            k,
            dt,
            members: (0..size as u64).collect(),
            mesh: CloakingMesh {
                total_length: 100.0,
                ..Default::default()
            },
            cloak_time: delay,
            delay,
        }
    }

    #[test]
    fn empty_log_has_no_data() {
        let r = compute_metrics(&EngineLog::default());
        assert!(r.no_data);
        assert_eq!(r.success_rate, 0.0);
        assert!(r.to_text().starts_with("no_data=true\n"));
    }

    #[test]
    fn tight_cliques_give_unit_rel_k() {
        let log = EngineLog {
            results: vec![result(1, 2, 2, 0.0, 3.0), result(2, 3, 3, 1.0, 4.0)],
            arrivals: 2,
            ..Default::default()
        };
        let r = compute_metrics(&log);
        assert_eq!(r.rel_k, 1.0);
        assert_eq!(r.rel_dt, 0.125);
        assert_eq!(r.avg_mesh_length, 100.0);
    }

    #[test]
    fn literal_success_rate() {
        let log = EngineLog {
            results: (0..8).map(|i| result(i, 2, 2, 0.0, 3.0)).collect(),
            arrivals: 12,
            final_waiting: 2,
            expired: vec![100, 101],
            ..Default::default()
        };
        let r = compute_metrics(&log);
        assert_eq!(r.success_rate, 0.8);
        assert!((r.success_rate_total - 8.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn text_round_trip_and_label() {
        let log = EngineLog {
            results: vec![result(1, 2, 3, 1.0, 4.0)],
            arrivals: 3,
            ..Default::default()
        };
        let r = compute_metrics(&log);
        let back = MetricsReport::parse_text(&r.to_text()).unwrap();
        assert_eq!(back.rel_k, r.rel_k);
        assert_eq!(back.arrivals, 3);
        assert_eq!(config_label("P1", 3.0, 5), "P1-3-5");
        assert_eq!(CSV_HEADER.split(',').count(), r.csv_row("x").split(',').count());
    }
}
