//! CSV and JSON artifacts of a run.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::learner::{CurvePoint, EpisodeLog};
use crate::stl::{RegionTrack, Trajectory};
use crate::world::WorldConfig;

/// Header of a per-step episode log.
pub fn episode_header(region_names: &[String]) -> Vec<String> {
    let mut h: Vec<String> = [
        "episode",
        "t",
        "x1",
        "x2",
        "u_rl_x",
        "u_rl_y",
        "u_cbf_x",
        "u_cbf_y",
        "eps",
        "b_value",
        "critical_task",
        "active_region",
        "reward",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for n in region_names {
        h.push(format!("region_{n}_cx"));
        h.push(format!("region_{n}_cy"));
    }
    h.push("qp_active_set".into());
    h
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the recorded steps of `log` as CSV.
pub fn write_episode_log<W: Write>(w: W, log: &EpisodeLog) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(episode_header(&log.region_names))?;
    for s in &log.steps {
        let mut rec = vec![
            log.episode.to_string(),
            s.t.to_string(),
            s.x.x.to_string(),
            s.x.y.to_string(),
            s.u_rl.x.to_string(),
            s.u_rl.y.to_string(),
            s.u_cbf.x.to_string(),
            s.u_cbf.y.to_string(),
            s.eps.to_string(),
            opt(s.b_value),
            opt(s.critical_task),
            s.active_region.clone().unwrap_or_default(),
            s.reward.to_string(),
        ];
        for c in &s.region_centers {
            rec.push(c.x.to_string());
            rec.push(c.y.to_string());
        }
        rec.push(s.active_set.map(|a| a.as_str()).unwrap_or_default().to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_curve<W: Write>(w: W, curve: &[CurvePoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in curve {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_curve<R: Read>(r: R) -> Result<Vec<CurvePoint>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut curve = Vec::new();
    for rec in rd.deserialize() {
        curve.push(rec?);
    }
    Ok(curve)
}

/// Columns of a trajectory CSV, keyed by header name. Empty cells read as
/// `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(Table { header, rows })
    }

    pub fn has(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Numeric column; empty cells become `None`.
    pub fn optional(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let i = self.index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let cell = r[i].trim();
                if cell.is_empty() {
                    return Ok(None);
                }
                cell.parse().map(Some).map_err(|_| {
                    Error::InvalidTrajectory(format!("row {}: `{cell}` in column `{name}` is not a number", k + 1))
                })
            })
            .collect()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        self.optional(name)?
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                v.ok_or_else(|| Error::InvalidTrajectory(format!("row {}: column `{name}` is empty", k + 1)))
            })
            .collect()
    }

    pub fn points(&self, cx: &str, cy: &str) -> Result<Vec<Vec2>> {
        let xs = self.column(cx)?;
        let ys = self.column(cy)?;
        Ok(xs.into_iter().zip(ys).map(|(x, y)| Vec2::new(x, y)).collect())
    }

    /// Region names announced by `region_<name>_cx` columns.
    pub fn region_names(&self) -> Vec<String> {
        self.header
            .iter()
            .filter_map(|h| h.strip_prefix("region_")?.strip_suffix("_cx"))
            .map(str::to_string)
            .collect()
    }

    /// Sample period implied by the `t` column, which must be uniform.
    pub fn sample_period(&self) -> Result<f64> {
        let t = self.column("t")?;
        if t.len() < 2 {
            return Err(Error::InvalidTrajectory(
                "at least two samples are needed to infer the sample period".into(),
            ));
        }
        let dt = t[1] - t[0];
        for (k, w) in t.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.abs().max(1.0) {
                return Err(Error::InvalidTrajectory(format!(
                    "non-uniform time step between rows {} and {}",
                    k + 1,
                    k + 2
                )));
            }
        }
        Ok(dt)
    }

    /// Agent trajectory with the region tracks named in `world` (shapes come
    /// from the config; centers from the CSV).
    pub fn trajectory(&self, world: Option<&WorldConfig>) -> Result<Trajectory> {
        let dt = self.sample_period()?;
        let states = self.points("x1", "x2")?;
        let mut regions = Vec::new();
        if let Some(w) = world {
            for r in &w.regions {
                regions.push(RegionTrack {
                    name: r.name.clone(),
                    shape: r.shape,
                    centers: self.points(&format!("region_{}_cx", r.name), &format!("region_{}_cy", r.name))?,
                });
            }
        }
        Trajectory::with_regions(dt, states, regions)
    }
}

pub fn read_trajectory<R: Read>(r: R, world: Option<&WorldConfig>) -> Result<Trajectory> {
    Table::read(r)?.trajectory(world)
}
