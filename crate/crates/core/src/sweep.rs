//! Parameter-grid execution, persistence and frontier reduction.
//!
//! Grids are row-major cartesian products with the first axis varying
//! slowest. Every point is evaluated exactly once; rows come back in grid
//! order whatever the degree of parallelism, and per-point failures are kept
//! as data in the row's error column.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::protocols::{frontier_order, pareto, ProtocolOutcome};

/// Fixed result columns following the swept axes.
pub const RESULT_COLUMNS: [&str; 5] = [
    "success_probability",
    "infidelity",
    "fidelity",
    "herald_pattern",
    "error",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn new(
        name: impl Into<String>,
        min: f64,
        max: f64,
        count: usize,
        scale: Scale,
    ) -> Result<Self> {
        let axis = Axis {
            name: name.into(),
            min,
            max,
            count,
            scale,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn linear(name: impl Into<String>, min: f64, max: f64, count: usize) -> Result<Self> {
        Self::new(name, min, max, count, Scale::Linear)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidGrid(format!("axis `{}`: {msg}", self.name)));
        if self.count == 0 {
            return bad("count must be at least 1");
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return bad("bounds must be finite");
        }
        if self.min > self.max {
            return bad("min exceeds max");
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return bad("log scale needs a positive minimum");
        }
        Ok(())
    }

    /// Axis values; the endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i + 1 == self.count {
                    return self.max;
                }
                let u = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * u,
                    Scale::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * u).exp(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Vec<Axis>,
}

impl SweepGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            a.validate()?;
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::InvalidGrid(format!(
                    "axis `{}` appears twice",
                    a.name
                )));
            }
            if RESULT_COLUMNS.contains(&a.name.as_str()) {
                return Err(Error::InvalidGrid(format!(
                    "axis name `{}` is reserved",
                    a.name
                )));
            }
        }
        Ok(SweepGrid { axes })
    }

    /// Number of points; an empty axis list has exactly one point.
    pub fn cardinality(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.axes.iter().map(|a| a.name.clone()).collect()
    }

    /// All points in row-major order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        (0..self.cardinality())
            .map(|mut idx| {
                let mut point = vec![0.0; values.len()];
                for (k, vals) in values.iter().enumerate().rev() {
                    point[k] = vals[idx % vals.len()];
                    idx /= vals.len();
                }
                point
            })
            .collect()
    }
}

/// One evaluated grid point. Numeric results are NaN when `error` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub success_probability: f64,
    pub infidelity: f64,
    pub fidelity: f64,
    pub herald_pattern: String,
    pub error: Option<String>,
}

impl SweepRow {
    fn from_result(values: Vec<f64>, result: Result<ProtocolOutcome>) -> Self {
        match result {
            Ok(o) => SweepRow {
                values,
                success_probability: o.success_probability,
                infidelity: o.infidelity,
                fidelity: o.fidelity,
                herald_pattern: o.herald_pattern,
                error: None,
            },
            Err(e) => SweepRow {
                values,
                success_probability: f64::NAN,
                infidelity: f64::NAN,
                fidelity: f64::NAN,
                herald_pattern: String::new(),
                error: Some(format!("{}: {e}", e.label())),
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_outcome(&self, axis_names: &[String]) -> ProtocolOutcome {
        ProtocolOutcome {
            success_probability: self.success_probability,
            fidelity: self.fidelity,
            infidelity: self.infidelity,
            herald_pattern: self.herald_pattern.clone(),
            swept_values: axis_names
                .iter()
                .cloned()
                .zip(self.values.iter().copied())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub config_hash: Option<String>,
    pub version: String,
    pub axes: Vec<Axis>,
    pub rows: usize,
    pub failed_rows: usize,
    pub workers: usize,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

/// Evaluates `evaluate` at every grid point on `parallelism` worker threads.
///
/// `evaluate` receives the point as `(axis name, value)` pairs in axis order.
pub fn run_sweep<F>(evaluate: F, grid: &SweepGrid, parallelism: usize) -> Result<SweepResult>
where
    F: Fn(&[(String, f64)]) -> Result<ProtocolOutcome> + Sync,
{
    if parallelism == 0 {
        return Err(Error::OutOfRange {
            name: "parallelism",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let names = grid.axis_names();
    let points = grid.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::WorkerPool(e.to_string()))?;
    let start = Instant::now();
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .into_par_iter()
            .map(|values| {
                let named: Vec<(String, f64)> =
                    names.iter().cloned().zip(values.iter().copied()).collect();
                let result = evaluate(&named);
                SweepRow::from_result(values, result)
            })
            .collect()
    });
    let wall_time_s = start.elapsed().as_secs_f64();
    let failed_rows = rows.iter().filter(|r| !r.is_ok()).count();
    log::info!(
        "swept {} points on {parallelism} workers in {wall_time_s:.3} s",
        rows.len()
    );
    Ok(SweepResult {
        metadata: SweepMetadata {
            config_hash: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            axes: grid.axes.clone(),
            rows: rows.len(),
            failed_rows,
            workers: parallelism,
            wall_time_s,
        },
        grid: grid.clone(),
        rows,
    })
}

fn format_number(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        // shortest representation that parses back to the same bits
        format!("{v}")
    }
}

fn parse_number(field: &str) -> Result<f64> {
    if field.is_empty() {
        return Ok(f64::NAN);
    }
    field
        .parse()
        .map_err(|_| Error::InvalidState(format!("`{field}` is not a number")))
}

/// Writes rows with a header: axes, then [`RESULT_COLUMNS`].
pub fn write_csv<W: Write>(out: W, axis_names: &[String], rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let header: Vec<&str> = axis_names
        .iter()
        .map(String::as_str)
        .chain(RESULT_COLUMNS)
        .collect();
    w.write_record(&header)?;
    for row in rows {
        let mut rec: Vec<String> = row.values.iter().map(|v| format_number(*v)).collect();
        rec.push(format_number(row.success_probability));
        rec.push(format_number(row.infidelity));
        rec.push(format_number(row.fidelity));
        rec.push(row.herald_pattern.clone());
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_csv`], returning axis names and rows.
pub fn read_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<SweepRow>)> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let n_axes = header
        .len()
        .checked_sub(RESULT_COLUMNS.len())
        .ok_or_else(|| Error::InvalidState("sweep CSV header is missing result columns".into()))?;
    if header[n_axes..] != RESULT_COLUMNS {
        return Err(Error::InvalidState(format!(
            "unexpected result columns {:?}",
            &header[n_axes..]
        )));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let values = (0..n_axes)
            .map(|i| parse_number(&rec[i]))
            .collect::<Result<Vec<_>>>()?;
        let error = &rec[n_axes + 4];
        rows.push(SweepRow {
            values,
            success_probability: parse_number(&rec[n_axes])?,
            infidelity: parse_number(&rec[n_axes + 1])?,
            fidelity: parse_number(&rec[n_axes + 2])?,
            herald_pattern: rec[n_axes + 3].to_string(),
            error: (!error.is_empty()).then(|| error.to_string()),
        });
    }
    Ok((header[..n_axes].to_vec(), rows))
}

pub fn write_csv_file(path: &Path, axis_names: &[String], rows: &[SweepRow]) -> Result<()> {
    write_csv(BufWriter::new(File::create(path)?), axis_names, rows)
}

pub fn read_csv_file(path: &Path) -> Result<(Vec<String>, Vec<SweepRow>)> {
    read_csv(File::open(path)?)
}

pub fn write_metadata(path: &Path, metadata: &SweepMetadata) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, metadata)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Frontier of the successful rows, sorted by increasing success probability.
pub fn pareto_rows(axis_names: &[String], rows: &[SweepRow]) -> Vec<SweepRow> {
    let outcomes: Vec<ProtocolOutcome> = rows
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| r.to_outcome(axis_names))
        .collect();
    pareto(&outcomes)
        .into_iter()
        .map(|o| SweepRow {
            values: o.swept_values.iter().map(|(_, v)| *v).collect(),
            success_probability: o.success_probability,
            infidelity: o.infidelity,
            fidelity: o.fidelity,
            herald_pattern: o.herald_pattern,
            error: None,
        })
        .collect()
}

pub fn pareto_csv(result: &SweepResult) -> Vec<SweepRow> {
    pareto_rows(&result.grid.axis_names(), &result.rows)
}

fn pick<'a>(
    axis_names: &[String],
    rows: &'a [SweepRow],
    feasible: impl Fn(&SweepRow) -> bool,
    better: impl Fn(&ProtocolOutcome, &ProtocolOutcome) -> std::cmp::Ordering,
) -> Result<&'a SweepRow> {
    rows.iter()
        .filter(|r| {
            r.is_ok()
                && r.success_probability.is_finite()
                && r.infidelity.is_finite()
                && feasible(r)
        })
        .min_by(|a, b| better(&a.to_outcome(axis_names), &b.to_outcome(axis_names)))
        .ok_or(Error::NoSolution)
}

/// Row with the highest success probability among those with infidelity at
/// most `max_infidelity`.
pub fn best_point(result: &SweepResult, max_infidelity: f64) -> Result<&SweepRow> {
    pick(
        &result.grid.axis_names(),
        &result.rows,
        |r| r.infidelity <= max_infidelity,
        frontier_order,
    )
}

/// Row with the lowest infidelity among those with success probability at
/// least `min_success`.
pub fn lowest_infidelity(result: &SweepResult, min_success: f64) -> Result<&SweepRow> {
    pick(
        &result.grid.axis_names(),
        &result.rows,
        |r| r.success_probability >= min_success,
        |a, b| {
            a.infidelity
                .total_cmp(&b.infidelity)
                .then(b.success_probability.total_cmp(&a.success_probability))
                .then_with(|| frontier_order(a, b))
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(point: &[(String, f64)]) -> Result<ProtocolOutcome> {
        let x: f64 = point.iter().map(|(_, v)| v).sum();
        if x < 0.0 {
            return Err(Error::ZeroHeraldProbability);
        }
        Ok(ProtocolOutcome {
            success_probability: x / (1.0 + x),
            fidelity: 1.0 / (1.0 + x),
            infidelity: x / (1.0 + x),
            herald_pattern: "10".into(),
            swept_values: point.to_vec(),
        })
    }

    #[test]
    fn axis_values_hit_endpoints() {
        let lin = Axis::linear("a", -18.0, 0.0, 7).unwrap().values();
        assert_eq!(lin.len(), 7);
        assert_eq!(lin[0], -18.0);
        assert_eq!(lin[6], 0.0);
        assert!((lin[1] + 15.0).abs() < 1e-12);
        let log = Axis::new("b", 1e-7, 0.3, 5, Scale::Log).unwrap().values();
        assert_eq!(log[0], 1e-7);
        assert_eq!(log[4], 0.3);
        assert!(((log[1] / log[0]) / (log[2] / log[1]) - 1.0).abs() < 1e-9);
        assert_eq!(Axis::linear("c", 2.0, 2.0, 1).unwrap().values(), vec![2.0]);
    }

    #[test]
    fn invalid_axes_are_rejected() {
        assert!(Axis::linear("a", 1.0, 0.0, 3).is_err());
        assert!(Axis::linear("a", 0.0, 1.0, 0).is_err());
        assert!(Axis::new("a", 0.0, 1.0, 3, Scale::Log).is_err());
        let a = Axis::linear("a", 0.0, 1.0, 2).unwrap();
        assert!(SweepGrid::new(vec![a.clone(), a]).is_err());
        assert!(SweepGrid::new(vec![Axis::linear("error", 0.0, 1.0, 2).unwrap()]).is_err());
    }

    #[test]
    fn grid_is_row_major() {
        let grid = SweepGrid::new(vec![
            Axis::linear("a", 0.0, 1.0, 2).unwrap(),
            Axis::linear("b", 10.0, 30.0, 3).unwrap(),
        ])
        .unwrap();
        assert_eq!(grid.cardinality(), 6);
        let pts = grid.points();
        assert_eq!(pts[0], vec![0.0, 10.0]);
        assert_eq!(pts[1], vec![0.0, 20.0]);
        assert_eq!(pts[3], vec![1.0, 10.0]);
        assert_eq!(SweepGrid::default().points(), vec![Vec::<f64>::new()]);
    }

    #[test]
    fn failures_stay_in_their_rows() {
        let grid = SweepGrid::new(vec![Axis::linear("x", -1.0, 1.0, 3).unwrap()]).unwrap();
        let res = run_sweep(fake, &grid, 2).unwrap();
        assert_eq!(res.rows.len(), 3);
        assert!(res.rows[0]
            .error
            .as_deref()
            .unwrap()
            .starts_with("zero_herald_probability"));
        assert!(res.rows[1].is_ok() && res.rows[2].is_ok());
        assert_eq!(res.metadata.failed_rows, 1);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = SweepGrid::new(vec![
            Axis::new("alpha", 1e-7, 0.3, 13, Scale::Log).unwrap(),
            Axis::linear("y", -1.0, 1.0, 3).unwrap(),
        ])
        .unwrap();
        let res = run_sweep(fake, &grid, 1).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &grid.axis_names(), &res.rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('\r'));
        assert!(text
            .starts_with("alpha,y,success_probability,infidelity,fidelity,herald_pattern,error\n"));
        let (names, rows) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(names, grid.axis_names());
        assert_eq!(rows.len(), res.rows.len());
        for (a, b) in rows.iter().zip(&res.rows) {
            assert_eq!(a.values, b.values);
            assert_eq!(a.error, b.error);
            if a.is_ok() {
                assert_eq!(
                    a.success_probability.to_bits(),
                    b.success_probability.to_bits()
                );
                assert_eq!(a.infidelity.to_bits(), b.infidelity.to_bits());
            }
        }
    }

    #[test]
    fn identical_rows_give_single_frontier_point() {
        let grid = SweepGrid::new(vec![Axis::linear("x", 0.5, 0.5, 4).unwrap()]).unwrap();
        let res = run_sweep(fake, &grid, 1).unwrap();
        assert_eq!(pareto_csv(&res).len(), 1);
    }

    #[test]
    fn best_point_respects_bound() {
        let grid = SweepGrid::new(vec![Axis::linear("x", 0.0, 1.0, 11).unwrap()]).unwrap();
        let res = run_sweep(fake, &grid, 1).unwrap();
        let best = best_point(&res, 0.3).unwrap();
        assert!(best.infidelity <= 0.3);
        assert!((best.values[0] - 0.4).abs() < 1e-12);
        assert!(matches!(best_point(&res, -0.1), Err(Error::NoSolution)));
        let low = lowest_infidelity(&res, 0.2).unwrap();
        assert!((low.values[0] - 0.3).abs() < 1e-12);
    }
}
