//! File formats: point/grid CSV, model JSON, fit reports and 16-bit PGM dumps.
//!
//! Floats are written in Rust's shortest round-trip notation, so every reader below
//! reproduces the written doubles exactly.

use std::io::{BufRead, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::analysis::{ConditionEstimate, Grid};
use crate::error::{Error, Result};
use crate::fitting::{FitReport, PointCloud, SolverKind};
use crate::splinecore::{DomainBox, KnotVector, TensorSpline};

pub const MODEL_FORMAT: &str = "splinereg-model";
pub const MODEL_VERSION: u32 = 1;

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn parse_num(tok: &str, line: usize) -> Result<f64> {
    tok.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("'{}' is not a number", tok.trim()),
    })
}

/// Rows of `x1..xd, v1..vs` under a `# d=<d> s=<s>` header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub coords: Array2<f64>,
    pub values: Array2<f64>,
    /// Extra `key=value` pairs from the header line.
    pub header: Vec<(String, String)>,
}

pub fn write_table<W: Write>(
    mut w: W,
    coords: &Array2<f64>,
    values: &Array2<f64>,
    extra: &[(&str, String)],
) -> Result<()> {
    let mut header = format!("# d={} s={}", coords.ncols(), values.ncols());
    for (k, v) in extra {
        header.push_str(&format!(" {k}={v}"));
    }
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for (x, v) in coords.rows().into_iter().zip(values.rows()) {
        line.clear();
        for (i, a) in x.iter().chain(v.iter()).enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&num(*a));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<R: BufRead>(r: R) -> Result<Table> {
    let mut dims: Option<(usize, usize)> = None;
    let mut header = Vec::new();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            if dims.is_none() {
                let (d, s, extra) = parse_header(rest, lineno)?;
                dims = Some((d, s));
                header = extra;
            }
            continue;
        }
        let (d, s) = dims.ok_or_else(|| Error::Parse {
            line: lineno,
            message: "data before the '# d=<d> s=<s>' header".into(),
        })?;
        let start = data.len();
        for tok in t.split(',') {
            data.push(parse_num(tok, lineno)?);
        }
        if data.len() - start != d + s {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} fields, found {}", d + s, data.len() - start),
            });
        }
        rows += 1;
    }
    let (d, s) = dims.ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing '# d=<d> s=<s>' header".into(),
    })?;
    let all = Array2::from_shape_vec((rows, d + s), data).expect("rows have d + s fields");
    Ok(Table {
        coords: all.slice(ndarray::s![.., ..d]).to_owned(),
        values: all.slice(ndarray::s![.., d..]).to_owned(),
        header,
    })
}

type Header = (usize, usize, Vec<(String, String)>);

fn parse_header(rest: &str, line: usize) -> Result<Header> {
    let (mut d, mut s) = (None, None);
    let mut extra = Vec::new();
    for part in rest.split_whitespace() {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("header entry '{part}' is not key=value"),
        })?;
        let count = || {
            v.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("header value '{v}' for {k} is not a count"),
            })
        };
        match k {
            "d" => d = Some(count()?),
            "s" => s = Some(count()?),
            _ => extra.push((k.to_string(), v.to_string())),
        }
    }
    match (d, s) {
        (Some(d), Some(s)) if d > 0 && s > 0 => Ok((d, s, extra)),
        _ => Err(Error::Parse {
            line,
            message: "header must give positive d= and s=".into(),
        }),
    }
}

pub fn write_cloud<W: Write>(w: W, cloud: &PointCloud) -> Result<()> {
    write_table(w, cloud.coords(), cloud.values(), &[])
}

pub fn read_cloud<R: BufRead>(r: R) -> Result<PointCloud> {
    let t = read_table(r)?;
    PointCloud::new(t.coords, t.values)
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn write_grid<W: Write>(w: W, grid: &Grid) -> Result<()> {
    write_table(w, &grid.coords, &grid.values, &[("resolution", join(&grid.resolution))])
}

pub fn read_grid<R: BufRead>(r: R) -> Result<Grid> {
    let t = read_table(r)?;
    let res = t
        .header
        .iter()
        .find(|(k, _)| k == "resolution")
        .map(|(_, v)| parse_usize_list(v))
        .transpose()
        .map_err(|_| Error::Parse {
            line: 1,
            message: "bad resolution in header".into(),
        })?
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "grid header lacks resolution=".into(),
        })?;
    if res.iter().product::<usize>() != t.coords.nrows() || res.len() != t.coords.ncols() {
        return Err(Error::Parse {
            line: 1,
            message: "resolution does not match the number of rows".into(),
        });
    }
    Ok(Grid {
        resolution: res,
        coords: t.coords,
        values: t.values,
    })
}

/// Parses `a,b,c` into integers.
pub fn parse_usize_list(s: &str) -> std::result::Result<Vec<usize>, std::num::ParseIntError> {
    s.split(',').map(|t| t.trim().parse()).collect()
}

/// On-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub d: usize,
    pub s: usize,
    pub degrees: Vec<usize>,
    pub knots: Vec<Vec<f64>>,
    pub control_dims: Vec<usize>,
    pub domain_box: DomainBox,
    /// One row per control point, lexicographic order.
    pub control_points: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn from_model(m: &TensorSpline) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            d: m.domain_dim(),
            s: m.value_dim(),
            degrees: m.degrees(),
            knots: m.knot_vectors().iter().map(|kv| kv.knots().to_vec()).collect(),
            control_dims: m.space().dims().to_vec(),
            domain_box: m.domain_box().clone(),
            control_points: m.control_points().rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn into_model(self) -> Result<TensorSpline> {
        let bad = |m: String| Error::Parse { line: 0, message: m };
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(bad(format!(
                "unsupported model format {} version {}",
                self.format, self.version
            )));
        }
        if self.degrees.len() != self.d || self.knots.len() != self.d || self.control_dims.len() != self.d {
            return Err(bad("per-dimension lists disagree with d".into()));
        }
        let kvs = self
            .degrees
            .iter()
            .zip(self.knots)
            .map(|(&p, t)| KnotVector::new(p, t))
            .collect::<Result<Vec<_>>>()?;
        if kvs.iter().map(|kv| kv.basis_count()).ne(self.control_dims.iter().copied()) {
            return Err(bad("control_dims do not match the knot vectors".into()));
        }
        let rows = self.control_points.len();
        if self.control_points.iter().any(|r| r.len() != self.s) {
            return Err(bad("control point rows must have s entries".into()));
        }
        let cp = Array2::from_shape_vec((rows, self.s), self.control_points.concat())
            .expect("validated shape");
        TensorSpline::new(kvs, cp, self.domain_box)
    }
}

pub fn write_model<W: Write>(mut w: W, m: &TensorSpline) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, &ModelFile::from_model(m)).map_err(std::io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_model<R: std::io::Read>(r: R) -> Result<TensorSpline> {
    let file: ModelFile = serde_json::from_reader(r).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    file.into_model()
}

pub const REPORT_COLUMNS: &str = "j,s_j,stilde1_j,stilde2_j,lambda1_j,lambda2_j";

pub fn write_report<W: Write>(mut w: W, r: &FitReport) -> Result<()> {
    writeln!(w, "s_star={}", num(r.s_star))?;
    writeln!(w, "solver={}", r.solver.name())?;
    writeln!(w, "solver_iterations={}", r.solver_iterations)?;
    writeln!(w, "dropped_unknowns={}", r.dropped_unknowns)?;
    writeln!(w, "residual_l2={}", num(r.residual_l2))?;
    writeln!(w, "columns={}", r.col_sums.len())?;
    writeln!(w, "empty_columns={}", r.empty_columns().count())?;
    writeln!(w, "regularized_columns={}", r.lambda2.iter().zip(&r.lambda1).filter(|(a, b)| **a > 0.0 || **b > 0.0).count())?;
    if let Some(c) = &r.stacked_condition {
        writeln!(w, "condition={}", if c.singular { "inf".to_string() } else { num(c.value()) })?;
        writeln!(w, "sigma_max={}", num(c.sigma_max))?;
        writeln!(w, "sigma_min={}", num(c.sigma_min))?;
    }
    writeln!(w, "{REPORT_COLUMNS}")?;
    for j in 0..r.col_sums.len() {
        writeln!(
            w,
            "{j},{},{},{},{},{}",
            num(r.col_sums[j]),
            num(r.col_abs_sums_m1[j]),
            num(r.col_abs_sums_m2[j]),
            num(r.lambda1[j]),
            num(r.lambda2[j])
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report<R: BufRead>(r: R) -> Result<FitReport> {
    let mut rep = FitReport {
        s_star: 0.0,
        lambda1: Vec::new(),
        lambda2: Vec::new(),
        col_sums: Vec::new(),
        col_abs_sums_m1: Vec::new(),
        col_abs_sums_m2: Vec::new(),
        residual_l2: 0.0,
        stacked_condition: None,
        solver: SolverKind::Direct,
        solver_iterations: 0,
        dropped_unknowns: 0,
    };
    let (mut smax, mut smin) = (None, None);
    let mut in_table = false;
    for (i, line) in r.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t == REPORT_COLUMNS {
            in_table = true;
            continue;
        }
        if in_table {
            let f: Vec<&str> = t.split(',').collect();
            if f.len() != 6 || f[0].trim().parse::<usize>().ok() != Some(rep.col_sums.len()) {
                return Err(Error::Parse {
                    line: lineno,
                    message: "malformed or out-of-order report row".into(),
                });
            }
            rep.col_sums.push(parse_num(f[1], lineno)?);
            rep.col_abs_sums_m1.push(parse_num(f[2], lineno)?);
            rep.col_abs_sums_m2.push(parse_num(f[3], lineno)?);
            rep.lambda1.push(parse_num(f[4], lineno)?);
            rep.lambda2.push(parse_num(f[5], lineno)?);
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("expected key=value, found '{t}'"),
        })?;
        let count = || {
            v.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("'{v}' is not a count"),
            })
        };
        match k {
            "s_star" => rep.s_star = parse_num(v, lineno)?,
            "residual_l2" => rep.residual_l2 = parse_num(v, lineno)?,
            "solver_iterations" => rep.solver_iterations = count()?,
            "dropped_unknowns" => rep.dropped_unknowns = count()?,
            "sigma_max" => smax = Some(parse_num(v, lineno)?),
            "sigma_min" => smin = Some(parse_num(v, lineno)?),
            "solver" => {
                rep.solver = match v {
                    "direct" => SolverKind::Direct,
                    "cg" => SolverKind::Iterative,
                    "qr" => SolverKind::Qr,
                    _ => {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("unknown solver '{v}'"),
                        })
                    }
                }
            }
            _ => {}
        }
    }
    if !in_table {
        return Err(Error::Parse {
            line: 0,
            message: "report has no per-column table".into(),
        });
    }
    if let (Some(a), Some(b)) = (smax, smin) {
        rep.stacked_condition = Some(ConditionEstimate {
            sigma_max: a,
            sigma_min: b,
            singular: !(b >= crate::analysis::SINGULAR_RATIO * a),
        });
    }
    Ok(rep)
}

/// Binary 16-bit PGM of a 2D grid: `x` left to right, `y` bottom to top, values scaled
/// linearly from the component range onto `0..=65535`. A grid whose range is within rounding
/// of its magnitude counts as constant and maps to 0.
pub fn write_pgm<W: Write>(mut w: W, grid: &Grid, component: usize) -> Result<()> {
    if grid.resolution.len() != 2 {
        return Err(Error::DimensionMismatch("PGM output needs a 2D grid".into()));
    }
    let (nx, ny) = (grid.resolution[0], grid.resolution[1]);
    let col = grid.values.column(component);
    let (lo, hi) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let flat = hi - lo <= 64.0 * f64::EPSILON * lo.abs().max(hi.abs());
    let scale = if flat { 0.0 } else { 65535.0 / (hi - lo) };
    write!(w, "P5\n{nx} {ny}\n65535\n")?;
    let mut bytes = Vec::with_capacity(nx * ny * 2);
    for row in 0..ny {
        let iy = ny - 1 - row;
        for ix in 0..nx {
            let v = col[ix * ny + iy];
            let g = ((v - lo) * scale).round().clamp(0.0, 65535.0) as u16;
            bytes.extend_from_slice(&g.to_be_bytes());
        }
    }
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}
