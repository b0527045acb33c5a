//! Grid scans of constrained entropy over a two-constraint model.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::entropy::{constrained_entropy_seeded, OptimizerOptions, OptimizerResult};
use crate::error::{Error, Result};
use crate::graphon::{ConstraintVector, StepGraphon, SubgraphPattern};
use crate::io::fmt_real;
use crate::par::{map_indexed, Parallelism};

/// Largest number of grid points per axis.
pub const MAX_RESOLUTION: usize = 200;

/// A pair of density functionals spanning the scanned plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Model {
    /// Edge density against triangle density.
    EdgeTriangle,
    /// Edge density against `k`-star density.
    EdgeKStar(usize),
    /// Signed 2-star density `t1` against signed square density `t2`.
    HalfBlip,
}

impl Model {
    pub fn patterns(&self) -> Result<(SubgraphPattern, SubgraphPattern)> {
        Ok(match self {
            Model::EdgeTriangle => (SubgraphPattern::edge(), SubgraphPattern::triangle()),
            Model::EdgeKStar(k) => (SubgraphPattern::edge(), SubgraphPattern::star(*k)?),
            Model::HalfBlip => (
                SubgraphPattern::signed_two_star(),
                SubgraphPattern::signed_square(),
            ),
        })
    }

    /// Second coordinate of the constant graphons as a function of the first.
    pub fn er_curve(&self, x: f64) -> f64 {
        match self {
            Model::EdgeTriangle => x.powi(3),
            Model::EdgeKStar(k) => x.powi(*k as i32),
            Model::HalfBlip => x * x,
        }
    }

    /// Cheap necessary condition for `(x, y)` to be attainable.
    pub fn may_be_feasible(&self, x: f64, y: f64) -> bool {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return false;
        }
        match self {
            // Kruskal–Katona upper boundary
            Model::EdgeTriangle => y <= x.powf(1.5) + 1e-12,
            Model::EdgeKStar(_) => y + 1e-12 >= self.er_curve(x),
            Model::HalfBlip => x <= 0.25 + 1e-12,
        }
    }

    pub fn constraints(&self, x: f64, y: f64) -> Result<ConstraintVector> {
        let (px, py) = self.patterns()?;
        ConstraintVector::new(vec![(px, x), (py, y)], 0.0)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::EdgeTriangle => write!(f, "edge-triangle"),
            Model::EdgeKStar(k) => write!(f, "edge-kstar:{k}"),
            Model::HalfBlip => write!(f, "half-blip"),
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-triangle" => Ok(Model::EdgeTriangle),
            "half-blip" => Ok(Model::HalfBlip),
            "edge-2star" => Ok(Model::EdgeKStar(2)),
            _ => {
                let k = s
                    .strip_prefix("edge-kstar:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| (1..=5).contains(&k))
                    .ok_or_else(|| {
                        Error::Domain(format!(
                            "unknown model '{s}' (expected edge-triangle, edge-kstar:K with K in 1..=5, half-blip)"
                        ))
                    })?;
                Ok(Model::EdgeKStar(k))
            }
        }
    }
}

impl TryFrom<String> for Model {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Model> for String {
    fn from(m: Model) -> String {
        m.to_string()
    }
}

/// Rectangular grid of constraint points. With `relative_to_er` the second
/// coordinate is an offset from the model's constant-graphon curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub relative_to_er: bool,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (n, axis) in [(self.nx, "x"), (self.ny, "y")] {
            if n == 0 {
                return Err(Error::Domain(format!(
                    "{axis} resolution must be at least 1"
                )));
            }
            if n > MAX_RESOLUTION {
                return Err(Error::CapExceeded {
                    what: "scan resolution",
                    value: n,
                    cap: MAX_RESOLUTION,
                });
            }
        }
        let ok = |a: f64, b: f64| a.is_finite() && b.is_finite() && a <= b;
        if !ok(self.x_min, self.x_max) || !ok(self.y_min, self.y_max) {
            return Err(Error::Domain(
                "grid bounds must be finite with min <= max".into(),
            ));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    /// Constraint point of cell `(ix, iy)`.
    pub fn point(&self, model: Model, ix: usize, iy: usize) -> (f64, f64) {
        let x = Self::axis(self.x_min, self.x_max, self.nx, ix);
        let mut y = Self::axis(self.y_min, self.y_max, self.ny, iy);
        if self.relative_to_er {
            y += model.er_curve(x);
        }
        (x, y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanOptions {
    pub optimizer: OptimizerOptions,
    /// Cells whose parameter gradient exceeds this multiple of the grid
    /// median are flagged as transition candidates.
    pub spike_factor: f64,
    /// Re-solve every cell seeded with its neighbours' optimizers.
    pub warm_start: bool,
    pub parallelism: Parallelism,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            optimizer: OptimizerOptions {
                starts: 8,
                max_podality: 4,
                parallelism: Parallelism::Sequential,
                ..OptimizerOptions::default()
            },
            spike_factor: 10.0,
            warm_start: true,
            parallelism: Parallelism::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Feasible,
    /// Outside the attainable region, or no start met the tolerance.
    Infeasible,
    /// The optimizer refused the point (e.g. a cap was exceeded).
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
    pub status: CellStatus,
    pub result: Option<OptimizerResult>,
    pub message: Option<String>,
    /// `(c, a, b, d)` of a bipodal optimizer: `a <= b` are the two diagonal
    /// values, `c` is the mass of the block with value `a`, and `d` is the
    /// cross value. Labelling by value rather than by mass keeps the
    /// parameters continuous where the two masses cross ½. Constant
    /// graphons use `c = 1` and `a = b = d`; more than two blocks give none.
    pub params: Option<[f64; 4]>,
    /// Largest Euclidean norm over the four parameters of their centred
    /// finite-difference gradient in `(x, y)`.
    pub derivative_norm: Option<f64>,
    pub transition: bool,
}

impl PhaseCell {
    pub fn entropy(&self) -> Option<f64> {
        self.result.as_ref().map(|r| r.entropy)
    }

    pub fn podality(&self) -> Option<usize> {
        self.result.as_ref().map(|r| r.podality)
    }
}

/// Scan output: cells in row-major order over `(iy, ix)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMap {
    pub model: Model,
    pub grid: GridSpec,
    pub cells: Vec<PhaseCell>,
    /// Median of the finite derivative norms.
    pub median_derivative: Option<f64>,
}

impl PhaseMap {
    pub fn cell(&self, ix: usize, iy: usize) -> &PhaseCell {
        &self.cells[iy * self.grid.nx + ix]
    }

    pub fn transitions(&self) -> impl Iterator<Item = &PhaseCell> {
        self.cells.iter().filter(|c| c.transition)
    }
}

fn bipodal_params(q: &StepGraphon) -> Option<[f64; 4]> {
    match q.podality() {
        1 => {
            let p = q.value(0, 0);
            Some([1.0, p, p, p])
        }
        2 => {
            let (lo, hi) = if q.value(0, 0) <= q.value(1, 1) {
                (0, 1)
            } else {
                (1, 0)
            };
            Some([
                q.masses()[lo],
                q.value(lo, lo),
                q.value(hi, hi),
                q.value(0, 1),
            ])
        }
        _ => None,
    }
}

fn solve_cell(
    model: Model,
    x: f64,
    y: f64,
    warm: &[StepGraphon],
    opts: &ScanOptions,
) -> (CellStatus, Option<OptimizerResult>, Option<String>) {
    if !model.may_be_feasible(x, y) {
        return (
            CellStatus::Infeasible,
            None,
            Some("outside the attainable region".into()),
        );
    }
    let constraints = match model.constraints(x, y) {
        Ok(c) => c,
        Err(e) => return (CellStatus::Failed, None, Some(e.to_string())),
    };
    match constrained_entropy_seeded(&constraints, warm, &opts.optimizer) {
        Ok(r) => (CellStatus::Feasible, Some(r), None),
        Err(e @ Error::Infeasible { .. }) => (CellStatus::Infeasible, None, Some(e.to_string())),
        Err(e) => (CellStatus::Failed, None, Some(e.to_string())),
    }
}

/// Constrained entropy on every grid point, with derivative-spike
/// transition detection.
///
/// The first pass solves each cell independently. With `warm_start`, a
/// second pass re-solves each cell seeded with the first-pass optimizers of
/// its four neighbours and keeps the better answer; both passes are
/// deterministic functions of the first-pass results, so the scan is
/// reproducible under any thread count.
pub fn phase_scan(model: Model, grid: &GridSpec, opts: &ScanOptions) -> Result<PhaseMap> {
    grid.validate()?;
    model.patterns()?;
    let (nx, ny) = (grid.nx, grid.ny);
    let n = nx * ny;
    let points: Vec<(f64, f64)> = (0..n).map(|k| grid.point(model, k % nx, k / nx)).collect();

    let first = map_indexed(n, opts.parallelism, |k| {
        solve_cell(model, points[k].0, points[k].1, &[], opts)
    });

    let solved = if opts.warm_start && n > 1 {
        map_indexed(n, opts.parallelism, |k| {
            let (ix, iy) = (k % nx, k / nx);
            let mut warm = Vec::new();
            let neighbours = [
                (ix.wrapping_sub(1), iy),
                (ix + 1, iy),
                (ix, iy.wrapping_sub(1)),
                (ix, iy + 1),
            ];
            for (jx, jy) in neighbours {
                if jx < nx && jy < ny {
                    if let Some(r) = &first[jy * nx + jx].1 {
                        warm.push(r.graphon.clone());
                    }
                }
            }
            if warm.is_empty() {
                return first[k].clone();
            }
            let second = solve_cell(model, points[k].0, points[k].1, &warm, opts);
            match (&first[k].1, &second.1) {
                (Some(a), Some(b)) if a.entropy >= b.entropy => first[k].clone(),
                (_, Some(_)) => second,
                _ => first[k].clone(),
            }
        })
    } else {
        first
    };

    let mut cells: Vec<PhaseCell> = solved
        .into_iter()
        .enumerate()
        .map(|(k, (status, result, message))| PhaseCell {
            ix: k % nx,
            iy: k / nx,
            x: points[k].0,
            y: points[k].1,
            status,
            params: result.as_ref().and_then(|r| bipodal_params(&r.graphon)),
            result,
            message,
            derivative_norm: None,
            transition: false,
        })
        .collect();

    let params: Vec<Option<[f64; 4]>> = cells.iter().map(|c| c.params).collect();
    let dx = if nx > 1 {
        (grid.x_max - grid.x_min) / (nx - 1) as f64
    } else {
        0.0
    };
    let dy = if ny > 1 {
        (grid.y_max - grid.y_min) / (ny - 1) as f64
    } else {
        0.0
    };
    let diff = |k: usize, lo: Option<usize>, hi: Option<usize>, h: f64, p: usize| -> Option<f64> {
        let at = |i: usize| params[i].map(|v| v[p]);
        match (lo.and_then(at), hi.and_then(at)) {
            (Some(a), Some(b)) => Some((b - a) / (2.0 * h)),
            (Some(a), None) => at(k).map(|c| (c - a) / h),
            (None, Some(b)) => at(k).map(|c| (b - c) / h),
            (None, None) => None,
        }
    };
    for k in 0..n {
        if params[k].is_none() {
            continue;
        }
        let (ix, iy) = (k % nx, k / nx);
        let left = (ix > 0).then(|| k - 1);
        let right = (ix + 1 < nx).then(|| k + 1);
        let down = (iy > 0).then(|| k - nx);
        let up = (iy + 1 < ny).then(|| k + nx);
        let mut norm: Option<f64> = None;
        for p in 0..4 {
            let gx = if dx > 0.0 {
                diff(k, left, right, dx, p)
            } else {
                None
            };
            let gy = if dy > 0.0 {
                diff(k, down, up, dy, p)
            } else {
                None
            };
            if gx.is_none() && gy.is_none() {
                continue;
            }
            let g = gx.unwrap_or(0.0).hypot(gy.unwrap_or(0.0));
            norm = Some(norm.map_or(g, |m: f64| m.max(g)));
        }
        cells[k].derivative_norm = norm;
    }

    let mut norms: Vec<f64> = cells.iter().filter_map(|c| c.derivative_norm).collect();
    norms.sort_by(f64::total_cmp);
    let median = (!norms.is_empty()).then(|| {
        let h = norms.len() / 2;
        if norms.len() % 2 == 1 {
            norms[h]
        } else {
            0.5 * (norms[h - 1] + norms[h])
        }
    });
    if let Some(med) = median {
        // a flat grid has median 0; the floor keeps rounding noise from
        // being flagged
        let threshold = opts.spike_factor * med.max(1e-12);
        for c in &mut cells {
            c.transition = c.derivative_norm.is_some_and(|g| g > threshold);
        }
    }

    Ok(PhaseMap {
        model,
        grid: grid.clone(),
        cells,
        median_derivative: median,
    })
}

/// CSV header of [`write_csv`].
pub const CSV_HEADER: [&str; 16] = [
    "ix",
    "iy",
    "x",
    "y",
    "status",
    "entropy",
    "podality",
    "symmetric_bipodal",
    "constant",
    "c",
    "a",
    "b",
    "d",
    "max_residual",
    "derivative_norm",
    "transition",
];

/// One row per cell; missing values are empty fields.
pub fn write_csv<W: Write>(map: &PhaseMap, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_default();
    for c in &map.cells {
        let r = c.result.as_ref();
        let p = c.params;
        let status = match c.status {
            CellStatus::Feasible => "feasible",
            CellStatus::Infeasible => "infeasible",
            CellStatus::Failed => "failed",
        };
        out.write_record([
            c.ix.to_string(),
            c.iy.to_string(),
            fmt_real(c.x),
            fmt_real(c.y),
            status.to_string(),
            opt(r.map(|r| r.entropy)),
            r.map(|r| r.podality.to_string()).unwrap_or_default(),
            r.map(|r| r.flags.symmetric_bipodal.to_string())
                .unwrap_or_default(),
            r.map(|r| r.flags.constant.to_string()).unwrap_or_default(),
            opt(p.map(|v| v[0])),
            opt(p.map(|v| v[1])),
            opt(p.map(|v| v[2])),
            opt(p.map(|v| v[3])),
            opt(r.map(|r| r.max_residual())),
            opt(c.derivative_norm),
            c.transition.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coloring {
    Entropy,
    Podality,
}

/// Colour ramp stops, low to high.
pub const RAMP: [&str; 5] = ["#440154", "#3b528b", "#21918c", "#5ec962", "#fde725"];
/// Fill of infeasible and failed cells.
pub const INFEASIBLE_FILL: &str = "#bdbdbd";

fn ramp(t: f64) -> String {
    let parse = |h: &str| -> [f64; 3] {
        let v = u32::from_str_radix(&h[1..], 16).expect("valid hex stop");
        [
            (v >> 16) as f64,
            ((v >> 8) & 0xff) as f64,
            (v & 0xff) as f64,
        ]
    };
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let s = t * (RAMP.len() - 1) as f64;
    let i = (s.floor() as usize).min(RAMP.len() - 2);
    let f = s - i as f64;
    let (a, b) = (parse(RAMP[i]), parse(RAMP[i + 1]));
    let c: Vec<u8> = (0..3)
        .map(|k| (a[k] + f * (b[k] - a[k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Heatmap of the scan: one rectangle per cell, `x` to the right and `y`
/// upwards. Entropy maps `[0, ½ ln 2]` onto the ramp; podality maps
/// `1..=max` onto it. Transition candidates carry a black dot.
pub fn write_svg<W: Write>(map: &PhaseMap, coloring: Coloring, mut w: W) -> Result<()> {
    const CELL: usize = 8;
    const MARGIN: usize = 40;
    let (nx, ny) = (map.grid.nx, map.grid.ny);
    let width = nx * CELL + 2 * MARGIN;
    let height = ny * CELL + 2 * MARGIN;
    let max_pod = map
        .cells
        .iter()
        .filter_map(|c| c.podality())
        .max()
        .unwrap_or(1)
        .max(2);
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )?;
    writeln!(
        w,
        r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##
    )?;
    for c in &map.cells {
        let px = MARGIN + c.ix * CELL;
        let py = MARGIN + (ny - 1 - c.iy) * CELL;
        let fill = match (&c.result, coloring) {
            (None, _) => INFEASIBLE_FILL.to_string(),
            (Some(r), Coloring::Entropy) => ramp(r.entropy / (0.5 * std::f64::consts::LN_2)),
            (Some(r), Coloring::Podality) => ramp((r.podality - 1) as f64 / (max_pod - 1) as f64),
        };
        writeln!(
            w,
            r#"<rect x="{px}" y="{py}" width="{CELL}" height="{CELL}" fill="{fill}"><title>x={} y={}</title></rect>"#,
            fmt_real(c.x),
            fmt_real(c.y)
        )?;
        if c.transition {
            writeln!(
                w,
                r##"<circle cx="{}" cy="{}" r="{}" fill="#000000"/>"##,
                px + CELL / 2,
                py + CELL / 2,
                CELL / 4
            )?;
        }
    }
    let label = match coloring {
        Coloring::Entropy => "entropy",
        Coloring::Podality => "podality",
    };
    writeln!(
        w,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="12">{} scan, colour: {label}</text>"#,
        MARGIN / 2,
        map.model
    )?;
    writeln!(w, "</svg>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names_round_trip() {
        for m in [Model::EdgeTriangle, Model::EdgeKStar(3), Model::HalfBlip] {
            assert_eq!(m.to_string().parse::<Model>().unwrap(), m);
        }
        assert_eq!("edge-2star".parse::<Model>().unwrap(), Model::EdgeKStar(2));
        assert!("edge-kstar:9".parse::<Model>().is_err());
        assert!("triangle".parse::<Model>().is_err());
    }

    #[test]
    fn grid_points_and_caps() {
        let g = GridSpec {
            x_min: 0.2,
            x_max: 0.4,
            y_min: -0.01,
            y_max: 0.01,
            nx: 3,
            ny: 2,
            relative_to_er: true,
        };
        let (x, y) = g.point(Model::EdgeTriangle, 1, 1);
        assert!((x - 0.3).abs() < 1e-15);
        assert!((y - (0.027 + 0.01)).abs() < 1e-15);
        let mut big = g.clone();
        big.nx = 201;
        assert!(big.validate().is_err());
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), RAMP[0]);
        assert_eq!(ramp(1.0), RAMP[4]);
        assert_eq!(ramp(0.5), RAMP[2]);
    }
}
