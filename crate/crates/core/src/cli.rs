//! File formats and command implementations behind the `dualwell` binary.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::dae::{solve_dae, StressSample, DEFAULT_REGIME_TOL};
use crate::error::{Error, Result};
use crate::numerics::{make_radial_grid, RadialGrid};
use crate::problems::Problem;
use crate::reconstruct::{point_values, solve_branch, BranchMap, SolutionBranch};

/// Header of sweep CSV files.
pub const SWEEP_HEADER: [&str; 7] = ["r", "zeta1", "zeta2", "zeta3", "u1", "u2", "u3"];

/// One node of a root sweep; absent roots or solutions are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub zeta: [Option<f64>; 3],
    pub u: [Option<f64>; 3],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Roots of every branch at every node; `uᵢ` on the longest leading run
    /// of nodes where branch `i` exists, measured from its value at `r_min`.
    pub fn build(problem: &Problem<f64>, nodes: usize) -> Result<Self> {
        let (lo, hi) = problem.domain();
        let grid = make_radial_grid(lo, hi, nodes)?;
        let material = *problem.material();
        let mut rows = Vec::with_capacity(grid.len());
        for &r in grid.nodes() {
            let sample = StressSample::new(problem.stress(r)?.1)?;
            let roots = solve_dae(sample, &material, DEFAULT_REGIME_TOL);
            rows.push(SweepRow {
                r,
                zeta: [roots.zeta1, roots.zeta2, roots.zeta3],
                u: [None; 3],
            });
        }
        for b in 1..=3u8 {
            let prefix = grid
                .nodes()
                .iter()
                .take_while(|&&r| point_values(problem, b, r).is_ok())
                .count();
            if prefix < 2 {
                continue;
            }
            let sub = RadialGrid::from_nodes(grid.nodes()[..prefix].to_vec())?;
            let branch =
                solve_branch(problem, &BranchMap::pure(b, sub.r_min(), sub.r_max()), &sub)?;
            for (row, &u) in rows.iter_mut().zip(branch.u().values()) {
                row.u[b as usize - 1] = Some(u);
            }
        }
        Ok(Self { rows })
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.rows.windows(2) {
            if !(w[0].r < w[1].r) {
                return Err(Error::InvalidGrid(format!(
                    "radii {} and {} are not increasing",
                    w[0].r, w[1].r
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        self.validate()?;
        let columns: Vec<Vec<Option<f64>>> = self
            .rows
            .iter()
            .map(|row| {
                std::iter::once(Some(row.r))
                    .chain(row.zeta.iter().copied())
                    .chain(row.u.iter().copied())
                    .collect()
            })
            .collect();
        write_csv(&SWEEP_HEADER, &columns)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let (header, rows) = parse_csv(text)?;
        if header != SWEEP_HEADER {
            return Err(Error::Config(format!("unexpected sweep header {header:?}")));
        }
        let rows = rows
            .into_iter()
            .map(|v| {
                Ok(SweepRow {
                    r: v[0].ok_or_else(|| Error::Config("missing radius".into()))?,
                    zeta: [v[1], v[2], v[3]],
                    u: [v[4], v[5], v[6]],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let table = Self { rows };
        table.validate()?;
        Ok(table)
    }
}

/// Writes the sweep table atomically and returns the byte count.
pub fn export_csv(table: &SweepTable, destination: &Path) -> Result<u64> {
    write_atomic(destination, table.to_csv()?.as_bytes())
}

/// Decimal text with 12 significant digits and no trailing zeros.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// CSV text with `\n` line endings; `None` cells are left empty.
pub fn write_csv(header: &[&str], rows: &[Vec<Option<f64>>]) -> Result<String> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row.iter().map(|v| v.map(format_sig).unwrap_or_default()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is ASCII"))
}

/// Numeric CSV cells, row by row; `None` for an empty cell.
pub type Cells = Vec<Vec<Option<f64>>>;

/// Header and numeric cells of a CSV file.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Cells)> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|cell| {
                let cell = cell.trim();
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>()
                        .map(Some)
                        .map_err(|_| Error::Config(format!("not a number: {cell:?}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Writes through a temporary file in the destination directory, then
/// renames it into place.
pub fn write_atomic(destination: &Path, bytes: &[u8]) -> Result<u64> {
    let dir = match destination.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut file = tempfile::NamedTempFile::new_in(dir)?;
    file.write_all(bytes)?;
    file.flush()?;
    file.persist(destination).map_err(|e| Error::Io(e.error))?;
    Ok(bytes.len() as u64)
}

/// CSV of a solved branch with columns `r,branch,zeta,u,u_prime`.
pub fn solution_csv(branch: &SolutionBranch<f64>) -> Result<String> {
    let map = branch.branch_map();
    let rows: Vec<Vec<Option<f64>>> = (0..branch.grid().len())
        .map(|i| {
            let r = branch.grid().nodes()[i];
            vec![
                Some(r),
                Some(map.branch_at(r) as f64),
                Some(branch.zeta().values()[i]),
                Some(branch.u().values()[i]),
                Some(branch.u_prime().values()[i]),
            ]
        })
        .collect();
    write_csv(&["r", "branch", "zeta", "u", "u_prime"], &rows)
}

/// A named curve of an SVG plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    let margin = if span > 0.0 {
        0.05 * span
    } else {
        0.05 * lo.abs().max(1.0)
    };
    (lo - margin, hi + margin)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Standalone SVG with one polyline per series on shared linear axes.
pub fn render_svg(series: &[Series], x_label: &str, y_label: &str) -> Result<String> {
    if series.is_empty() {
        return Err(Error::TooFewPoints(0));
    }
    for s in series {
        let finite = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .count();
        if finite < 2 {
            return Err(Error::TooFewPoints(finite));
        }
    }
    let finite = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
    };
    let (x0, x1) = padded_range(finite().map(|p| p.0));
    let (y0, y1) = padded_range(finite().map(|p| p.1));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * PAD);
    let sy = |y: f64| HEIGHT - PAD - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (PAD, WIDTH - PAD, PAD, HEIGHT - PAD);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            sx(xv),
            bottom + 16.0,
            format_tick(xv)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            format_tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            points.join(" "),
            escape(&s.label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">{}</text>"#,
            right - 80.0,
            top + 14.0 * (k as f64 + 1.0),
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

/// Renders and writes an SVG atomically.
pub fn save_svg(
    series: &[Series],
    x_label: &str,
    y_label: &str,
    destination: &Path,
) -> Result<u64> {
    write_atomic(
        destination,
        render_svg(series, x_label, y_label)?.as_bytes(),
    )
}

/// Series `(x, yᵢ)` for the named columns of a CSV file; empty cells are
/// skipped.
pub fn series_from_csv(text: &str, x: &str, ys: &[String]) -> Result<Vec<Series>> {
    let (header, rows) = parse_csv(text)?;
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("no column {name:?} in {header:?}")))
    };
    let xi = column(x)?;
    ys.iter()
        .map(|y| {
            let yi = column(y)?;
            let points = rows
                .iter()
                .filter_map(|row| Some((row.get(xi).copied()??, row.get(yi).copied()??)))
                .collect();
            Ok(Series {
                label: y.clone(),
                points,
            })
        })
        .collect()
}
