//! Legacy ASCII VTK output for meshes and solution snapshots, plus a small
//! structural linter used by tests and the CLI.

use std::fmt::Write as _;
use std::path::Path;

use crate::fem::ElementOrder;
use crate::mesh::Mesh;
use crate::system::SolutionState;
use crate::{Error, Result};

pub const VTK_QUAD: u8 = 9;
pub const VTK_QUADRATIC_QUAD: u8 = 23;

fn cell_type(order: ElementOrder) -> u8 {
    match order {
        ElementOrder::Linear => VTK_QUAD,
        ElementOrder::Quadratic => VTK_QUADRATIC_QUAD,
    }
}

/// Renders the mesh, and optionally a solution state, as a legacy
/// unstructured grid. Point data: `u` (vector), `phi`. Cell data: `H`
/// averaged over the integration points of each element.
pub fn render(mesh: &Mesh, state: Option<&SolutionState>, title: &str) -> String {
    let mut out = String::new();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(
        out,
        "{}",
        if title.is_empty() {
            "phasefrac"
        } else {
            &title
        }
    );
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");

    let _ = writeln!(out, "POINTS {} double", mesh.n_nodes());
    for p in &mesh.nodes {
        let _ = writeln!(out, "{:.17e} {:.17e} 0", p[0], p[1]);
    }

    let per = mesh.order.nodes();
    let _ = writeln!(
        out,
        "CELLS {} {}",
        mesh.n_elements(),
        mesh.n_elements() * (per + 1)
    );
    for conn in &mesh.elements {
        out.push_str(&per.to_string());
        for n in conn {
            let _ = write!(out, " {n}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "CELL_TYPES {}", mesh.n_elements());
    let ty = cell_type(mesh.order);
    for _ in 0..mesh.n_elements() {
        let _ = writeln!(out, "{ty}");
    }

    let Some(state) = state else {
        return out;
    };
    let _ = writeln!(out, "POINT_DATA {}", mesh.n_nodes());
    out.push_str("VECTORS u double\n");
    for i in 0..mesh.n_nodes() {
        let _ = writeln!(out, "{:.17e} {:.17e} 0", state.u[2 * i], state.u[2 * i + 1]);
    }
    out.push_str("SCALARS phi double 1\nLOOKUP_TABLE default\n");
    for v in &state.phi {
        let _ = writeln!(out, "{v:.17e}");
    }
    let n_ip = mesh.n_ip();
    let _ = writeln!(out, "CELL_DATA {}", mesh.n_elements());
    out.push_str("SCALARS H double 1\nLOOKUP_TABLE default\n");
    for chunk in state.ip.chunks(n_ip) {
        let h = chunk.iter().map(|s| s.history).sum::<f64>() / n_ip as f64;
        let _ = writeln!(out, "{h:.17e}");
    }
    out
}

pub fn write_vtk(
    path: &Path,
    mesh: &Mesh,
    state: Option<&SolutionState>,
    title: &str,
) -> Result<()> {
    std::fs::write(path, render(mesh, state, title))?;
    Ok(())
}

/// Counts reported by [`lint`] for a structurally valid file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VtkSummary {
    pub points: usize,
    pub cells: usize,
    pub point_arrays: Vec<String>,
    pub cell_arrays: Vec<String>,
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                return Ok((i + 1, l.trim()));
            }
        }
        Err(Error::Format {
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn parse_count(line: usize, tok: Option<&str>) -> Result<usize> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| err(line, "missing or malformed count"))
}

fn check_numbers(line: usize, text: &str, expected: usize) -> Result<()> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.len() != expected {
        return Err(err(
            line,
            format!("expected {expected} values, found {}", toks.len()),
        ));
    }
    for t in toks {
        if t.parse::<f64>().map_or(true, |v| !v.is_finite()) {
            return Err(err(line, format!("`{t}` is not a finite number")));
        }
    }
    Ok(())
}

fn lint_arrays(
    lines: &mut Lines<'_>,
    count: usize,
    names: &mut Vec<String>,
    header: (usize, &str),
) -> Result<Option<(usize, String)>> {
    let mut pending = Some(header);
    loop {
        let (ln, head) = match pending.take() {
            Some((ln, h)) => (ln, h.to_string()),
            None => match lines.next("data array") {
                Ok((ln, h)) => (ln, h.to_string()),
                Err(_) => return Ok(None),
            },
        };
        let toks: Vec<&str> = head.split_whitespace().collect();
        let width = match toks.first().copied() {
            Some("SCALARS") => {
                let comps = toks.get(3).map_or(Ok(1), |t| {
                    t.parse::<usize>()
                        .map_err(|_| err(ln, "bad component count"))
                })?;
                let (l2, lt) = lines.next("LOOKUP_TABLE")?;
                if !lt.starts_with("LOOKUP_TABLE") {
                    return Err(err(l2, "expected LOOKUP_TABLE"));
                }
                comps
            }
            Some("VECTORS") => 3,
            Some("POINT_DATA") | Some("CELL_DATA") => return Ok(Some((ln, head))),
            _ => return Err(err(ln, format!("unexpected section `{head}`"))),
        };
        names.push(
            toks.get(1)
                .ok_or_else(|| err(ln, "array without a name"))?
                .to_string(),
        );
        for _ in 0..count {
            let (l, t) = lines.next("array values")?;
            check_numbers(l, t, width)?;
        }
    }
}

/// Checks the header, that point and cell counts agree with the data that
/// follows, that connectivity indices are in range and that the cell types
/// are quadrilaterals with matching node counts.
pub fn lint(text: &str) -> Result<VtkSummary> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (l, first) = lines.next("header")?;
    if !first.starts_with("# vtk DataFile Version") {
        return Err(err(l, "missing `# vtk DataFile Version` header"));
    }
    lines.next("title")?;
    let (l, fmt) = lines.next("ASCII")?;
    if fmt != "ASCII" {
        return Err(err(l, "only ASCII files are supported"));
    }
    let (l, ds) = lines.next("DATASET")?;
    if ds != "DATASET UNSTRUCTURED_GRID" {
        return Err(err(l, "expected DATASET UNSTRUCTURED_GRID"));
    }

    let (l, head) = lines.next("POINTS")?;
    let mut toks = head.split_whitespace();
    if toks.next() != Some("POINTS") {
        return Err(err(l, "expected POINTS"));
    }
    let points = parse_count(l, toks.next())?;
    for _ in 0..points {
        let (l, t) = lines.next("point coordinates")?;
        check_numbers(l, t, 3)?;
    }

    let (l, head) = lines.next("CELLS")?;
    let mut toks = head.split_whitespace();
    if toks.next() != Some("CELLS") {
        return Err(err(l, "expected CELLS"));
    }
    let cells = parse_count(l, toks.next())?;
    let size = parse_count(l, toks.next())?;
    let mut seen = 0;
    let mut widths = Vec::with_capacity(cells);
    for _ in 0..cells {
        let (l, t) = lines.next("cell connectivity")?;
        let ids: Vec<usize> = t
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| err(l, format!("bad index `{x}`"))))
            .collect::<Result<_>>()?;
        let (&n, rest) = ids.split_first().ok_or_else(|| err(l, "empty cell"))?;
        if rest.len() != n {
            return Err(err(
                l,
                format!("cell declares {n} nodes but lists {}", rest.len()),
            ));
        }
        if let Some(bad) = rest.iter().find(|&&i| i >= points) {
            return Err(err(l, format!("node index {bad} out of range")));
        }
        seen += ids.len();
        widths.push(n);
    }
    if seen != size {
        return Err(err(
            l,
            format!("CELLS size {size} does not match {seen} listed entries"),
        ));
    }

    let (l, head) = lines.next("CELL_TYPES")?;
    let mut toks = head.split_whitespace();
    if toks.next() != Some("CELL_TYPES") || parse_count(l, toks.next())? != cells {
        return Err(err(l, "CELL_TYPES count does not match CELLS"));
    }
    for &w in &widths {
        let (l, t) = lines.next("cell type")?;
        let ty: u8 = t.parse().map_err(|_| err(l, "bad cell type"))?;
        let ok = (ty == VTK_QUAD && w == 4) || (ty == VTK_QUADRATIC_QUAD && w == 8);
        if !ok {
            return Err(err(l, format!("cell type {ty} with {w} nodes")));
        }
    }

    let mut summary = VtkSummary {
        points,
        cells,
        point_arrays: Vec::new(),
        cell_arrays: Vec::new(),
    };
    let mut next = match lines.next("data") {
        Ok((l, h)) => Some((l, h.to_string())),
        Err(_) => None,
    };
    while let Some((l, head)) = next {
        let mut toks = head.split_whitespace();
        let kind = toks.next().unwrap_or_default();
        let n = parse_count(l, toks.next())?;
        let (count, names) = match kind {
            "POINT_DATA" => (points, &mut summary.point_arrays),
            "CELL_DATA" => (cells, &mut summary.cell_arrays),
            _ => return Err(err(l, format!("unexpected section `{head}`"))),
        };
        if n != count {
            return Err(err(l, format!("{kind} {n} does not match {count}")));
        }
        let (l2, h2) = lines.next("data array")?;
        next = lint_arrays(&mut lines, count, names, (l2, h2))?;
    }
    Ok(summary)
}
