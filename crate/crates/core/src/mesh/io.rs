//! Line-oriented ASCII mesh format (see `docs/mesh-format.md`).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::Mesh;
use crate::fem::ElementOrder;
use crate::{Error, Result};

const MAGIC: &str = "phasefrac-mesh";

pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC} 1")?;
    writeln!(w, "order {}", mesh.order.degree())?;
    writeln!(w, "thickness {}", mesh.thickness)?;
    writeln!(w, "nodes {}", mesh.nodes.len())?;
    for p in &mesh.nodes {
        writeln!(w, "{} {}", p[0], p[1])?;
    }
    writeln!(w, "elements {}", mesh.elements.len())?;
    for el in &mesh.elements {
        let line: Vec<String> = el.iter().map(|n| n.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    for (kind, sets) in [
        ("node_sets", &mesh.node_sets),
        ("element_sets", &mesh.element_sets),
    ] {
        writeln!(w, "{kind} {}", sets.len())?;
        for (name, members) in sets {
            let line: Vec<String> = members.iter().map(|n| n.to_string()).collect();
            writeln!(w, "{name} {} {}", members.len(), line.join(" "))?;
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_tokens(&mut self) -> Result<Vec<String>> {
        loop {
            self.line += 1;
            let text = self.inner.next().ok_or_else(|| Error::Format {
                line: self.line,
                message: "unexpected end of file".into(),
            })??;
            let text = text.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            return Ok(text.split_whitespace().map(str::to_string).collect());
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            line: self.line,
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, tok: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| self.err(format!("cannot parse `{tok}`")))
    }

    fn header(&mut self, key: &str) -> Result<String> {
        let t = self.next_tokens()?;
        if t.len() != 2 || t[0] != key {
            return Err(self.err(format!("expected `{key} <value>`")));
        }
        Ok(t[1].clone())
    }
}

pub fn read_mesh<R: BufRead>(r: R) -> Result<Mesh> {
    let mut lines = Lines {
        inner: r.lines(),
        line: 0,
    };
    let version = lines.header(MAGIC)?;
    if version != "1" {
        return Err(lines.err(format!("unsupported mesh format version {version}")));
    }
    let degree: u32 = {
        let v = lines.header("order")?;
        lines.parse(&v)?
    };
    let order =
        ElementOrder::from_degree(degree).ok_or_else(|| lines.err("order must be 1 or 2"))?;
    let thickness: f64 = {
        let v = lines.header("thickness")?;
        lines.parse(&v)?
    };
    let n_nodes: usize = {
        let v = lines.header("nodes")?;
        lines.parse(&v)?
    };
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let t = lines.next_tokens()?;
        if t.len() != 2 {
            return Err(lines.err("expected `x y`"));
        }
        nodes.push([lines.parse(&t[0])?, lines.parse(&t[1])?]);
    }
    let n_el: usize = {
        let v = lines.header("elements")?;
        lines.parse(&v)?
    };
    let mut elements = Vec::with_capacity(n_el);
    for _ in 0..n_el {
        let t = lines.next_tokens()?;
        if t.len() != order.nodes() {
            return Err(lines.err(format!("expected {} node indices", order.nodes())));
        }
        elements.push(
            t.iter()
                .map(|s| lines.parse(s))
                .collect::<Result<Vec<usize>>>()?,
        );
    }
    let mut read_sets = |key: &str| -> Result<BTreeMap<String, Vec<usize>>> {
        let count: usize = {
            let v = lines.header(key)?;
            lines.parse(&v)?
        };
        let mut sets = BTreeMap::new();
        for _ in 0..count {
            let t = lines.next_tokens()?;
            if t.len() < 2 {
                return Err(lines.err("expected `name count members...`"));
            }
            let n: usize = lines.parse(&t[1])?;
            if t.len() != n + 2 {
                return Err(lines.err(format!(
                    "set `{}` declares {n} members, found {}",
                    t[0],
                    t.len() - 2
                )));
            }
            let members = t[2..]
                .iter()
                .map(|s| lines.parse(s))
                .collect::<Result<Vec<usize>>>()?;
            sets.insert(t[0].clone(), members);
        }
        Ok(sets)
    };
    let node_sets = read_sets("node_sets")?;
    let element_sets = read_sets("element_sets")?;
    let mesh = Mesh {
        nodes,
        order,
        elements,
        node_sets,
        element_sets,
        thickness,
    };
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured_quad_mesh, GridSpec, NotchSpec};

    #[test]
    fn round_trip_preserves_mesh() {
        for order in [ElementOrder::Linear, ElementOrder::Quadratic] {
            let spec = GridSpec::new(1.0, 0.7, 0.1)
                .order(order)
                .notch(NotchSpec::duplicated([0.0, 0.3], [0.4, 0.3]));
            let mesh = generate_structured_quad_mesh(&spec).unwrap();
            let mut buf = Vec::new();
            write_mesh(&mesh, &mut buf).unwrap();
            let back = read_mesh(buf.as_slice()).unwrap();
            assert_eq!(back, mesh);
        }
    }

    #[test]
    fn reports_line_of_bad_token() {
        let text = "phasefrac-mesh 1\norder 1\nthickness 1\nnodes 1\n0 zz\n";
        match read_mesh(text.as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
