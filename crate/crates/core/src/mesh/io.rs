//! Plain-text mesh tables.
//!
//! ```text
//! lamerecon-mesh 1
//! nodes <N>
//! <x> <y>                      one line per node
//! triangles <T>
//! <a> <b> <c>                  zero-based node indices, counter-clockwise
//! boundary_edges <E>
//! <a> <b> <D|N>                D = Dirichlet, N = Neumann
//! ```
//!
//! Coordinates are written with the shortest representation that parses
//! back to the same `f64`, so a write/read cycle is exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryEdge, BoundaryTag, Mesh};
use crate::error::{Error, Result};

const MAGIC: &str = "lamerecon-mesh 1";

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "nodes {}", mesh.num_nodes()).unwrap();
    for p in mesh.nodes() {
        writeln!(s, "{:?} {:?}", p[0], p[1]).unwrap();
    }
    writeln!(s, "triangles {}", mesh.num_elements()).unwrap();
    for t in mesh.triangles() {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "boundary_edges {}", mesh.boundary_edges().len()).unwrap();
    for e in mesh.boundary_edges() {
        let tag = match e.tag {
            BoundaryTag::Dirichlet => "D",
            BoundaryTag::Neumann => "N",
        };
        writeln!(s, "{} {} {}", e.a, e.b, tag).unwrap();
    }
    s
}

pub fn mesh_from_str(text: &str) -> Result<Mesh> {
    let bad = |msg: &str| Error::Mesh(format!("mesh file: {msg}"));
    let all: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if all.first() != Some(&MAGIC) {
        return Err(bad("missing header"));
    }
    let mut cursor = 1;
    let mut read_block = |name: &str| -> Result<Vec<Vec<&str>>> {
        let header: Vec<&str> = all
            .get(cursor)
            .ok_or_else(|| bad("unexpected end of file"))?
            .split_whitespace()
            .collect();
        if header.first() != Some(&name) || header.len() != 2 {
            return Err(bad(&format!("expected section '{name}'")));
        }
        let count: usize = header[1]
            .parse()
            .map_err(|_| bad(&format!("bad count for '{name}'")))?;
        cursor += 1;
        let rows = all
            .get(cursor..cursor + count)
            .ok_or_else(|| bad(&format!("section '{name}' truncated")))?
            .iter()
            .map(|l| l.split_whitespace().collect())
            .collect();
        cursor += count;
        Ok(rows)
    };

    let nodes = read_block("nodes")?
        .into_iter()
        .map(|row| match row.as_slice() {
            [x, y] => Ok([
                x.parse().map_err(|_| bad("bad coordinate"))?,
                y.parse().map_err(|_| bad("bad coordinate"))?,
            ]),
            _ => Err(bad("node rows need two columns")),
        })
        .collect::<Result<Vec<_>>>()?;
    let parse_idx = |s: &str| s.parse::<usize>().map_err(|_| bad("bad node index"));
    let triangles = read_block("triangles")?
        .into_iter()
        .map(|row| match row.as_slice() {
            [a, b, c] => Ok([parse_idx(a)?, parse_idx(b)?, parse_idx(c)?]),
            _ => Err(bad("triangle rows need three columns")),
        })
        .collect::<Result<Vec<_>>>()?;
    let boundary_edges = read_block("boundary_edges")?
        .into_iter()
        .map(|row| match row.as_slice() {
            [a, b, t] => Ok(BoundaryEdge {
                a: parse_idx(a)?,
                b: parse_idx(b)?,
                tag: match *t {
                    "D" => BoundaryTag::Dirichlet,
                    "N" => BoundaryTag::Neumann,
                    _ => return Err(bad("edge tag must be D or N")),
                },
            }),
            _ => Err(bad("edge rows need three columns")),
        })
        .collect::<Result<Vec<_>>>()?;
    if cursor != all.len() {
        return Err(bad("trailing content"));
    }
    Mesh::new(nodes, triangles, boundary_edges)
}

pub fn write_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    mesh_from_str(&std::fs::read_to_string(path)?)
}
