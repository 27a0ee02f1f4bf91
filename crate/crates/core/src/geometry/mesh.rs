//! Wavefront OBJ output for per-node surfaces.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::cyclographic::Vec3;
use crate::error::{Error, Result};
use crate::grid::NodeField;

/// Vertices in row-major node order, each grid cell split into two
/// triangles (1-based indices).
pub fn write_obj<W: Write>(field: &NodeField<Vec3>, mut w: W) -> Result<()> {
    let g = field.grid;
    for v in &field.values {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let a = g.idx(i, j) + 1;
            let b = g.idx(i + 1, j) + 1;
            let c = g.idx(i + 1, j + 1) + 1;
            let d = g.idx(i, j + 1) + 1;
            writeln!(w, "f {a} {b} {c}")?;
            writeln!(w, "f {a} {c} {d}")?;
        }
    }
    Ok(())
}

pub fn export_mesh(field: &NodeField<Vec3>, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_obj(field, file)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

/// Reads the subset of OBJ written by [`write_obj`]: `v` and triangular `f`
/// records; face indices are returned 0-based.
pub fn read_obj<R: BufRead>(r: R) -> Result<ObjMesh> {
    let mut mesh = ObjMesh {
        vertices: Vec::new(),
        faces: Vec::new(),
    };
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let err = |msg: &str| Error::Parse {
            line: k + 1,
            msg: msg.to_string(),
        };
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let xs: Vec<f64> = parts
                    .map(|t| t.parse::<f64>().map_err(|e| err(&e.to_string())))
                    .collect::<Result<_>>()?;
                if xs.len() != 3 {
                    return Err(err("vertex needs three coordinates"));
                }
                mesh.vertices.push(Vec3::new(xs[0], xs[1], xs[2]));
            }
            Some("f") => {
                let ix: Vec<usize> = parts
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or(t);
                        head.parse::<usize>().map_err(|e| err(&e.to_string()))
                    })
                    .collect::<Result<_>>()?;
                if ix.len() != 3 || ix.iter().any(|&v| v == 0 || v > mesh.vertices.len()) {
                    return Err(err("face needs three valid vertex indices"));
                }
                mesh.faces.push([ix[0] - 1, ix[1] - 1, ix[2] - 1]);
            }
            Some(t) if t.starts_with('#') => {}
            None => {}
            Some(_) => return Err(err("unsupported record")),
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn two_by_two() {
        let g = Grid::new(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
        let g2 = Grid { nx: 2, ny: 2, ..g };
        let field = NodeField::from_fn(g2, |_, _| Vec3::new(1.0, 2.0, 3.0));
        let mut buf = Vec::new();
        write_obj(&field, &mut buf).unwrap();
        let mesh = read_obj(&buf[..]).unwrap();
        assert_eq!(mesh.vertices.len(), 4);
        assert_eq!(mesh.faces, vec![[0, 1, 3], [0, 3, 2]]);
    }

    #[test]
    fn round_trip() {
        let g = Grid::new(-1.0, 1.0, 0.0, 2.0, 7, 4).unwrap();
        let field = NodeField::from_fn(g, |i, j| Vec3::new(g.x(i), g.y(j), (g.x(i) * g.y(j)).sin() / 3.0));
        let mut buf = Vec::new();
        write_obj(&field, &mut buf).unwrap();
        let mesh = read_obj(&buf[..]).unwrap();
        assert_eq!(mesh.vertices.len(), 28);
        assert_eq!(mesh.faces.len(), 2 * 6 * 3);
        assert_eq!(mesh.vertices, field.values);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_obj(&b"v 1 2\n"[..]), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_obj(&b"v 1 2 3\nf 1 2 3\n"[..]), Err(Error::Parse { line: 2, .. })));
    }
}
