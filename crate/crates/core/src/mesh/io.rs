//! ASCII mesh format:
//!
//! ```text
//! trimesh 1
//! V <n>
//! <x> <y>            (n lines)
//! T <m>
//! <i> <j> <k>        (m lines, 0-based, counterclockwise)
//! B <p>
//! <i> <j> <marker>   (p lines, marker = wall | other)
//! ```
//!
//! Blank lines are ignored. Coordinates are written with 17 significant
//! digits, so a write/read round trip is exact.

use std::io::{BufRead, Write};

use super::{Marker, TriMesh};
use crate::error::{Error, Result};

struct Lines<R> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next non-blank line, with its tokens and their 1-based columns.
    fn next_line(&mut self) -> Result<Option<String>> {
        loop {
            let Some(line) = self.inner.next() else {
                return Ok(None);
            };
            self.line_no += 1;
            let line = line.map_err(|e| self.error(1, format!("read failure: {e}")))?;
            if !line.trim().is_empty() {
                return Ok(Some(line));
            }
        }
    }

    fn expect_line(&mut self, what: &str) -> Result<String> {
        self.next_line()?
            .ok_or_else(|| self.error(1, format!("unexpected end of input, expected {what}")))
    }

    fn error(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line_no,
            column,
            message: message.into(),
        }
    }

    fn tokens<'a>(&self, line: &'a str, expected: usize, what: &str) -> Result<Vec<Token<'a>>> {
        let mut out = Vec::with_capacity(expected);
        let mut rest = line;
        let mut offset = 0;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let tail = &rest[start..];
            let len = tail.find(char::is_whitespace).unwrap_or(tail.len());
            out.push(Token {
                text: &tail[..len],
                column: offset + start + 1,
            });
            offset += start + len;
            rest = &tail[len..];
        }
        if out.len() != expected {
            let column = out.get(expected).map_or(line.len() + 1, |t| t.column);
            return Err(self.error(
                column,
                format!("expected {expected} fields for {what}, found {}", out.len()),
            ));
        }
        Ok(out)
    }

    fn parse<T: std::str::FromStr>(&self, tok: &Token<'_>, what: &str) -> Result<T> {
        tok.text
            .parse()
            .map_err(|_| self.error(tok.column, format!("cannot parse `{}` as {what}", tok.text)))
    }

    fn section(&mut self, tag: &str) -> Result<usize> {
        let line = self.expect_line(&format!("`{tag} <count>`"))?;
        let toks = self.tokens(&line, 2, "section header")?;
        if toks[0].text != tag {
            return Err(self.error(
                toks[0].column,
                format!("expected section `{tag}`, found `{}`", toks[0].text),
            ));
        }
        self.parse(&toks[1], "count")
    }
}

pub fn read_mesh<R: BufRead>(reader: R) -> Result<TriMesh> {
    let mut lines = Lines {
        inner: reader.lines(),
        line_no: 0,
    };
    let header = lines.expect_line("`trimesh 1`")?;
    let toks = lines.tokens(&header, 2, "header")?;
    if toks[0].text != "trimesh" || toks[1].text != "1" {
        return Err(lines.error(toks[0].column, "expected header `trimesh 1`"));
    }

    let nv = lines.section("V")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.expect_line("a vertex")?;
        let t = lines.tokens(&line, 2, "a vertex")?;
        let x: f64 = lines.parse(&t[0], "a coordinate")?;
        let y: f64 = lines.parse(&t[1], "a coordinate")?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(lines.error(t[0].column, "non-finite coordinate"));
        }
        vertices.push([x, y]);
    }

    let nt = lines.section("T")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = lines.expect_line("a triangle")?;
        let t = lines.tokens(&line, 3, "a triangle")?;
        let mut tri = [0usize; 3];
        for (slot, tok) in tri.iter_mut().zip(&t) {
            *slot = lines.parse(tok, "a vertex index")?;
            if *slot >= nv {
                return Err(lines.error(tok.column, format!("vertex index {} out of range", slot)));
            }
        }
        triangles.push(tri);
    }

    let nb = lines.section("B")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let line = lines.expect_line("a boundary edge")?;
        let t = lines.tokens(&line, 3, "a boundary edge")?;
        let i: usize = lines.parse(&t[0], "a vertex index")?;
        let j: usize = lines.parse(&t[1], "a vertex index")?;
        let marker = Marker::parse(t[2].text).ok_or_else(|| {
            lines.error(t[2].column, format!("unknown marker `{}` (wall | other)", t[2].text))
        })?;
        boundary.push(([i, j], marker));
    }
    if let Some(line) = lines.next_line()? {
        let _ = line;
        return Err(lines.error(1, "trailing content after the B section"));
    }

    TriMesh::new(vertices, triangles, &boundary)
}

pub fn write_mesh<W: Write>(mesh: &TriMesh, mut out: W) -> std::io::Result<()> {
    writeln!(out, "trimesh 1")?;
    writeln!(out, "V {}", mesh.n_vertices())?;
    for [x, y] in mesh.vertices() {
        writeln!(out, "{x:.16e} {y:.16e}")?;
    }
    writeln!(out, "T {}", mesh.n_triangles())?;
    for [i, j, k] in mesh.triangles() {
        writeln!(out, "{i} {j} {k}")?;
    }
    let tags = mesh.boundary_tags();
    writeln!(out, "B {}", tags.len())?;
    for ([i, j], marker) in tags {
        writeln!(out, "{i} {j} {}", marker.as_str())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{eccentric_annulus, unit_square};

    const SQUARE: &str = "trimesh 1
V 4
0 0
1 0
0 1
1 1
T 2
0 1 3
0 3 2
B 4
0 1 wall
1 3 wall
3 2 wall
2 0 wall
";

    #[test]
    fn two_triangle_file_equals_generated_square() {
        let read = read_mesh(SQUARE.as_bytes()).unwrap();
        assert_eq!(read, unit_square(1).unwrap());
    }

    #[test]
    fn clockwise_triangle_is_named() {
        let text = SQUARE.replace("0 3 2", "0 2 3");
        match read_mesh(text.as_bytes()) {
            Err(Error::Orientation { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let text = SQUARE.replace("1 1\n", "1 x1\n");
        match read_mesh(text.as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (6, 3)),
            other => panic!("unexpected {other:?}"),
        }
        let text = SQUARE.replace("2 0 wall", "2 0 slip");
        assert!(matches!(read_mesh(text.as_bytes()), Err(Error::Parse { line: 14, column: 5, .. })));
    }

    #[test]
    fn dangling_boundary_edge_is_a_topology_error() {
        let text = SQUARE.replace("B 4\n", "B 5\n0 3 other\n");
        assert!(matches!(read_mesh(text.as_bytes()), Err(Error::Topology(_))));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mesh = eccentric_annulus(5, 23, 1.0, 0.1, [0.5, 0.0]).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        for (a, b) in mesh.vertices().iter().zip(back.vertices()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
        assert_eq!(mesh, back);
    }
}
