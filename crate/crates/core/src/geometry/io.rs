//! Line-oriented mesh text format.
//!
//! ```text
//! flowforge-mesh 1
//! config_hash <hex>            (optional)
//! target_h <f64>
//! half_symmetry <0|1>
//! depth_h <f64|none>
//! inlet <cx> <cy> <half_width> <nx> <ny> | inlet none
//! nodes <N>
//! <x> <y>                      N lines
//! triangles <T>
//! <i> <j> <k> <label>          T lines
//! boundary <E>
//! <i> <j> <TAG>                E lines
//! channels <C>
//! <index> <ax> <ay> <width> <up_a> <up_b> <down_a> <down_b>
//! fields <F> <name_1> ... <name_F>      (optional)
//! <v_1> ... <v_F>              N lines
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Numbers use `.` as the
//! decimal separator and are written in shortest round-trip form, so a
//! write/read cycle reproduces the mesh bit for bit.

use std::io::{BufRead, Write};

use super::{BoundaryEdge, ChannelInfo, Mesh, Opening, Tag};
use crate::error::{Error, Result};

/// Node-based fields stored after the mesh blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshFields {
    pub names: Vec<String>,
    /// One row per node.
    pub values: Vec<Vec<f64>>,
}

impl MeshFields {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.values.iter().map(|r| r[k]).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshFile {
    pub mesh: Mesh,
    pub fields: Option<MeshFields>,
    pub config_hash: Option<String>,
}

pub fn write_mesh<W: Write>(
    mut w: W,
    mesh: &Mesh,
    fields: Option<&MeshFields>,
    config_hash: Option<&str>,
) -> Result<()> {
    writeln!(w, "flowforge-mesh 1")?;
    if let Some(h) = config_hash {
        writeln!(w, "config_hash {h}")?;
    }
    writeln!(w, "target_h {:e}", mesh.target_h)?;
    writeln!(w, "half_symmetry {}", mesh.half_symmetry as u8)?;
    match mesh.depth_h {
        Some(h) => writeln!(w, "depth_h {h:e}")?,
        None => writeln!(w, "depth_h none")?,
    }
    match &mesh.inlet {
        Some(o) => writeln!(
            w,
            "inlet {:e} {:e} {:e} {:e} {:e}",
            o.center[0], o.center[1], o.half_width, o.inward[0], o.inward[1]
        )?,
        None => writeln!(w, "inlet none")?,
    }
    writeln!(w, "nodes {}", mesh.nodes.len())?;
    for p in &mesh.nodes {
        writeln!(w, "{:e} {:e}", p[0], p[1])?;
    }
    writeln!(w, "triangles {}", mesh.triangles.len())?;
    for (t, l) in mesh.triangles.iter().zip(&mesh.labels) {
        writeln!(w, "{} {} {} {}", t[0], t[1], t[2], l)?;
    }
    writeln!(w, "boundary {}", mesh.boundary.len())?;
    for e in &mesh.boundary {
        writeln!(w, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.as_str())?;
    }
    writeln!(w, "channels {}", mesh.channels.len())?;
    for c in &mesh.channels {
        writeln!(
            w,
            "{} {:e} {:e} {:e} {} {} {} {}",
            c.index, c.axis[0], c.axis[1], c.width, c.up_a, c.up_b, c.down_a, c.down_b
        )?;
    }
    if let Some(f) = fields {
        if f.values.len() != mesh.nodes.len() {
            return Err(Error::Mesh("field rows must match the node count".into()));
        }
        writeln!(w, "fields {} {}", f.names.len(), f.names.join(" "))?;
        for row in &f.values {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", cells.join(" "))?;
        }
    }
    Ok(())
}

pub fn mesh_to_string(mesh: &Mesh, fields: Option<&MeshFields>, config_hash: Option<&str>) -> String {
    let mut buf = Vec::new();
    write_mesh(&mut buf, mesh, fields, config_hash).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Option<(usize, String)>> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok(Some((self.line, t.to_string())));
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<(usize, String)> {
        self.next()?.ok_or(Error::Parse {
            line: self.line,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| err(line, format!("invalid number '{s}'")))
}

fn keyed<'a>(line: usize, text: &'a str, key: &str) -> Result<Vec<&'a str>> {
    let mut parts = text.split_whitespace();
    if parts.next() != Some(key) {
        return Err(err(line, format!("expected '{key}'")));
    }
    Ok(parts.collect())
}

fn count(line: usize, text: &str, key: &str) -> Result<usize> {
    let p = keyed(line, text, key)?;
    if p.len() != 1 {
        return Err(err(line, format!("expected '{key} <count>'")));
    }
    num(line, p[0])
}

fn fields_of(line: usize, text: &str, n: usize) -> Result<Vec<&str>> {
    let p: Vec<&str> = text.split_whitespace().collect();
    if p.len() != n {
        return Err(err(line, format!("expected {n} fields, found {}", p.len())));
    }
    Ok(p)
}

pub fn read_mesh<R: BufRead>(r: R) -> Result<MeshFile> {
    let mut it = Lines { inner: r.lines(), line: 0 };
    let (l, head) = it.expect("header")?;
    if head != "flowforge-mesh 1" {
        return Err(err(l, "not a flowforge-mesh version 1 file"));
    }
    let (mut l, mut text) = it.expect("target_h")?;
    let mut config_hash = None;
    if let Ok(p) = keyed(l, &text, "config_hash") {
        config_hash = Some(p.join(""));
        (l, text) = it.expect("target_h")?;
    }
    let p = keyed(l, &text, "target_h")?;
    let target_h: f64 = num(l, p.first().copied().unwrap_or(""))?;
    let (l, text) = it.expect("half_symmetry")?;
    let half_symmetry = match keyed(l, &text, "half_symmetry")?.as_slice() {
        ["0"] => false,
        ["1"] => true,
        _ => return Err(err(l, "half_symmetry must be 0 or 1")),
    };
    let (l, text) = it.expect("depth_h")?;
    let depth_h = match keyed(l, &text, "depth_h")?.as_slice() {
        ["none"] => None,
        [v] => Some(num(l, v)?),
        _ => return Err(err(l, "expected 'depth_h <value|none>'")),
    };
    let (l, text) = it.expect("inlet")?;
    let inlet = match keyed(l, &text, "inlet")?.as_slice() {
        ["none"] => None,
        [cx, cy, hw, nx, ny] => Some(Opening {
            center: [num(l, cx)?, num(l, cy)?],
            half_width: num(l, hw)?,
            inward: [num(l, nx)?, num(l, ny)?],
        }),
        _ => return Err(err(l, "malformed inlet line")),
    };

    let (l, text) = it.expect("nodes")?;
    let n = count(l, &text, "nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (l, text) = it.expect("node")?;
        let p = fields_of(l, &text, 2)?;
        nodes.push([num(l, p[0])?, num(l, p[1])?]);
    }

    let (l, text) = it.expect("triangles")?;
    let t = count(l, &text, "triangles")?;
    let mut triangles = Vec::with_capacity(t);
    let mut labels = Vec::with_capacity(t);
    for _ in 0..t {
        let (l, text) = it.expect("triangle")?;
        let p = fields_of(l, &text, 4)?;
        let tri = [num(l, p[0])?, num(l, p[1])?, num(l, p[2])?];
        if tri.iter().any(|&v: &usize| v >= n) {
            return Err(err(l, "triangle references a missing node"));
        }
        triangles.push(tri);
        labels.push(num(l, p[3])?);
    }

    let (l, text) = it.expect("boundary")?;
    let e = count(l, &text, "boundary")?;
    let mut boundary = Vec::with_capacity(e);
    for _ in 0..e {
        let (l, text) = it.expect("boundary edge")?;
        let p = fields_of(l, &text, 3)?;
        let tag = Tag::parse(p[2]).ok_or_else(|| err(l, format!("unknown boundary tag '{}'", p[2])))?;
        boundary.push(BoundaryEdge {
            nodes: [num(l, p[0])?, num(l, p[1])?],
            tag,
        });
    }

    let (l, text) = it.expect("channels")?;
    let c = count(l, &text, "channels")?;
    let mut channels = Vec::with_capacity(c);
    for _ in 0..c {
        let (l, text) = it.expect("channel")?;
        let p = fields_of(l, &text, 8)?;
        channels.push(ChannelInfo {
            index: num(l, p[0])?,
            axis: [num(l, p[1])?, num(l, p[2])?],
            width: num(l, p[3])?,
            up_a: num(l, p[4])?,
            up_b: num(l, p[5])?,
            down_a: num(l, p[6])?,
            down_b: num(l, p[7])?,
        });
    }

    let fields = match it.next()? {
        None => None,
        Some((l, text)) => {
            let p = keyed(l, &text, "fields")?;
            let k: usize = num(l, p.first().copied().unwrap_or(""))?;
            if p.len() != k + 1 {
                return Err(err(l, "field count does not match the number of names"));
            }
            let names = p[1..].iter().map(|s| s.to_string()).collect();
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                let (l, text) = it.expect("field row")?;
                let row = fields_of(l, &text, k)?
                    .into_iter()
                    .map(|s| num(l, s))
                    .collect::<Result<Vec<f64>>>()?;
                values.push(row);
            }
            Some(MeshFields { names, values })
        }
    };
    if let Some((l, _)) = it.next()? {
        return Err(err(l, "trailing content after the last block"));
    }

    let mesh = Mesh {
        nodes,
        triangles,
        labels,
        boundary,
        channels,
        inlet,
        depth_h,
        target_h,
        half_symmetry,
    };
    mesh.check()?;
    Ok(MeshFile {
        mesh,
        fields,
        config_hash,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_parallel_flow_field, FlowFieldParams};

    #[test]
    fn round_trip_is_exact() {
        let mesh = build_parallel_flow_field(&FlowFieldParams::default(), 0.5e-3).unwrap();
        let fields = MeshFields {
            names: vec!["a".into(), "b".into()],
            values: mesh.nodes.iter().map(|p| vec![p[0] * 1.1, -p[1] / 3.0]).collect(),
        };
        let text = mesh_to_string(&mesh, Some(&fields), Some("abc123"));
        let back = read_mesh(text.as_bytes()).unwrap();
        assert_eq!(back.mesh, mesh);
        assert_eq!(back.fields.as_ref(), Some(&fields));
        assert_eq!(back.config_hash.as_deref(), Some("abc123"));
        let plain = read_mesh(mesh_to_string(&mesh, None, None).as_bytes()).unwrap();
        assert_eq!(plain.fields, None);
        assert_eq!(plain.config_hash, None);
    }

    #[test]
    fn reports_the_offending_line() {
        let mesh = build_parallel_flow_field(&FlowFieldParams::default(), 0.5e-3).unwrap();
        let text = mesh_to_string(&mesh, None, None).replacen("WSS_IN", "BOGUS", 1);
        match read_mesh(text.as_bytes()) {
            Err(Error::Parse { line, msg }) => {
                assert!(msg.contains("BOGUS"));
                assert_eq!(text.lines().nth(line - 1).unwrap().split_whitespace().last(), Some("BOGUS"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
