//! Quadratic triangle meshes.
//!
//! Corner nodes come first, midside nodes are generated from the corner
//! connectivity and appended. Element node order is the three corners
//! (counterclockwise) followed by the midsides of edges 0-1, 1-2 and 2-0.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub n_corner: usize,
    pub elements: Vec<[usize; 6]>,
    /// Per node: whether the x and y displacements are prescribed to zero.
    pub fixed: Vec<[bool; 2]>,
}

fn signed_area(p: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let (a, b, c) = (p[tri[0]], p[tri[1]], p[tri[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Builds a quadratic mesh from corner nodes and linear triangles.
    ///
    /// Clockwise triangles are reoriented (reported in the returned
    /// warnings). A midside node is fixed in a component when its edge lies
    /// on the boundary and both end corners are fixed in that component.
    pub fn from_corners(
        corners: Vec<[f64; 2]>,
        triangles: &[[usize; 3]],
        fixed_corners: &[(usize, bool, bool)],
    ) -> Result<(Mesh, Vec<String>), ModelError> {
        let n_corner = corners.len();
        let mut warnings = Vec::new();
        let mut fixed = vec![[false; 2]; n_corner];
        for &(n, fx, fy) in fixed_corners {
            if n >= n_corner {
                return Err(ModelError::Mesh(format!("dirichlet node {n} out of range")));
            }
            fixed[n][0] |= fx;
            fixed[n][1] |= fy;
        }
        let mut tris = Vec::with_capacity(triangles.len());
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= n_corner) {
                return Err(ModelError::Mesh(format!("element {k} references a missing node")));
            }
            let area = signed_area(&corners, t);
            if area.abs() <= 1e-14 * bbox_scale(&corners).powi(2) {
                return Err(ModelError::Mesh(format!("element {k} is degenerate")));
            }
            if area < 0.0 {
                warnings.push(format!("element {k} was clockwise; corners reordered"));
                tris.push([t[0], t[2], t[1]]);
            } else {
                tris.push(*t);
            }
        }
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &tris {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut nodes = corners;
        let mut mid_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut elements = Vec::with_capacity(tris.len());
        for t in &tris {
            let mut el = [t[0], t[1], t[2], 0, 0, 0];
            for (k, (a, b)) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])].into_iter().enumerate() {
                let key = (a.min(b), a.max(b));
                let idx = *mid_index.entry(key).or_insert_with(|| {
                    let (pa, pb) = (nodes[a], nodes[b]);
                    nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    let boundary = edge_count[&key] == 1;
                    fixed.push([
                        boundary && fixed[a][0] && fixed[b][0],
                        boundary && fixed[a][1] && fixed[b][1],
                    ]);
                    nodes.len() - 1
                });
                el[3 + k] = idx;
            }
            elements.push(el);
        }
        Ok((
            Mesh {
                nodes,
                n_corner,
                elements,
                fixed,
            },
            warnings,
        ))
    }

    /// Parses the plain text mesh format:
    ///
    /// ```text
    /// nodes N
    /// x y                (N lines)
    /// elements M
    /// i j k              (M lines, 0-based corner indices)
    /// dirichlet K
    /// node fix_x fix_y   (K lines, 0/1 flags)
    /// ```
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse_native(text: &str) -> Result<(Mesh, Vec<String>), ModelError> {
        let mut r = LineReader {
            lines: text
                .lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.trim()))
                .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
                .collect(),
            pos: 0,
        };
        let n = r.header("nodes")?;
        let mut corners = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, v) = r.numbers::<f64>("node", 2)?;
            if !v.iter().all(|x| x.is_finite()) {
                return Err(line_err(ln, "coordinates must be finite"));
            }
            corners.push([v[0], v[1]]);
        }
        let m = r.header("elements")?;
        let mut tris = Vec::with_capacity(m);
        for _ in 0..m {
            let (_, v) = r.numbers::<usize>("element", 3)?;
            tris.push([v[0], v[1], v[2]]);
        }
        let k = r.header("dirichlet")?;
        let mut fixed = Vec::with_capacity(k);
        for _ in 0..k {
            let (ln, v) = r.numbers::<usize>("dirichlet", 3)?;
            if v[1] > 1 || v[2] > 1 {
                return Err(line_err(ln, "fix flags must be 0 or 1"));
            }
            fixed.push((v[0], v[1] == 1, v[2] == 1));
        }
        if let Some((ln, _)) = r.lines.get(r.pos) {
            return Err(line_err(*ln, "unexpected trailing content"));
        }
        Self::from_corners(corners, &tris, &fixed)
    }

    pub fn load_native(path: &Path) -> Result<(Mesh, Vec<String>), ModelError> {
        Self::parse_native(&std::fs::read_to_string(path)?)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Every element has positive signed area.
    pub fn is_counterclockwise(&self) -> bool {
        self.elements
            .iter()
            .all(|e| signed_area(&self.nodes, &[e[0], e[1], e[2]]) > 0.0)
    }
}

fn line_err(line: usize, msg: &str) -> ModelError {
    ModelError::Mesh(format!("line {line}: {msg}"))
}

struct LineReader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> LineReader<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), ModelError> {
        let l = self
            .lines
            .get(self.pos)
            .copied()
            .ok_or_else(|| ModelError::Mesh(format!("unexpected end of input while reading {what}")))?;
        self.pos += 1;
        Ok(l)
    }

    fn header(&mut self, name: &str) -> Result<usize, ModelError> {
        let (ln, l) = self.next(name)?;
        let mut it = l.split_whitespace();
        if it.next() != Some(name) {
            return Err(line_err(ln, &format!("expected '{name} <count>'")));
        }
        let count = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| line_err(ln, "invalid count"))?;
        if it.next().is_some() {
            return Err(line_err(ln, "unexpected token after count"));
        }
        Ok(count)
    }

    fn numbers<T: std::str::FromStr>(&mut self, what: &str, count: usize) -> Result<(usize, Vec<T>), ModelError> {
        let (ln, l) = self.next(what)?;
        let v: Vec<T> = l
            .split_whitespace()
            .map(|s| s.parse::<T>())
            .collect::<Result<_, _>>()
            .map_err(|_| line_err(ln, &format!("invalid {what} entry")))?;
        if v.len() != count {
            return Err(line_err(ln, &format!("expected {count} values")));
        }
        Ok((ln, v))
    }
}

fn bbox_scale(p: &[[f64; 2]]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for q in p {
        for d in 0..2 {
            lo[d] = lo[d].min(q[d]);
            hi[d] = hi[d].max(q[d]);
        }
    }
    (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE)
}
