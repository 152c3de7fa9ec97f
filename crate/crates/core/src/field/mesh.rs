//! Triangle meshes as distance fields.
//!
//! Closest-point queries run against a bounding volume hierarchy over the
//! triangles. For closed meshes the sign comes from the angle-weighted
//! pseudonormal of the closest feature (face, edge, or vertex), which is
//! exact for watertight, consistently oriented input.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use super::{Field, Signedness};
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Vec3};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(Error::InvalidInput("mesh has no triangles".into()));
        }
        if let Some(v) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput(format!("vertex {v} is not finite")));
        }
        let n = vertices.len() as u32;
        if let Some(f) = faces.iter().position(|f| f.iter().any(|&i| i >= n)) {
            return Err(Error::InvalidInput(format!("face {f} references a missing vertex")));
        }
        Ok(Self { vertices, faces })
    }

    /// Reads `.obj` or binary little-endian `.ply`, chosen by extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        let mesh = match ext.as_deref() {
            Some("obj") => Self::load_obj(path)?,
            Some("ply") => Self::load_ply(path)?,
            _ => return Err(Error::parse(path, "unsupported mesh extension (expected .obj or .ply)")),
        };
        Self::new(mesh.vertices, mesh.faces).map_err(|e| match e {
            Error::InvalidInput(m) => Error::parse(path, m),
            other => other,
        })
    }

    fn load_obj(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        let opts = tobj::LoadOptions { triangulate: true, single_index: false, ..Default::default() };
        let (models, _) = tobj::load_obj(path, &opts).map_err(|e| Error::parse(path, e.to_string()))?;
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for m in models {
            let base = vertices.len() as u32;
            vertices.extend(
                m.mesh.positions.chunks_exact(3).map(|c| Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64)),
            );
            faces.extend(m.mesh.indices.chunks_exact(3).map(|c| [base + c[0], base + c[1], base + c[2]]));
        }
        Ok(Self { vertices, faces })
    }

    fn load_ply(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        read_binary_ply(BufReader::new(file)).map_err(|m| Error::parse(path, m))
    }

    /// Binary little-endian PLY with float vertices and `uchar`/`int` index lists.
    pub fn to_ply_bytes(&self) -> Vec<u8> {
        let mut out = format!(
            "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
            self.vertices.len(),
            self.faces.len()
        )
        .into_bytes();
        for v in &self.vertices {
            for c in v.iter() {
                out.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        for f in &self.faces {
            out.push(3);
            for i in f {
                out.extend_from_slice(&(*i as i32).to_le_bytes());
            }
        }
        out
    }

    pub fn to_obj_string(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
        }
        for f in &self.faces {
            s.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
        }
        s
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        let f = self.faces[i];
        [self.vertices[f[0] as usize], self.vertices[f[1] as usize], self.vertices[f[2] as usize]]
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle(i);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn bounds(&self) -> BoundingBox {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        BoundingBox { min: [lo.x, lo.y, lo.z], max: [hi.x, hi.y, hi.z] }
    }

    /// Every undirected edge is shared by exactly two faces.
    pub fn is_closed(&self) -> bool {
        let mut count: HashMap<(u32, u32), u32> = HashMap::new();
        for f in &self.faces {
            for e in 0..3 {
                *count.entry(edge_key(f[e], f[(e + 1) % 3])).or_default() += 1;
            }
        }
        count.values().all(|&c| c == 2)
    }

    /// Axis-aligned cube with outward-facing triangles.
    pub fn cube(center: Vec3, side: f64) -> Self {
        let h = 0.5 * side;
        let vertices = (0..8)
            .map(|i| {
                center
                    + Vec3::new(
                        if i & 1 == 0 { -h } else { h },
                        if i & 2 == 0 { -h } else { h },
                        if i & 4 == 0 { -h } else { h },
                    )
            })
            .collect();
        let faces = vec![
            [0, 2, 1], [1, 2, 3], // z-
            [4, 5, 6], [5, 7, 6], // z+
            [0, 1, 4], [1, 5, 4], // y-
            [2, 6, 3], [3, 6, 7], // y+
            [0, 4, 2], [2, 4, 6], // x-
            [1, 3, 5], [3, 7, 5], // x+
        ];
        Self { vertices, faces }
    }

    /// Subdivided icosahedron projected onto a sphere; `20 * 4^level` faces.
    pub fn icosphere(center: Vec3, radius: f64, level: u32) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
            (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
            (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
        let mut faces: Vec<[u32; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..level {
            let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
            let mut next = Vec::with_capacity(faces.len() * 4);
            let mut midpoint = |a: u32, b: u32, vs: &mut Vec<Vec3>| {
                *mid.entry(edge_key(a, b)).or_insert_with(|| {
                    vs.push((vs[a as usize] + vs[b as usize]).normalize());
                    (vs.len() - 1) as u32
                })
            };
            for [a, b, c] in faces {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        let vertices = vertices.into_iter().map(|v| center + radius * v).collect();
        Self { vertices, faces }
    }

    /// Torus around the z axis tessellated on an `nu × nv` parameter grid.
    pub fn torus(major: f64, minor: f64, nu: u32, nv: u32) -> Self {
        use std::f64::consts::TAU;
        let mut vertices = Vec::with_capacity((nu * nv) as usize);
        for i in 0..nu {
            let u = TAU * i as f64 / nu as f64;
            for j in 0..nv {
                let v = TAU * j as f64 / nv as f64;
                let rho = major + minor * v.cos();
                vertices.push(Vec3::new(rho * u.cos(), rho * u.sin(), minor * v.sin()));
            }
        }
        let id = |i: u32, j: u32| (i % nu) * nv + (j % nv);
        let mut faces = Vec::with_capacity((2 * nu * nv) as usize);
        for i in 0..nu {
            for j in 0..nv {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
        Self { vertices, faces }
    }
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b { (a, b) } else { (b, a) }
}

#[derive(Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn read(self, r: &mut impl Read) -> std::io::Result<f64> {
        let mut b = [0u8; 8];
        Ok(match self {
            Scalar::I8 => {
                r.read_exact(&mut b[..1])?;
                b[0] as i8 as f64
            }
            Scalar::U8 => {
                r.read_exact(&mut b[..1])?;
                b[0] as f64
            }
            Scalar::I16 => {
                r.read_exact(&mut b[..2])?;
                i16::from_le_bytes([b[0], b[1]]) as f64
            }
            Scalar::U16 => {
                r.read_exact(&mut b[..2])?;
                u16::from_le_bytes([b[0], b[1]]) as f64
            }
            Scalar::I32 => {
                r.read_exact(&mut b[..4])?;
                i32::from_le_bytes(b[..4].try_into().unwrap()) as f64
            }
            Scalar::U32 => {
                r.read_exact(&mut b[..4])?;
                u32::from_le_bytes(b[..4].try_into().unwrap()) as f64
            }
            Scalar::F32 => {
                r.read_exact(&mut b[..4])?;
                f32::from_le_bytes(b[..4].try_into().unwrap()) as f64
            }
            Scalar::F64 => {
                r.read_exact(&mut b)?;
                f64::from_le_bytes(b)
            }
        })
    }
}

enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

fn read_binary_ply(mut r: impl BufRead) -> std::result::Result<TriMesh, String> {
    let mut line = String::new();
    let mut next_line = |r: &mut dyn BufRead| -> std::result::Result<String, String> {
        line.clear();
        let n = r.read_line(&mut line).map_err(|e| e.to_string())?;
        if n == 0 {
            return Err("unexpected end of PLY header".into());
        }
        Ok(line.trim_end().to_string())
    };
    if next_line(&mut r)? != "ply" {
        return Err("missing 'ply' magic".into());
    }
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let l = next_line(&mut r)?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok.as_slice() {
            ["format", fmt, _] => {
                if *fmt != "binary_little_endian" {
                    return Err(format!("unsupported PLY format '{fmt}' (binary_little_endian only)"));
                }
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| format!("bad element count '{count}'"))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => {
                let el = elements.last_mut().ok_or("property before element")?;
                let ct = Scalar::parse(ct).ok_or_else(|| format!("unknown type '{ct}'"))?;
                let it = Scalar::parse(it).ok_or_else(|| format!("unknown type '{it}'"))?;
                el.props.push(Property::List(name.to_string(), ct, it));
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or("property before element")?;
                let ty = Scalar::parse(ty).ok_or_else(|| format!("unknown type '{ty}'"))?;
                el.props.push(Property::Scalar(name.to_string(), ty));
            }
            ["end_header"] => break,
            _ => {} // comment, obj_info
        }
    }
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let io = |e: std::io::Error| format!("truncated PLY body: {e}");
    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [f64::NAN; 3];
            let mut poly: Vec<u32> = Vec::new();
            for prop in &el.props {
                match prop {
                    Property::Scalar(name, ty) => {
                        let v = ty.read(&mut r).map_err(io)?;
                        match name.as_str() {
                            "x" => xyz[0] = v,
                            "y" => xyz[1] = v,
                            "z" => xyz[2] = v,
                            _ => {}
                        }
                    }
                    Property::List(name, ct, it) => {
                        let n = ct.read(&mut r).map_err(io)? as usize;
                        for _ in 0..n {
                            let v = it.read(&mut r).map_err(io)?;
                            if name == "vertex_indices" || name == "vertex_index" {
                                if v < 0.0 {
                                    return Err("negative vertex index".into());
                                }
                                poly.push(v as u32);
                            }
                        }
                    }
                }
            }
            match el.name.as_str() {
                "vertex" => vertices.push(Vec3::from(xyz)),
                "face" => {
                    if poly.len() < 3 {
                        return Err("face with fewer than 3 vertices".into());
                    }
                    for k in 1..poly.len() - 1 {
                        faces.push([poly[0], poly[k], poly[k + 1]]);
                    }
                }
                _ => {}
            }
        }
    }
    Ok(TriMesh { vertices, faces })
}

/// Which part of a triangle a closest point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    Face,
    /// Edge from local vertex `i` to `(i + 1) % 3`.
    Edge(u8),
    Vertex(u8),
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> (Vec3, Feature) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, Feature::Vertex(0));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, Feature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + v * ab, Feature::Edge(0));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, Feature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + w * ac, Feature::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + w * (c - b), Feature::Edge(1));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Feature::Face)
}

#[derive(Debug, Clone)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    /// Leaf: first index into `order`; inner: index of the left child.
    start: u32,
    /// Leaf: triangle count; inner: 0.
    count: u32,
    /// Inner: index of the right child.
    right: u32,
}

#[derive(Debug, Clone)]
struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

const LEAF_SIZE: usize = 4;

fn dist2_to_box(p: &Vec3, lo: &Vec3, hi: &Vec3) -> f64 {
    (p.sup(lo).inf(hi) - p).norm_squared()
}

impl Bvh {
    fn build(mesh: &TriMesh) -> Self {
        let n = mesh.faces.len();
        let tris: Vec<[Vec3; 3]> = (0..n).map(|i| mesh.triangle(i)).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut bvh = Bvh { nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1), order: (0..n as u32).collect() };
        bvh.split(&tris, &centroids, 0, n);
        bvh
    }

    fn split(&mut self, tris: &[[Vec3; 3]], centroids: &[Vec3], start: usize, end: usize) -> usize {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for &t in &self.order[start..end] {
            for v in &tris[t as usize] {
                lo = lo.inf(v);
                hi = hi.sup(v);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node { lo, hi, start: start as u32, count: (end - start) as u32, right: 0 });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let axis = (hi - lo).imax();
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis])
        });
        let left = self.split(tris, centroids, start, mid);
        let right = self.split(tris, centroids, mid, end);
        self.nodes[id].start = left as u32;
        self.nodes[id].right = right as u32;
        self.nodes[id].count = 0;
        id
    }
}

/// Distance field of a triangle mesh. Signed when the mesh is closed.
#[derive(Debug, Clone)]
pub struct MeshField {
    mesh: TriMesh,
    bvh: Bvh,
    face_normals: Vec<Vec3>,
    vertex_normals: Vec<Vec3>,
    edge_normals: HashMap<(u32, u32), Vec3>,
    signedness: Signedness,
}

impl MeshField {
    pub fn new(mesh: TriMesh) -> Result<Self> {
        let mesh = TriMesh::new(mesh.vertices, mesh.faces)?;
        let bvh = Bvh::build(&mesh);
        let mut face_normals = Vec::with_capacity(mesh.faces.len());
        let mut vertex_normals = vec![Vec3::zeros(); mesh.vertices.len()];
        let mut edge_normals: HashMap<(u32, u32), Vec3> = HashMap::new();
        for (i, f) in mesh.faces.iter().enumerate() {
            let [a, b, c] = mesh.triangle(i);
            let n = (b - a).cross(&(c - a));
            let n = if n.norm() > 0.0 { n.normalize() } else { Vec3::zeros() };
            face_normals.push(n);
            let pts = [a, b, c];
            for k in 0..3 {
                let e1 = pts[(k + 1) % 3] - pts[k];
                let e2 = pts[(k + 2) % 3] - pts[k];
                let angle = if e1.norm() > 0.0 && e2.norm() > 0.0 { e1.angle(&e2) } else { 0.0 };
                vertex_normals[f[k] as usize] += angle * n;
                *edge_normals.entry(edge_key(f[k], f[(k + 1) % 3])).or_insert_with(Vec3::zeros) += n;
            }
        }
        let signedness = if mesh.is_closed() { Signedness::Signed } else { Signedness::Unsigned };
        Ok(Self { mesh, bvh, face_normals, vertex_normals, edge_normals, signedness })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(TriMesh::load(path)?)
    }

    /// Force unsigned distance even for closed meshes.
    pub fn unsigned(mut self) -> Self {
        self.signedness = Signedness::Unsigned;
        self
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    /// Closest triangle index and unsigned distance.
    pub fn closest_triangle(&self, p: &Vec3) -> (usize, f64) {
        let (t, _, _, d2) = self.query(p);
        (t, d2.sqrt())
    }

    fn query(&self, p: &Vec3) -> (usize, Vec3, Feature, f64) {
        let mut best = (usize::MAX, Vec3::zeros(), Feature::Face, f64::INFINITY);
        let nodes = &self.bvh.nodes;
        let mut stack: [(u32, f64); 64] = [(0, 0.0); 64];
        let mut top = 1usize;
        stack[0] = (0, dist2_to_box(p, &nodes[0].lo, &nodes[0].hi));
        while top > 0 {
            top -= 1;
            let (id, d2) = stack[top];
            if d2 >= best.3 {
                continue;
            }
            let node = &nodes[id as usize];
            if node.count > 0 {
                let s = node.start as usize;
                for &t in &self.bvh.order[s..s + node.count as usize] {
                    let [a, b, c] = self.mesh.triangle(t as usize);
                    let (q, feat) = closest_point_on_triangle(p, &a, &b, &c);
                    let dd = (q - p).norm_squared();
                    if dd < best.3 {
                        best = (t as usize, q, feat, dd);
                    }
                }
            } else {
                let l = node.start;
                let r = node.right;
                let dl = dist2_to_box(p, &nodes[l as usize].lo, &nodes[l as usize].hi);
                let dr = dist2_to_box(p, &nodes[r as usize].lo, &nodes[r as usize].hi);
                let (near, far) = if dl < dr { ((l, dl), (r, dr)) } else { ((r, dr), (l, dl)) };
                stack[top] = far;
                stack[top + 1] = near;
                top += 2;
            }
        }
        best
    }

    fn pseudonormal(&self, tri: usize, feature: Feature) -> Vec3 {
        let f = self.mesh.faces[tri];
        match feature {
            Feature::Face => self.face_normals[tri],
            Feature::Edge(e) => {
                let e = e as usize;
                self.edge_normals[&edge_key(f[e], f[(e + 1) % 3])]
            }
            Feature::Vertex(v) => self.vertex_normals[f[v as usize] as usize],
        }
    }
}

impl Field for MeshField {
    fn value(&self, p: &Vec3) -> f64 {
        let (tri, q, feature, d2) = self.query(p);
        let d = d2.sqrt();
        match self.signedness {
            Signedness::Unsigned => d,
            Signedness::Signed => {
                if (p - q).dot(&self.pseudonormal(tri, feature)) < 0.0 { -d } else { d }
            }
        }
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn signedness(&self) -> Signedness {
        self.signedness
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(mesh: &TriMesh, p: &Vec3) -> f64 {
        (0..mesh.faces.len())
            .map(|i| {
                let [a, b, c] = mesh.triangle(i);
                (closest_point_on_triangle(p, &a, &b, &c).0 - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn lcg(state: &mut u64) -> f64 {
        *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*state >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn cube_center_is_minus_half() {
        let f = MeshField::new(TriMesh::cube(Vec3::zeros(), 1.0)).unwrap();
        assert_eq!(f.signedness(), Signedness::Signed);
        assert!((f.value(&Vec3::zeros()) + 0.5).abs() < 1e-15);
        assert!((f.value(&Vec3::new(1.0, 0.0, 0.0)) - 0.5).abs() < 1e-15);
        // outside near a corner
        let c = f.value(&Vec3::new(1.5, 1.5, 1.5));
        assert!((c - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn magnitude_matches_brute_force() {
        let mesh = TriMesh::torus(0.5, 0.2, 24, 12);
        assert!(mesh.faces.len() <= 1000);
        let field = MeshField::new(mesh.clone()).unwrap();
        let mut s = 7u64;
        for _ in 0..2000 {
            let p = Vec3::new(lcg(&mut s), lcg(&mut s), lcg(&mut s)) * 2.0 - Vec3::repeat(1.0);
            let d = brute_force(&mesh, &p);
            assert!((field.value(&p).abs() - d).abs() < 1e-9);
        }
    }

    #[test]
    fn sign_matches_inside_outside() {
        let field = MeshField::new(TriMesh::icosphere(Vec3::zeros(), 0.5, 2)).unwrap();
        let mut s = 3u64;
        for _ in 0..2000 {
            let p = Vec3::new(lcg(&mut s), lcg(&mut s), lcg(&mut s)) * 2.0 - Vec3::repeat(1.0);
            let r = p.norm();
            // skip the thin region between the inscribed and circumscribed spheres
            if (r - 0.5).abs() < 0.03 {
                continue;
            }
            assert_eq!(field.value(&p) < 0.0, r < 0.5, "{p:?}");
        }
    }

    #[test]
    fn open_mesh_is_unsigned() {
        let mut mesh = TriMesh::cube(Vec3::zeros(), 1.0);
        mesh.faces.truncate(10);
        let f = MeshField::new(mesh).unwrap();
        assert_eq!(f.signedness(), Signedness::Unsigned);
        assert!(f.value(&Vec3::zeros()) > 0.0);
    }

    #[test]
    fn obj_and_ply_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = TriMesh::cube(Vec3::zeros(), 1.0);
        let obj = dir.path().join("cube.obj");
        std::fs::write(&obj, mesh.to_obj_string()).unwrap();
        let ply = dir.path().join("cube.ply");
        std::fs::write(&ply, mesh.to_ply_bytes()).unwrap();
        for path in [obj, ply] {
            let f = MeshField::load(&path).unwrap();
            assert_eq!(f.mesh().faces.len(), 12);
            assert!((f.value(&Vec3::zeros()) + 0.5).abs() < 1e-7);
        }
    }

    #[test]
    fn loader_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(TriMesh::load(dir.path().join("missing.obj")), Err(Error::Io { .. })));
        let empty = dir.path().join("empty.obj");
        std::fs::write(&empty, "# nothing\n").unwrap();
        assert!(TriMesh::load(&empty).is_err());
        let nan = dir.path().join("nan.obj");
        std::fs::write(&nan, "v nan 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert!(TriMesh::load(&nan).is_err());
        let ascii = dir.path().join("ascii.ply");
        std::fs::write(&ascii, "ply\nformat ascii 1.0\nend_header\n").unwrap();
        assert!(matches!(TriMesh::load(&ascii), Err(Error::Parse { .. })));
    }

    #[test]
    fn icosphere_face_count_and_area() {
        let m = TriMesh::icosphere(Vec3::zeros(), 1.0, 3);
        assert_eq!(m.faces.len(), 1280);
        assert!(m.is_closed());
        let a = m.surface_area();
        assert!(a < 4.0 * std::f64::consts::PI && a > 0.98 * 4.0 * std::f64::consts::PI);
    }
}
