//! Closed, oriented, triangulated surfaces: construction, validation,
//! generators, and OFF file I/O.
//!
//! A [`SurfaceMesh`] is the discrete boundary separating a bounded interior
//! region from its unbounded exterior. Panel normals always point into the
//! exterior; every kernel sign in the crate relies on that.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::geom::{tri_area, tri_area_vector, tri_centroid, Vec3};

/// Errors raised while building, validating, or loading a mesh.
#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("vertex index {index} out of range in triangle {panel}")]
    IndexOutOfRange { panel: usize, index: usize },
    #[error("edge ({a}, {b}) is shared by {count} triangles; a closed 2-manifold needs exactly 2")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("triangle orientations are mixed around edge ({a}, {b}); cannot repair with a global flip")]
    MixedOrientation { a: usize, b: usize },
    #[error("triangle {panel} has zero area")]
    ZeroAreaPanel { panel: usize },
    #[error("enclosed volume is zero; the surface does not bound a region")]
    DegenerateVolume,
    #[error("subdivision level {got} exceeds the supported maximum {max}")]
    SubdivisionBound { got: usize, max: usize },
}

/// Summary quantities of a mesh, as reported by [`SurfaceMesh::statistics`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct MeshStatistics {
    pub n_vertices: usize,
    pub n_panels: usize,
    /// Longest edge length.
    pub h_max: f64,
    pub area: f64,
    pub volume: f64,
    pub euler_characteristic: i64,
}

/// A closed, consistently oriented, triangulated 2-manifold with outward
/// unit normals and per-panel derived data.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    normals: Vec<Vec3>,
    centroids: Vec<Vec3>,
    n_edges: usize,
    /// Set when construction had to flip all triangles to make normals
    /// point outward.
    orientation_flipped: bool,
}

impl SurfaceMesh {
    /// Build and fully validate a mesh. Checks index bounds, positive panel
    /// areas, the closed-manifold edge condition, orientation consistency,
    /// and outward normals. A consistently inward orientation is repaired by
    /// flipping every triangle; mixed orientation is an error.
    pub fn new(vertices: Vec<Vec3>, mut triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (panel, t) in triangles.iter().enumerate() {
            for &i in t {
                if i >= nv {
                    return Err(MeshError::IndexOutOfRange { panel, index: i });
                }
            }
        }
        for (panel, t) in triangles.iter().enumerate() {
            if tri_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) <= 0.0 {
                return Err(MeshError::ZeroAreaPanel { panel });
            }
        }

        // Undirected edge -> (count, count of the (min,max) direction).
        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for t in &triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = edges.entry(key).or_insert((0, 0));
                e.0 += 1;
                if (a, b) == key {
                    e.1 += 1;
                }
            }
        }
        for (&(a, b), &(count, forward)) in &edges {
            if count != 2 {
                return Err(MeshError::NonManifoldEdge { a, b, count });
            }
            // A consistently oriented closed surface traverses each edge once
            // in each direction.
            if forward != 1 {
                return Err(MeshError::MixedOrientation { a, b });
            }
        }
        let n_edges = edges.len();

        let signed_volume = |tris: &[[usize; 3]]| -> f64 {
            tris.iter()
                .map(|t| {
                    let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
                    a.dot(b.cross(c)) / 6.0
                })
                .sum()
        };
        let vol = signed_volume(&triangles);
        let mut orientation_flipped = false;
        if vol == 0.0 {
            return Err(MeshError::DegenerateVolume);
        }
        if vol < 0.0 {
            // Consistent but inward orientation: one global flip repairs it.
            for t in &mut triangles {
                t.swap(1, 2);
            }
            orientation_flipped = true;
        }

        let mut areas = Vec::with_capacity(triangles.len());
        let mut normals = Vec::with_capacity(triangles.len());
        let mut centroids = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            let av = tri_area_vector(a, b, c);
            areas.push(0.5 * av.norm());
            normals.push(av.normalized().expect("nondegenerate by the area check"));
            centroids.push(tri_centroid(a, b, c));
        }

        Ok(SurfaceMesh {
            vertices,
            triangles,
            areas,
            normals,
            centroids,
            n_edges,
            orientation_flipped,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_panels(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    #[inline]
    pub fn panel_vertices(&self, panel: usize) -> [Vec3; 3] {
        let t = self.triangles[panel];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    #[inline]
    pub fn panel_area(&self, panel: usize) -> f64 {
        self.areas[panel]
    }

    /// Unit normal pointing into the exterior.
    #[inline]
    pub fn panel_normal(&self, panel: usize) -> Vec3 {
        self.normals[panel]
    }

    #[inline]
    pub fn panel_centroid(&self, panel: usize) -> Vec3 {
        self.centroids[panel]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Enclosed volume via the divergence theorem (positive by construction).
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let (a, b, c) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    /// Longest edge length.
    pub fn h_max(&self) -> f64 {
        let mut h: f64 = 0.0;
        for t in &self.triangles {
            for k in 0..3 {
                h = h.max(self.vertices[t[k]].dist(self.vertices[t[(k + 1) % 3]]));
            }
        }
        h
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.n_edges as i64 + self.triangles.len() as i64
    }

    /// Whether construction had to flip all triangles to point the normals
    /// outward.
    pub fn orientation_was_flipped(&self) -> bool {
        self.orientation_flipped
    }

    /// Arithmetic mean of the vertices; reference center for sampling.
    pub fn vertex_centroid(&self) -> Vec3 {
        let mut c = Vec3::ZERO;
        for &v in &self.vertices {
            c += v;
        }
        c / self.vertices.len() as f64
    }

    /// Largest vertex distance from the vertex centroid.
    pub fn circumradius(&self) -> f64 {
        let c = self.vertex_centroid();
        self.vertices.iter().map(|v| v.dist(c)).fold(0.0, f64::max)
    }

    /// Smallest distance from the vertex centroid to a panel plane. For
    /// star-shaped surfaces this bounds an inscribed sphere.
    pub fn inradius(&self) -> f64 {
        let c = self.vertex_centroid();
        (0..self.n_panels())
            .map(|p| {
                let v0 = self.vertices[self.triangles[p][0]];
                (self.normals[p].dot(v0 - c)).abs()
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn statistics(&self) -> MeshStatistics {
        MeshStatistics {
            n_vertices: self.n_vertices(),
            n_panels: self.n_panels(),
            h_max: self.h_max(),
            area: self.total_area(),
            volume: self.volume(),
            euler_characteristic: self.euler_characteristic(),
        }
    }

    /// Serialize as ASCII OFF with 17 significant digits, enough for a
    /// bit-exact round trip of `f64` coordinates.
    pub fn to_off_string(&self) -> String {
        let mut s = String::new();
        s.push_str("OFF\n");
        let _ = writeln!(s, "{} {} {}", self.n_vertices(), self.n_panels(), self.n_edges);
        for v in &self.vertices {
            let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn save_off(&self, path: impl AsRef<Path>) -> Result<(), MeshError> {
        std::fs::write(path, self.to_off_string())?;
        Ok(())
    }
}

/// Maximum supported icosphere subdivision level.
pub const MAX_SUBDIVISIONS: usize = 7;

/// Icosahedron subdivided `subdivisions` times, every level re-projected to
/// the sphere of the given radius centered at the origin.
pub fn make_icosphere(subdivisions: usize, radius: f64) -> Result<SurfaceMesh, MeshError> {
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(MeshError::SubdivisionBound { got: subdivisions, max: MAX_SUBDIVISIONS });
    }
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z))
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    let project = |v: Vec3| v.normalized().expect("icosphere vertex away from origin") * radius;
    for v in verts.iter_mut() {
        *v = project(*v);
    }

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut new_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = project((verts[a] + verts[b]) * 0.5);
                    verts.push(m);
                    verts.len() - 1
                });
            }
            // Children keep the parent's counterclockwise orientation.
            new_faces.push([f[0], mid[0], mid[2]]);
            new_faces.push([f[1], mid[1], mid[0]]);
            new_faces.push([f[2], mid[2], mid[1]]);
            new_faces.push([mid[0], mid[1], mid[2]]);
        }
        faces = new_faces;
    }

    SurfaceMesh::new(verts, faces)
}

/// Parse an ASCII OFF file. Blank lines and `#` comments are allowed; faces
/// must be triangles. All mesh invariants are validated before returning.
pub fn load_off(path: impl AsRef<Path>) -> Result<SurfaceMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_off(&text)
}

/// Parse OFF text; see [`load_off`].
pub fn parse_off(text: &str) -> Result<SurfaceMesh, MeshError> {
    // (1-based line number, content without comments)
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or(MeshError::Parse { line: 1, msg: "empty file".into() })?;
    if header != "OFF" {
        return Err(MeshError::Parse { line: hline, msg: format!("expected 'OFF' header, found '{header}'") });
    }

    let (cline, counts) = lines
        .next()
        .ok_or(MeshError::Parse { line: hline, msg: "missing counts line".into() })?;
    let mut it = counts.split_whitespace();
    let mut next_count = |name: &str| -> Result<usize, MeshError> {
        it.next()
            .ok_or(MeshError::Parse { line: cline, msg: format!("missing {name} count") })?
            .parse()
            .map_err(|e| MeshError::Parse { line: cline, msg: format!("bad {name} count: {e}") })
    };
    let nv = next_count("vertex")?;
    let nf = next_count("face")?;
    let _ne = next_count("edge")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or(MeshError::Parse { line: cline, msg: "unexpected end of file in vertex list".into() })?;
        let mut f = l.split_whitespace().map(|t| {
            t.parse::<f64>()
                .map_err(|e| MeshError::Parse { line, msg: format!("bad coordinate '{t}': {e}") })
        });
        let mut coord = || -> Result<f64, MeshError> {
            f.next()
                .transpose()?
                .ok_or(MeshError::Parse { line, msg: "vertex line needs 3 coordinates".into() })
        };
        vertices.push(Vec3::new(coord()?, coord()?, coord()?));
    }

    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines
            .next()
            .ok_or(MeshError::Parse { line: cline, msg: "unexpected end of file in face list".into() })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let parse_idx = |t: &str| -> Result<usize, MeshError> {
            t.parse()
                .map_err(|e| MeshError::Parse { line, msg: format!("bad vertex index '{t}': {e}") })
        };
        if toks.is_empty() {
            return Err(MeshError::Parse { line, msg: "empty face line".into() });
        }
        let k = parse_idx(toks[0])?;
        if k != 3 {
            return Err(MeshError::Parse { line, msg: format!("only triangle faces are supported, got {k}-gon") });
        }
        if toks.len() < 4 {
            return Err(MeshError::Parse { line, msg: "face line needs 3 vertex indices".into() });
        }
        triangles.push([parse_idx(toks[1])?, parse_idx(toks[2])?, parse_idx(toks[3])?]);
    }

    SurfaceMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts_follow_subdivision() {
        for level in 0..4 {
            let m = make_icosphere(level, 1.0).unwrap();
            let f = 20 * 4usize.pow(level as u32);
            assert_eq!(m.n_panels(), f);
            assert_eq!(m.n_vertices(), 2 + f / 2); // V = 2 + F/2 for genus 0
            assert_eq!(m.euler_characteristic(), 2);
            assert!(!m.orientation_was_flipped());
        }
    }

    #[test]
    fn icosphere_area_and_volume_approach_sphere_values() {
        let r = 1.3;
        let sphere_area = 4.0 * std::f64::consts::PI * r * r;
        let sphere_vol = 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
        let mut prev_area_err = f64::INFINITY;
        let mut prev_vol_err = f64::INFINITY;
        for level in 1..5 {
            let m = make_icosphere(level, r).unwrap();
            let area_err = (sphere_area - m.total_area()) / sphere_area;
            let vol_err = (sphere_vol - m.volume()) / sphere_vol;
            // Inscribed polyhedron: both deficits are positive and shrink
            // by about 4x per level (second-order geometry error).
            assert!(area_err > 0.0 && vol_err > 0.0);
            assert!(area_err < 0.30 * prev_area_err, "area deficit not ~4x smaller");
            assert!(vol_err < 0.30 * prev_vol_err, "volume deficit not ~4x smaller");
            prev_area_err = area_err;
            prev_vol_err = vol_err;
        }
        let m3 = make_icosphere(3, r).unwrap();
        assert!((m3.total_area() - sphere_area).abs() / sphere_area < 6e-3);
    }

    #[test]
    fn h_max_shrinks_by_half_per_level() {
        let h2 = make_icosphere(2, 1.0).unwrap().h_max();
        let h3 = make_icosphere(3, 1.0).unwrap().h_max();
        assert!((h2 / h3 - 2.0).abs() < 0.1, "h2/h3 = {}", h2 / h3);
    }

    #[test]
    fn inward_oriented_mesh_is_flipped_to_positive_volume() {
        let m = make_icosphere(1, 1.0).unwrap();
        let flipped: Vec<[usize; 3]> = m.triangles().iter().map(|t| [t[0], t[2], t[1]]).collect();
        let m2 = SurfaceMesh::new(m.vertices().to_vec(), flipped).unwrap();
        assert!(m2.orientation_was_flipped());
        assert!(m2.volume() > 0.0);
        // Outward normals again: centroid · normal > 0 on a star-shaped surface.
        for p in 0..m2.n_panels() {
            assert!(m2.panel_centroid(p).dot(m2.panel_normal(p)) > 0.0);
        }
    }

    #[test]
    fn open_surface_is_rejected_as_non_manifold() {
        let m = make_icosphere(0, 1.0).unwrap();
        let mut tris = m.triangles().to_vec();
        tris.pop(); // boundary edges now have count 1
        match SurfaceMesh::new(m.vertices().to_vec(), tris) {
            Err(MeshError::NonManifoldEdge { count: 1, .. }) => {}
            other => panic!("expected non-manifold edge, got {other:?}"),
        }
    }

    #[test]
    fn mixed_orientation_is_rejected() {
        let m = make_icosphere(0, 1.0).unwrap();
        let mut tris = m.triangles().to_vec();
        tris[0] = [tris[0][0], tris[0][2], tris[0][1]];
        match SurfaceMesh::new(m.vertices().to_vec(), tris) {
            Err(MeshError::MixedOrientation { .. }) => {}
            other => panic!("expected mixed orientation, got {other:?}"),
        }
    }

    #[test]
    fn zero_area_panel_is_rejected() {
        let verts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0), // duplicate ⇒ degenerate faces
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let tris = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
        match SurfaceMesh::new(verts, tris) {
            Err(MeshError::ZeroAreaPanel { .. }) => {}
            other => panic!("expected zero-area panel, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let m = make_icosphere(0, 1.0).unwrap();
        let mut tris = m.triangles().to_vec();
        tris[5][1] = 99;
        match SurfaceMesh::new(m.vertices().to_vec(), tris) {
            Err(MeshError::IndexOutOfRange { panel: 5, index: 99 }) => {}
            other => panic!("expected index error, got {other:?}"),
        }
    }

    #[test]
    fn subdivision_bound_is_enforced() {
        assert!(matches!(
            make_icosphere(MAX_SUBDIVISIONS + 1, 1.0),
            Err(MeshError::SubdivisionBound { .. })
        ));
    }

    #[test]
    fn off_round_trip_preserves_geometry_and_connectivity() {
        let m = make_icosphere(2, 0.75).unwrap();
        let text = m.to_off_string();
        let m2 = parse_off(&text).unwrap();
        assert_eq!(m.n_vertices(), m2.n_vertices());
        assert_eq!(m.triangles(), m2.triangles());
        for (a, b) in m.vertices().iter().zip(m2.vertices()) {
            assert_eq!(a.x, b.x, "coordinates must survive the round trip bit-exactly");
            assert_eq!(a.y, b.y);
            assert_eq!(a.z, b.z);
        }
        assert_eq!(m.statistics().h_max, m2.statistics().h_max);
    }

    #[test]
    fn off_parser_reports_line_numbers_and_rejects_polygons() {
        let bad_header = "NOFF\n3 1 0\n";
        match parse_off(bad_header) {
            Err(MeshError::Parse { line: 1, .. }) => {}
            other => panic!("expected header parse error, got {other:?}"),
        }

        let bad_coord = "OFF\n# comment\n3 1 3\n0 0 zero\n1 0 0\n0 1 0\n3 0 1 2\n";
        match parse_off(bad_coord) {
            Err(MeshError::Parse { line: 4, msg }) => assert!(msg.contains("zero")),
            other => panic!("expected coordinate parse error, got {other:?}"),
        }

        let quad = "OFF\n4 1 4\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        match parse_off(quad) {
            Err(MeshError::Parse { line: 7, msg }) => assert!(msg.contains("triangle")),
            other => panic!("expected polygon rejection, got {other:?}"),
        }
    }

    #[test]
    fn save_and_load_off_through_filesystem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ball.off");
        let m = make_icosphere(1, 2.0).unwrap();
        m.save_off(&path).unwrap();
        let m2 = load_off(&path).unwrap();
        assert_eq!(m.triangles(), m2.triangles());
        assert!((m.volume() - m2.volume()).abs() < 1e-15);
        assert!(matches!(load_off(dir.path().join("missing.off")), Err(MeshError::Io(_))));
    }

    #[test]
    fn statistics_serialize_to_json() {
        let m = make_icosphere(1, 1.0).unwrap();
        let s = serde_json::to_string(&m.statistics()).unwrap();
        assert!(s.contains("\"n_vertices\":42"));
        assert!(s.contains("\"euler_characteristic\":2"));
    }
}
