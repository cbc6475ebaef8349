//! Off-surface evaluation of the layer potentials.
//!
//! The represented field is `u = U[σ] + V[q]` with
//!
//! * `U[σ](x) = ∫ σ(y) / (4π|x−y|) dS_y` (single layer), and
//! * `V[q](x) = −∫ q(y) n_y·(x−y) / (4π|x−y|³) dS_y` (double layer, so that
//!   `V[1] = 1` inside and `0` outside a closed surface).
//!
//! Panels near an evaluation point are integrated by deterministic
//! subdivision: a cell is integrated directly once the point is at least
//! twice the cell diameter away (with the quadrature degree chosen by the
//! separation ratio), otherwise it splits into four midpoint children.
//! Points are processed independently and in order, so results are bitwise
//! reproducible for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{bary_point, point_triangle_distance, tri_area, Vec3};
use crate::mesh::SurfaceMesh;
use crate::quadrature::{QuadratureError, TriangleRule};
use crate::spaces::{CoeffKind, CoeffVec};

#[derive(Debug, thiserror::Error)]
pub enum PotentialError {
    #[error("evaluation point {index} is {distance:.3e} from the surface, inside the guard distance {guard:.3e}")]
    PointTooClose { index: usize, distance: f64, guard: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Which side of the closed surface a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Interior,
    Exterior,
}

/// Default guard-band factor: points closer than `0.05 · h_max` to the
/// surface are rejected by [`EvaluationSet::classify`].
pub const DEFAULT_GUARD_FACTOR: f64 = 0.05;

/// A set of evaluation points, each classified as interior or exterior by
/// its winding number and guaranteed to keep a guard distance from the
/// surface.
#[derive(Debug, Clone)]
pub struct EvaluationSet {
    points: Vec<Vec3>,
    sides: Vec<Side>,
}

impl EvaluationSet {
    /// Classify `points` against the surface with the default guard factor.
    pub fn classify(mesh: &SurfaceMesh, points: &[Vec3]) -> Result<Self, PotentialError> {
        Self::classify_with_guard(mesh, points, DEFAULT_GUARD_FACTOR)
    }

    /// Classify with an explicit guard factor (multiple of `h_max`).
    pub fn classify_with_guard(
        mesh: &SurfaceMesh,
        points: &[Vec3],
        guard_factor: f64,
    ) -> Result<Self, PotentialError> {
        let guard = guard_factor * mesh.h_max();
        let mut sides = Vec::with_capacity(points.len());
        for (index, &p) in points.iter().enumerate() {
            let distance = surface_distance(mesh, p);
            if distance < guard {
                return Err(PotentialError::PointTooClose { index, distance, guard });
            }
            sides.push(classify_by_winding(mesh, p));
        }
        Ok(EvaluationSet { points: points.to_vec(), sides })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }
}

/// Distance from `p` to the triangulated surface.
pub fn surface_distance(mesh: &SurfaceMesh, p: Vec3) -> f64 {
    (0..mesh.n_panels())
        .map(|i| {
            let v = mesh.panel_vertices(i);
            point_triangle_distance(p, v[0], v[1], v[2])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Interior/exterior classification by the generalized winding number
/// (sum of signed solid angles over all panels, divided by 4π). Exact for
/// points off the surface of a closed oriented mesh; no rays, no tie-breaks.
pub fn classify_by_winding(mesh: &SurfaceMesh, p: Vec3) -> Side {
    let mut omega = 0.0;
    for i in 0..mesh.n_panels() {
        let v = mesh.panel_vertices(i);
        let a = v[0] - p;
        let b = v[1] - p;
        let c = v[2] - p;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let det = a.dot(b.cross(c));
        let denom = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
        omega += 2.0 * det.atan2(denom);
    }
    if omega / (4.0 * std::f64::consts::PI) > 0.5 {
        Side::Interior
    } else {
        Side::Exterior
    }
}

#[derive(Clone, Copy)]
enum Mode {
    Single,
    Double,
}

/// Degree ladder for direct integration, by separation ratio
/// `dist(x, cell centroid) / cell diameter`. Below the first rung the cell
/// is subdivided instead.
struct EvalRules {
    rules: [(f64, TriangleRule); 4],
}

impl EvalRules {
    fn new() -> Result<Self, QuadratureError> {
        Ok(EvalRules {
            rules: [
                (16.0, TriangleRule::for_degree(4)?),
                (8.0, TriangleRule::for_degree(8)?),
                (4.0, TriangleRule::for_degree(12)?),
                (2.0, TriangleRule::for_degree(16)?),
            ],
        })
    }

    /// The cheapest rule admissible at this separation ratio, or `None`
    /// when the cell must be subdivided.
    fn pick(&self, ratio: f64) -> Option<&TriangleRule> {
        self.rules.iter().find(|(min_ratio, _)| ratio >= *min_ratio).map(|(_, r)| r)
    }
}

const MAX_SUBDIV_DEPTH: usize = 24;

/// One panel's contribution to (single, double) layer values at `x`.
/// `verts` is the current cell, `basis` the panel's three nodal values at
/// the cell's corners (a linear density restricted to the cell stays linear,
/// so corner values fully describe it).
#[allow(clippy::too_many_arguments)]
fn accumulate_cell(
    x: Vec3,
    verts: [Vec3; 3],
    basis: [[f64; 3]; 3],
    nodal: [f64; 3],
    normal: Vec3,
    mode: Mode,
    rules: &EvalRules,
    depth: usize,
    acc: &mut (f64, f64),
) {
    let diam = (verts[0] - verts[1])
        .norm()
        .max((verts[1] - verts[2]).norm())
        .max((verts[2] - verts[0]).norm());
    let centroid = (verts[0] + verts[1] + verts[2]) / 3.0;
    let ratio = (x - centroid).norm() / diam;
    let rule = match rules.pick(ratio) {
        Some(r) => r,
        None if depth < MAX_SUBDIV_DEPTH => {
            // Midpoint split into four children; corner basis values are
            // linear interpolants, exact for the P1 density.
            let m01 = (verts[0] + verts[1]) * 0.5;
            let m12 = (verts[1] + verts[2]) * 0.5;
            let m20 = (verts[2] + verts[0]) * 0.5;
            let b01 = mid_basis(basis[0], basis[1]);
            let b12 = mid_basis(basis[1], basis[2]);
            let b20 = mid_basis(basis[2], basis[0]);
            let children: [([Vec3; 3], [[f64; 3]; 3]); 4] = [
                ([verts[0], m01, m20], [basis[0], b01, b20]),
                ([m01, verts[1], m12], [b01, basis[1], b12]),
                ([m20, m12, verts[2]], [b20, b12, basis[2]]),
                ([m01, m12, m20], [b01, b12, b20]),
            ];
            for (cv, cb) in children {
                accumulate_cell(x, cv, cb, nodal, normal, mode, rules, depth + 1, acc);
            }
            return;
        }
        // Depth cap: the cell is astronomically small by now; integrate
        // with the highest-degree rule rather than recurse further.
        None => &rules.rules[3].1,
    };

    let area = tri_area(verts[0], verts[1], verts[2]);
    let mut s_single = 0.0;
    let mut s_double = 0.0;
    for (b, w) in rule.points().iter().zip(rule.weights()) {
        let y = bary_point(&verts, *b);
        // Basis values on the parent panel at this point.
        let f0 = b[0] * basis[0][0] + b[1] * basis[1][0] + b[2] * basis[2][0];
        let f1 = b[0] * basis[0][1] + b[1] * basis[1][1] + b[2] * basis[2][1];
        let f2 = b[0] * basis[0][2] + b[1] * basis[1][2] + b[2] * basis[2][2];
        let dens = f0 * nodal[0] + f1 * nodal[1] + f2 * nodal[2];
        let d = x - y;
        let r2 = d.norm2();
        let inv_r = 1.0 / r2.sqrt();
        match mode {
            Mode::Single => s_single += w * dens * inv_r,
            Mode::Double => s_double -= w * dens * normal.dot(d) * inv_r / r2,
        }
    }
    let scale = area * 0.25 * std::f64::consts::FRAC_1_PI;
    acc.0 += scale * s_single;
    acc.1 += scale * s_double;
}

fn mid_basis(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5, (a[2] + b[2]) * 0.5]
}

fn eval_points(
    mesh: &SurfaceMesh,
    sigma: Option<&CoeffVec>,
    q: Option<&CoeffVec>,
    points: &[Vec3],
) -> Result<Vec<(f64, f64)>, PotentialError> {
    if let Some(s) = sigma {
        assert_eq!(s.kind, CoeffKind::Flux, "single-layer density must be flux-like");
        assert_eq!(s.len(), mesh.n_vertices());
    }
    if let Some(qq) = q {
        assert_eq!(qq.kind, CoeffKind::Trace, "double-layer density must be trace-like");
        assert_eq!(qq.len(), mesh.n_vertices());
    }
    let rules = EvalRules::new()?;
    let identity_basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let out = points
        .par_iter()
        .map(|&x| {
            let mut total = (0.0, 0.0);
            for p in 0..mesh.n_panels() {
                let verts = mesh.panel_vertices(p);
                let tri = &mesh.triangles()[p];
                let normal = mesh.panel_normal(p);
                if let Some(s) = sigma {
                    let nodal = [s.values[tri[0]], s.values[tri[1]], s.values[tri[2]]];
                    accumulate_cell(x, verts, identity_basis, nodal, normal, Mode::Single, &rules, 0, &mut total);
                }
                if let Some(qq) = q {
                    let nodal = [qq.values[tri[0]], qq.values[tri[1]], qq.values[tri[2]]];
                    let mut dl = (0.0, 0.0);
                    accumulate_cell(x, verts, identity_basis, nodal, normal, Mode::Double, &rules, 0, &mut dl);
                    total.1 += dl.1;
                }
            }
            total
        })
        .collect();
    Ok(out)
}

/// Single-layer potential `U[σ]` at each point.
pub fn eval_single_layer(mesh: &SurfaceMesh, sigma: &CoeffVec, points: &[Vec3]) -> Result<Vec<f64>, PotentialError> {
    Ok(eval_points(mesh, Some(sigma), None, points)?.into_iter().map(|v| v.0).collect())
}

/// Double-layer potential `V[q]` at each point.
pub fn eval_double_layer(mesh: &SurfaceMesh, q: &CoeffVec, points: &[Vec3]) -> Result<Vec<f64>, PotentialError> {
    Ok(eval_points(mesh, None, Some(q), points)?.into_iter().map(|v| v.1).collect())
}

/// The full representation `u = U[σ] + V[q]` at each point.
pub fn eval_solution(
    mesh: &SurfaceMesh,
    sigma: &CoeffVec,
    q: &CoeffVec,
    points: &[Vec3],
) -> Result<Vec<f64>, PotentialError> {
    Ok(eval_points(mesh, Some(sigma), Some(q), points)?.into_iter().map(|v| v.0 + v.1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_icosphere;
    use crate::spaces::CoeffKind;

    fn ones(kind: CoeffKind, n: usize) -> CoeffVec {
        CoeffVec::new(kind, vec![1.0; n])
    }

    #[test]
    fn winding_classification_separates_inside_from_outside() {
        let mesh = make_icosphere(2, 1.0).unwrap();
        let pts = [
            (Vec3::ZERO, Side::Interior),
            (Vec3::new(0.5, -0.2, 0.3), Side::Interior),
            (Vec3::new(2.0, 0.0, 0.0), Side::Exterior),
            (Vec3::new(-1.2, 1.1, 0.4), Side::Exterior),
        ];
        for (p, side) in pts {
            assert_eq!(classify_by_winding(&mesh, p), side, "{p:?}");
        }
        let set = EvaluationSet::classify(&mesh, &pts.map(|(p, _)| p)).unwrap();
        assert_eq!(set.sides(), &pts.map(|(_, s)| s));
    }

    #[test]
    fn guard_band_rejects_points_hugging_the_surface() {
        let mesh = make_icosphere(2, 1.0).unwrap();
        // A vertex lies exactly on the sphere; nudge barely off it.
        let v = mesh.vertices()[7];
        let p = v * (1.0 + 1e-9);
        match EvaluationSet::classify(&mesh, &[Vec3::new(3.0, 0.0, 0.0), p]) {
            Err(PotentialError::PointTooClose { index: 1, distance, guard }) => {
                assert!(distance < guard);
            }
            other => panic!("expected guard rejection, got {other:?}"),
        }
    }

    #[test]
    fn single_layer_of_unit_density_matches_sphere_closed_form() {
        // For the unit sphere, U[1] = 1 inside and 1/|x| outside; the
        // level-2 polyhedron reproduces it to its O(h²) area deficit.
        let mesh = make_icosphere(2, 1.0).unwrap();
        let sigma = ones(CoeffKind::Flux, mesh.n_vertices());
        let pts = [Vec3::new(0.3, 0.2, -0.1), Vec3::new(0.0, 0.0, 2.0), Vec3::new(-3.0, 1.0, 0.5)];
        let u = eval_single_layer(&mesh, &sigma, &pts).unwrap();
        let exact = [1.0, 0.5, 1.0 / pts[2].norm()];
        for ((got, want), p) in u.iter().zip(exact).zip(pts) {
            assert!((got - want).abs() < 2e-2 * want, "{p:?}: {got} vs {want}");
        }
    }

    #[test]
    fn double_layer_of_unit_density_jumps_from_one_to_zero() {
        // V[1] is the winding number: exactly 1 inside and 0 outside the
        // polyhedron itself, so the only error is quadrature.
        let mesh = make_icosphere(2, 1.0).unwrap();
        let q = ones(CoeffKind::Trace, mesh.n_vertices());
        let pts = [
            Vec3::new(0.1, -0.3, 0.2),
            Vec3::new(0.61, 0.0, 0.0),
            Vec3::new(1.8, 0.0, 0.0),
            Vec3::new(-5.0, 2.0, 1.0),
        ];
        let v = eval_double_layer(&mesh, &q, &pts).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-10, "deep interior: {}", v[0]);
        assert!((v[1] - 1.0).abs() < 1e-10, "interior: {}", v[1]);
        assert!(v[2].abs() < 1e-10, "exterior: {}", v[2]);
        assert!(v[3].abs() < 1e-12, "far exterior: {}", v[3]);
    }

    #[test]
    fn evaluation_is_linear_in_the_density() {
        let mesh = make_icosphere(1, 1.0).unwrap();
        let n = mesh.n_vertices();
        let s1 = CoeffVec::new(CoeffKind::Flux, mesh.vertices().iter().map(|v| v.x).collect());
        let s2 = CoeffVec::new(CoeffKind::Flux, mesh.vertices().iter().map(|v| v.y * v.z).collect());
        let combo = CoeffVec::new(
            CoeffKind::Flux,
            (0..n).map(|i| 2.0 * s1.values[i] - 0.7 * s2.values[i]).collect(),
        );
        let pts = [Vec3::new(0.2, 0.1, 0.3), Vec3::new(1.7, -0.4, 0.2)];
        let u1 = eval_single_layer(&mesh, &s1, &pts).unwrap();
        let u2 = eval_single_layer(&mesh, &s2, &pts).unwrap();
        let uc = eval_single_layer(&mesh, &combo, &pts).unwrap();
        for i in 0..pts.len() {
            let lin = 2.0 * u1[i] - 0.7 * u2[i];
            assert!((uc[i] - lin).abs() < 1e-13 * lin.abs().max(1e-3));
        }
    }

    #[test]
    fn solution_equals_sum_of_the_two_layers() {
        let mesh = make_icosphere(1, 1.0).unwrap();
        let sigma = CoeffVec::new(CoeffKind::Flux, mesh.vertices().iter().map(|v| 1.0 + v.z).collect());
        let q = CoeffVec::new(CoeffKind::Trace, mesh.vertices().iter().map(|v| v.x - 0.2).collect());
        let pts = [Vec3::new(0.4, 0.0, 0.1), Vec3::new(0.0, 2.5, 0.0)];
        let u = eval_solution(&mesh, &sigma, &q, &pts).unwrap();
        let us = eval_single_layer(&mesh, &sigma, &pts).unwrap();
        let uq = eval_double_layer(&mesh, &q, &pts).unwrap();
        for i in 0..pts.len() {
            assert!((u[i] - us[i] - uq[i]).abs() < 1e-14 * u[i].abs().max(1e-6));
        }
    }

    #[test]
    fn mean_zero_density_decays_like_a_dipole() {
        // With the monopole moment removed, U[σ] ~ 1/r², so the value at
        // |x| = 5 is about four times the value at |x| = 10.
        let mesh = make_icosphere(2, 1.0).unwrap();
        // x-coordinate density: centrosymmetric mesh, so exactly mean-zero.
        let sigma = CoeffVec::new(CoeffKind::Flux, mesh.vertices().iter().map(|v| v.x).collect());
        let pts = [Vec3::new(5.0, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0)];
        let u = eval_single_layer(&mesh, &sigma, &pts).unwrap();
        let factor = u[0] / u[1];
        assert!(
            (3.5..=4.5).contains(&factor),
            "far-field decay factor {factor} outside the dipole window"
        );
    }

    #[test]
    fn potentials_are_harmonic_away_from_the_surface() {
        // Seven-point Laplacian stencil with spacing 1e-2, normalized by
        // the field scale, at an interior and an exterior probe.
        let mesh = make_icosphere(2, 1.0).unwrap();
        let sigma = CoeffVec::new(CoeffKind::Flux, mesh.vertices().iter().map(|v| 1.0 + 0.5 * v.x).collect());
        let q = CoeffVec::new(CoeffKind::Trace, mesh.vertices().iter().map(|v| v.z).collect());
        let h = 1e-2;
        for center in [Vec3::new(0.2, 0.1, -0.15), Vec3::new(1.6, 0.3, 0.4)] {
            let stencil = [
                center,
                center + Vec3::new(h, 0.0, 0.0),
                center - Vec3::new(h, 0.0, 0.0),
                center + Vec3::new(0.0, h, 0.0),
                center - Vec3::new(0.0, h, 0.0),
                center + Vec3::new(0.0, 0.0, h),
                center - Vec3::new(0.0, 0.0, h),
            ];
            let u = eval_solution(&mesh, &sigma, &q, &stencil).unwrap();
            let lap = (u[1] + u[2] + u[3] + u[4] + u[5] + u[6] - 6.0 * u[0]) / (h * h);
            let scale = u[0].abs().max(1.0);
            assert!(lap.abs() / scale < 1e-4, "Laplacian probe at {center:?}: {lap}");
        }
    }

    #[test]
    fn evaluation_is_deterministic_across_thread_counts() {
        let mesh = make_icosphere(1, 1.0).unwrap();
        let sigma = CoeffVec::new(CoeffKind::Flux, mesh.vertices().iter().map(|v| v.x + 0.3).collect());
        let pts: Vec<Vec3> = (0..17)
            .map(|i| {
                let t = i as f64 * 0.37;
                Vec3::new(2.0 * t.cos(), 2.0 * t.sin(), 0.4)
            })
            .collect();
        let base = eval_single_layer(&mesh, &sigma, &pts).unwrap();
        for threads in [1usize, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let got = pool.install(|| eval_single_layer(&mesh, &sigma, &pts).unwrap());
            assert_eq!(got, base);
        }
    }
}
