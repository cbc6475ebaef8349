//! Numerical integration over triangles and triangle pairs.
//!
//! Three layers:
//!
//! * [`TriangleRule`] — symmetric rules on a single triangle, exact for
//!   polynomials up to a requested degree (tabulated low-order rules, a
//!   symmetrized collapsed tensor-Gauss construction beyond them);
//! * [`PanelPairRule`] / [`SingularRules`] — product rules for double
//!   integrals over panel pairs. Disjoint pairs use tensor products of
//!   single-triangle rules; pairs sharing a vertex, an edge, or coinciding
//!   use relative-coordinate transformations that remove the kernel
//!   singularity, so plain Gauss points converge exponentially;
//! * [`analytic_single_layer_panel`] — the closed-form integral of
//!   `1/(4π|x−r|)` over a flat triangle, used as an independent check and
//!   for near-surface evaluation.
//!
//! Weight conventions: single-triangle weights sum to one, so a physical
//! integral is `area · Σ wᵢ f(xᵢ)`. Pair-rule weights fold all Jacobians in,
//! so a physical double integral is `area_a · area_b · Σ wᵢ k(xᵢ, yᵢ)`.

use crate::geom::{bary_point, tri_area, tri_unit_normal, Vec3};

/// Highest polynomial degree [`TriangleRule::for_degree`] supports.
pub const MAX_TRIANGLE_DEGREE: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum QuadratureError {
    #[error("unsupported triangle-rule degree {got} (maximum {max})")]
    UnsupportedDegree { got: usize, max: usize },
    #[error("invalid Gauss order {got} (must be between 1 and 64)")]
    InvalidOrder { got: usize },
    #[error("degenerate (zero-area) triangle")]
    DegenerateTriangle,
}

/// Gauss–Legendre nodes and weights on `[0, 1]`; weights sum to one.
pub fn gauss_legendre_01(n: usize) -> Result<(Vec<f64>, Vec<f64>), QuadratureError> {
    if n == 0 || n > 64 {
        return Err(QuadratureError::InvalidOrder { got: n });
    }
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // Standard initial guess for the i-th root of the Legendre polynomial.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        xs[i] = 0.5 * (x + 1.0);
        ws[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    xs.reverse();
    ws.reverse();
    Ok((xs, ws))
}

/// Legendre polynomial `P_n` and its derivative at `x`, via the three-term
/// recurrence (valid for `|x| < 1`, which holds at every interior root).
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let pk = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Quadrature rule on a triangle in barycentric coordinates.
///
/// `degree` is the guaranteed polynomial exactness. Weights sum to one, so
/// the physical integral is `area · Σ wᵢ f(xᵢ)`.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

/// Three points of a (a, b, b) symmetry orbit.
fn orbit3(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, b: f64, w: f64) {
    points.push([a, b, b]);
    points.push([b, a, b]);
    points.push([b, b, a]);
    weights.extend_from_slice(&[w, w, w]);
}

/// Six points: all permutations of (a, b, c).
fn orbit6(points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>, a: f64, b: f64, c: f64, w: f64) {
    for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push(p);
        weights.push(w);
    }
}

impl TriangleRule {
    /// Rule exact for polynomials of (at least) the given total degree.
    ///
    /// Degrees up to 6 use tabulated symmetric rules; degrees 7–20 use a
    /// collapsed tensor-Gauss rule, symmetrized over cyclic vertex
    /// relabelings. All weights are positive.
    pub fn for_degree(degree: usize) -> Result<Self, QuadratureError> {
        if degree > MAX_TRIANGLE_DEGREE {
            return Err(QuadratureError::UnsupportedDegree { got: degree, max: MAX_TRIANGLE_DEGREE });
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        match degree {
            0 | 1 => {
                points.push([1.0 / 3.0; 3]);
                weights.push(1.0);
            }
            2 => orbit3(&mut points, &mut weights, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0),
            3 | 4 => {
                orbit3(&mut points, &mut weights, 0.108103018168070, 0.445948490915965, 0.223381589678011);
                orbit3(&mut points, &mut weights, 0.816847572980459, 0.091576213509771, 0.109951743655322);
            }
            5 => {
                points.push([1.0 / 3.0; 3]);
                weights.push(9.0 / 40.0);
                orbit3(&mut points, &mut weights, 0.059715871789770, 0.470142064105115, 0.132394152788506);
                orbit3(&mut points, &mut weights, 0.797426985353087, 0.101286507323456, 0.125939180544827);
            }
            6 => {
                orbit3(&mut points, &mut weights, 0.873821971016996, 0.063089014491502, 0.050844906370207);
                orbit3(&mut points, &mut weights, 0.501426509658179, 0.249286745170910, 0.116786275726379);
                orbit6(
                    &mut points,
                    &mut weights,
                    0.636502499121399,
                    0.310352451033785,
                    0.053145049844816,
                    0.082851075618374,
                );
            }
            d => {
                // Collapsed tensor-Gauss: ξ = u, η = v(1−u) maps the square
                // to the reference triangle with Jacobian (1−u). Exactness
                // needs 2n−1 ≥ d+1. Cyclic symmetrization removes the
                // vertex-ordering bias of the collapse.
                let n = (d + 2).div_ceil(2);
                let (u, wu) = gauss_legendre_01(n)?;
                for i in 0..n {
                    for j in 0..n {
                        let xi = u[i];
                        let eta = u[j] * (1.0 - u[i]);
                        let w = 2.0 * wu[i] * wu[j] * (1.0 - u[i]) / 3.0;
                        let b = [1.0 - xi - eta, xi, eta];
                        points.push(b);
                        points.push([b[1], b[2], b[0]]);
                        points.push([b[2], b[0], b[1]]);
                        weights.extend_from_slice(&[w, w, w]);
                    }
                }
            }
        }
        Ok(TriangleRule { points, weights, degree })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Barycentric points.
    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    /// Weights, summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫_T f dS = area · Σ wᵢ f(xᵢ)`.
    pub fn integrate_physical(&self, verts: &[Vec3; 3], mut f: impl FnMut(Vec3) -> f64) -> f64 {
        let a = tri_area(verts[0], verts[1], verts[2]);
        let mut s = 0.0;
        for (b, w) in self.points.iter().zip(&self.weights) {
            s += w * f(bary_point(verts, *b));
        }
        a * s
    }
}

/// Relative position of an ordered pair of panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairConfig {
    Disjoint,
    SharedVertex,
    SharedEdge,
    Identical,
}

/// Classify a pair of panels by their shared global vertices.
pub fn classify_pair(ta: &[usize; 3], tb: &[usize; 3]) -> PairConfig {
    let shared = ta.iter().filter(|v| tb.contains(v)).count();
    match shared {
        0 => PairConfig::Disjoint,
        1 => PairConfig::SharedVertex,
        2 => PairConfig::SharedEdge,
        _ => PairConfig::Identical,
    }
}

/// Classify a pair and compute the local vertex permutations that bring it
/// into the canonical layout the singular rules are written in:
///
/// * shared edge → the edge's (smaller, larger) global vertices occupy local
///   slots 0 and 1 *in the same order* in both panels;
/// * shared vertex → the shared vertex occupies local slot 0 in both panels;
/// * identical / disjoint → identity.
///
/// `perm[k]` is the panel's original local index sitting in aligned slot `k`,
/// so an aligned barycentric triple `b` becomes `b_orig[perm[k]] = b[k]`.
/// The edge case may use an odd permutation on one side; the chart covers
/// the same triangle either way, and its area factor is independent of the
/// vertex ordering.
pub fn classify_and_align(ta: &[usize; 3], tb: &[usize; 3]) -> (PairConfig, [usize; 3], [usize; 3]) {
    let config = classify_pair(ta, tb);
    let id = [0usize, 1, 2];
    match config {
        PairConfig::Disjoint | PairConfig::Identical => (config, id, id),
        PairConfig::SharedEdge => {
            let shared: Vec<usize> = ta.iter().copied().filter(|v| tb.contains(v)).collect();
            let (g0, g1) = (shared[0].min(shared[1]), shared[0].max(shared[1]));
            let edge_perm = |t: &[usize; 3]| -> [usize; 3] {
                let p0 = t.iter().position(|&v| v == g0).unwrap();
                let p1 = t.iter().position(|&v| v == g1).unwrap();
                [p0, p1, 3 - p0 - p1]
            };
            (config, edge_perm(ta), edge_perm(tb))
        }
        PairConfig::SharedVertex => {
            let g = *ta.iter().find(|v| tb.contains(v)).unwrap();
            let rot = |t: &[usize; 3]| -> [usize; 3] {
                let p = t.iter().position(|&v| v == g).unwrap();
                [p, (p + 1) % 3, (p + 2) % 3]
            };
            (config, rot(ta), rot(tb))
        }
    }
}

/// One node of a pair rule: barycentric coordinates on each panel and a
/// combined weight (`∫∫ = area_a · area_b · Σ w k`).
#[derive(Debug, Clone, Copy)]
pub struct PairPoint {
    pub bary_a: [f64; 3],
    pub bary_b: [f64; 3],
    pub weight: f64,
}

/// The chart `x = a₀ + s(a₁−a₀) + t(a₂−a₁)` over `0 ≤ t ≤ s ≤ 1` has
/// barycentric coordinates `(1−s, s−t, t)` and constant area factor `2A`.
#[inline]
fn chart_bary(s: f64, t: f64) -> [f64; 3] {
    [1.0 - s, s - t, t]
}

/// Precomputed singular pair rules in the canonical (aligned) frame, one per
/// configuration, reusable across every panel pair of a mesh.
#[derive(Debug, Clone)]
pub struct SingularRules {
    order: usize,
    identical: Vec<PairPoint>,
    edge: Vec<PairPoint>,
    vertex: Vec<PairPoint>,
}

impl SingularRules {
    /// Build the three singular rules with an `order`-point Gauss basis per
    /// coordinate (so `order⁴` points per subdomain).
    pub fn new(order: usize) -> Result<Self, QuadratureError> {
        let (x, w) = gauss_legendre_01(order)?;
        let mut identical = Vec::with_capacity(6 * order.pow(4));
        let mut edge = Vec::with_capacity(5 * order.pow(4));
        let mut vertex = Vec::with_capacity(2 * order.pow(4));
        let push = |out: &mut Vec<PairPoint>, xh: (f64, f64), yh: (f64, f64), wt: f64| {
            out.push(PairPoint {
                bary_a: chart_bary(xh.0, xh.1),
                bary_b: chart_bary(yh.0, yh.1),
                // Fold in the 2A·2A′ chart factors relative to the
                // area_a·area_b convention.
                weight: 4.0 * wt,
            });
        };
        for (&xi, &wi) in x.iter().zip(&w) {
            for (&e1, &w1) in x.iter().zip(&w) {
                for (&e2, &w2) in x.iter().zip(&w) {
                    for (&e3, &w3) in x.iter().zip(&w) {
                        let gw = wi * w1 * w2 * w3;

                        // Coinciding panels: six subdomains, one Jacobian.
                        let j_id = xi.powi(3) * e1 * e1 * e2;
                        let id_regions = [
                            ((xi, xi * (1.0 - e1 + e1 * e2)), (xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1))),
                            ((xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)), (xi, xi * (1.0 - e1 + e1 * e2))),
                            (
                                (xi, xi * (e1 * (1.0 - e2) + e1 * e2 * e3)),
                                (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)),
                            ),
                            (
                                (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)),
                                (xi, xi * (e1 * (1.0 - e2) + e1 * e2 * e3)),
                            ),
                            ((xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)), (xi, xi * e1 * (1.0 - e2))),
                            ((xi, xi * e1 * (1.0 - e2)), (xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3))),
                        ];
                        for (xh, yh) in id_regions {
                            push(&mut identical, xh, yh, gw * j_id);
                        }

                        // Shared edge: five subdomains, per-subdomain Jacobians.
                        let je1 = xi.powi(3) * e1 * e1;
                        let je2 = je1 * e2;
                        let edge_regions = [
                            ((xi, xi * e1 * e3), (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)), je1),
                            ((xi, xi * e1), (xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)), je2),
                            ((xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)), (xi, xi * e1 * e2 * e3), je2),
                            ((xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)), (xi, xi * e1), je2),
                            ((xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)), (xi, xi * e1 * e2), je2),
                        ];
                        for (xh, yh, j) in edge_regions {
                            push(&mut edge, xh, yh, gw * j);
                        }

                        // Shared vertex: two subdomains.
                        let jv = xi.powi(3) * e2;
                        push(&mut vertex, (xi, xi * e1), (xi * e2, xi * e2 * e3), gw * jv);
                        push(&mut vertex, (xi * e2, xi * e2 * e3), (xi, xi * e1), gw * jv);
                    }
                }
            }
        }
        Ok(SingularRules { order, identical, edge, vertex })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Rule points in the aligned frame for a singular configuration; apply
    /// the permutations from [`classify_and_align`] to read them in a
    /// panel's own vertex ordering. Panics on `Disjoint`, which has no
    /// singular rule.
    pub fn aligned_points(&self, config: PairConfig) -> &[PairPoint] {
        match config {
            PairConfig::Identical => &self.identical,
            PairConfig::SharedEdge => &self.edge,
            PairConfig::SharedVertex => &self.vertex,
            PairConfig::Disjoint => panic!("disjoint pairs use tensor rules, not singular rules"),
        }
    }
}

/// A ready-to-evaluate rule for one ordered panel pair, with barycentric
/// coordinates already expressed in each panel's own vertex ordering.
#[derive(Debug, Clone)]
pub struct PanelPairRule {
    config: PairConfig,
    points: Vec<PairPoint>,
}

impl PanelPairRule {
    /// Tensor product of two single-triangle rules (disjoint panels).
    pub fn disjoint(rule_a: &TriangleRule, rule_b: &TriangleRule) -> Self {
        let mut points = Vec::with_capacity(rule_a.len() * rule_b.len());
        for (ba, wa) in rule_a.points().iter().zip(rule_a.weights()) {
            for (bb, wb) in rule_b.points().iter().zip(rule_b.weights()) {
                points.push(PairPoint { bary_a: *ba, bary_b: *bb, weight: wa * wb });
            }
        }
        PanelPairRule { config: PairConfig::Disjoint, points }
    }

    /// Build the rule for panels with global vertex triples `ta`, `tb`:
    /// classification, alignment and un-permutation are handled here.
    pub fn for_pair(
        ta: &[usize; 3],
        tb: &[usize; 3],
        regular: &TriangleRule,
        singular: &SingularRules,
    ) -> Self {
        let (config, perm_a, perm_b) = classify_and_align(ta, tb);
        if config == PairConfig::Disjoint {
            return Self::disjoint(regular, regular);
        }
        let points = singular
            .aligned_points(config)
            .iter()
            .map(|p| {
                let mut ba = [0.0; 3];
                let mut bb = [0.0; 3];
                for k in 0..3 {
                    ba[perm_a[k]] = p.bary_a[k];
                    bb[perm_b[k]] = p.bary_b[k];
                }
                PairPoint { bary_a: ba, bary_b: bb, weight: p.weight }
            })
            .collect();
        PanelPairRule { config, points }
    }

    pub fn config(&self) -> PairConfig {
        self.config
    }

    pub fn points(&self) -> &[PairPoint] {
        &self.points
    }

    /// `∫_{T_a}∫_{T_b} k(x, y) dS_y dS_x = A_a A_b Σ w k`.
    pub fn integrate(&self, va: &[Vec3; 3], vb: &[Vec3; 3], mut k: impl FnMut(Vec3, Vec3) -> f64) -> f64 {
        let aa = tri_area(va[0], va[1], va[2]);
        let ab = tri_area(vb[0], vb[1], vb[2]);
        let mut s = 0.0;
        for p in &self.points {
            s += p.weight * k(bary_point(va, p.bary_a), bary_point(vb, p.bary_b));
        }
        aa * ab * s
    }
}

/// Closed-form `∫_T 1/(4π|x−r|) dS_x` over a flat triangle, valid for `r`
/// anywhere (on, near or far from the panel). Edge terms whose in-plane
/// lever arm vanishes contribute nothing and are skipped.
pub fn analytic_single_layer_panel(verts: &[Vec3; 3], r: Vec3) -> Result<f64, QuadratureError> {
    let n = tri_unit_normal(verts[0], verts[1], verts[2]).ok_or(QuadratureError::DegenerateTriangle)?;
    let d = (r - verts[0]).dot(n);
    let rho = r - d * n;
    let scale = (0..3)
        .map(|i| (verts[(i + 1) % 3] - verts[i]).norm())
        .fold(d.abs(), f64::max);
    let mut total = 0.0;
    for i in 0..3 {
        let a = verts[i];
        let b = verts[(i + 1) % 3];
        let lhat = match (b - a).normalized() {
            Some(v) => v,
            None => return Err(QuadratureError::DegenerateTriangle),
        };
        let mhat = lhat.cross(n);
        let lm = (a - rho).dot(lhat);
        let lp = (b - rho).dot(lhat);
        let p0vec = (a - rho) - lm * lhat;
        let p0 = p0vec.norm();
        if p0 <= 1e-14 * scale {
            // r projects onto the edge's line: the edge contributes nothing.
            continue;
        }
        let p0hat = p0vec / p0;
        let r0sq = p0 * p0 + d * d;
        let rm = (r - a).norm();
        let rp = (r - b).norm();
        // Both log forms are exact; pick the one whose arguments stay away
        // from 0/0 for this edge's orientation relative to ρ.
        let ln_term = if lp + lm > 0.0 {
            ((rp + lp) / (rm + lm)).ln()
        } else {
            ((rm - lm) / (rp - lp)).ln()
        };
        let ad = d.abs();
        let atan_term = (p0 * lp).atan2(r0sq + ad * rp) - (p0 * lm).atan2(r0sq + ad * rm);
        total += p0hat.dot(mhat) * (p0 * ln_term - ad * atan_term);
    }
    Ok(total / (4.0 * std::f64::consts::PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FROZEN_IDENTICAL: f64 = 1.00306588477243;
    const FROZEN_IDENTICAL_SKEW: f64 = 0.93776936300955;
    const FROZEN_EDGE: f64 = 0.37256963305769;
    const FROZEN_VERTEX: f64 = 0.21180288915801;

    fn t1() -> [Vec3; 3] {
        [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)]
    }
    fn t1_skew() -> [Vec3; 3] {
        [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.2, 0.9, 0.3)]
    }
    fn t2_edge() -> [Vec3; 3] {
        [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.4, -0.5, 0.6)]
    }
    fn t3_vertex() -> [Vec3; 3] {
        [Vec3::new(0.0, 0.0, 0.0), Vec3::new(-0.7, 0.1, 0.5), Vec3::new(-0.2, -0.8, 0.4)]
    }

    fn k_inv_r(x: Vec3, y: Vec3) -> f64 {
        1.0 / (x - y).norm()
    }

    #[test]
    fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre_01(n).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for k in 0..2 * n {
                let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
                let exact = 1.0 / (k as f64 + 1.0);
                assert!(
                    (num - exact).abs() < 1e-14,
                    "n={n} monomial x^{k}: got {num}, want {exact}"
                );
            }
        }
        assert!(matches!(gauss_legendre_01(0), Err(QuadratureError::InvalidOrder { .. })));
    }

    /// `∫_T ξ^a η^b` over the reference triangle equals `a! b! / (a+b+2)!`.
    fn reference_monomial_integral(a: usize, b: usize) -> f64 {
        let fact = |m: usize| (1..=m).map(|v| v as f64).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn triangle_rules_are_exact_for_their_degree() {
        let ref_tri = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        for d in 0..=MAX_TRIANGLE_DEGREE {
            let rule = TriangleRule::for_degree(d).unwrap();
            assert!((rule.weights().iter().sum::<f64>() - 1.0).abs() < 1e-13);
            assert!(rule.weights().iter().all(|&w| w > 0.0), "all rules have positive weights");
            for a in 0..=d {
                for b in 0..=(d - a) {
                    let num = rule.integrate_physical(&ref_tri, |p| p.x.powi(a as i32) * p.y.powi(b as i32));
                    let exact = reference_monomial_integral(a, b);
                    assert!(
                        (num - exact).abs() < 1e-13 * exact.max(1.0),
                        "degree {d} rule missed ξ^{a}η^{b}: {num} vs {exact}"
                    );
                }
            }
        }
        assert!(matches!(
            TriangleRule::for_degree(MAX_TRIANGLE_DEGREE + 1),
            Err(QuadratureError::UnsupportedDegree { .. })
        ));
    }

    #[test]
    fn pair_rule_weights_sum_to_one_in_every_configuration() {
        // ∫∫ 1 = A_a·A_b in the shared convention, so Σw = 1 exactly
        // (the singular-rule Jacobians integrate to the correct volume).
        let singular = SingularRules::new(4).unwrap();
        for config in [PairConfig::Identical, PairConfig::SharedEdge, PairConfig::SharedVertex] {
            let s: f64 = singular.aligned_points(config).iter().map(|p| p.weight).sum();
            assert!((s - 1.0).abs() < 1e-12, "{config:?}: Σw = {s}");
        }
        let r = TriangleRule::for_degree(4).unwrap();
        let d = PanelPairRule::disjoint(&r, &r);
        let s: f64 = d.points().iter().map(|p| p.weight).sum();
        assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn singular_rules_reproduce_frozen_single_layer_values() {
        // Reference values are converged adaptive/self-similarity integrals
        // of ∫∫ |x−y|⁻¹ (without the 1/4π) frozen into the test.
        let regular = TriangleRule::for_degree(6).unwrap();
        let singular = SingularRules::new(8).unwrap();

        let ident = PanelPairRule::for_pair(&[0, 1, 2], &[0, 1, 2], &regular, &singular);
        assert_eq!(ident.config(), PairConfig::Identical);
        let vi = ident.integrate(&t1(), &t1(), k_inv_r);
        assert!((vi - FROZEN_IDENTICAL).abs() < 1e-6, "identical: {vi}");

        let vs = ident.integrate(&t1_skew(), &t1_skew(), k_inv_r);
        assert!((vs - FROZEN_IDENTICAL_SKEW).abs() < 1e-5, "identical skew: {vs}");

        let edge = PanelPairRule::for_pair(&[0, 1, 2], &[0, 1, 3], &regular, &singular);
        assert_eq!(edge.config(), PairConfig::SharedEdge);
        let ve = edge.integrate(&t1(), &t2_edge(), k_inv_r);
        assert!((ve - FROZEN_EDGE).abs() < 1e-8, "edge: {ve}");

        let vert = PanelPairRule::for_pair(&[0, 1, 2], &[0, 3, 4], &regular, &singular);
        assert_eq!(vert.config(), PairConfig::SharedVertex);
        let vv = vert.integrate(&t1(), &t3_vertex(), k_inv_r);
        assert!((vv - FROZEN_VERTEX).abs() < 1e-8, "vertex: {vv}");
    }

    #[test]
    fn singular_rule_error_decreases_with_order() {
        let regular = TriangleRule::for_degree(4).unwrap();
        let mut prev = f64::INFINITY;
        for order in [3usize, 5, 8] {
            let singular = SingularRules::new(order).unwrap();
            let rule = PanelPairRule::for_pair(&[0, 1, 2], &[0, 1, 2], &regular, &singular);
            let err = (rule.integrate(&t1(), &t1(), k_inv_r) - FROZEN_IDENTICAL).abs();
            assert!(err < prev, "order {order}: error {err} did not decrease from {prev}");
            prev = err;
        }
    }

    #[test]
    fn edge_alignment_handles_arbitrary_vertex_orderings() {
        // The same physical pair expressed with rotated/reflected index
        // triples must integrate to the same value.
        let regular = TriangleRule::for_degree(4).unwrap();
        let singular = SingularRules::new(6).unwrap();
        let va = t1();
        let vb = t2_edge();
        let base = PanelPairRule::for_pair(&[0, 1, 2], &[0, 1, 3], &regular, &singular)
            .integrate(&va, &vb, k_inv_r);

        // Rotate panel a's ordering: [2,0,1] relabels its vertices.
        let va_rot = [va[2], va[0], va[1]];
        let rot = PanelPairRule::for_pair(&[2, 0, 1], &[0, 1, 3], &regular, &singular)
            .integrate(&va_rot, &vb, k_inv_r);
        assert!((base - rot).abs() < 1e-12 * base.abs());

        // Reverse the edge in panel b's ordering (as a consistently oriented
        // neighbor would store it).
        let vb_rev = [vb[1], vb[0], vb[2]];
        let rev = PanelPairRule::for_pair(&[0, 1, 2], &[1, 0, 3], &regular, &singular)
            .integrate(&va, &vb_rev, k_inv_r);
        assert!((base - rev).abs() < 1e-12 * base.abs());

        // Swapping the roles of the panels integrates the same quantity for
        // this symmetric kernel, but through a different subdomain split, so
        // the two rules agree only to quadrature accuracy (the assembly
        // never relies on fp-exact swap symmetry: it evaluates each
        // unordered pair through a single rule instance).
        let swap = PanelPairRule::for_pair(&[0, 1, 3], &[0, 1, 2], &regular, &singular)
            .integrate(&vb, &va, k_inv_r);
        assert!((base - swap).abs() < 1e-6 * base.abs());
    }

    #[test]
    fn vertex_alignment_handles_arbitrary_orderings() {
        let regular = TriangleRule::for_degree(4).unwrap();
        let singular = SingularRules::new(6).unwrap();
        let va = t1();
        let vb = t3_vertex();
        let base = PanelPairRule::for_pair(&[0, 1, 2], &[0, 3, 4], &regular, &singular)
            .integrate(&va, &vb, k_inv_r);
        let vb_rot = [vb[1], vb[2], vb[0]];
        let rot = PanelPairRule::for_pair(&[0, 1, 2], &[3, 4, 0], &regular, &singular)
            .integrate(&va, &vb_rot, k_inv_r);
        assert!((base - rot).abs() < 1e-12 * base.abs());
    }

    #[test]
    fn disjoint_tensor_rule_separates_for_product_kernels() {
        let ra = TriangleRule::for_degree(5).unwrap();
        let rb = TriangleRule::for_degree(6).unwrap();
        let va = t1();
        let vb = [Vec3::new(3.0, 0.0, 0.0), Vec3::new(4.0, 0.5, 0.0), Vec3::new(3.0, 1.0, 0.7)];
        let pair = PanelPairRule::disjoint(&ra, &rb);
        let f = |x: Vec3| 1.0 + x.x + x.y * x.y;
        let g = |y: Vec3| y.x - 0.3 * y.z;
        let together = pair.integrate(&va, &vb, |x, y| f(x) * g(y));
        let separate = ra.integrate_physical(&va, f) * rb.integrate_physical(&vb, g);
        assert!((together - separate).abs() < 1e-13 * separate.abs());
    }

    #[test]
    fn classification_matches_shared_vertex_count() {
        assert_eq!(classify_pair(&[0, 1, 2], &[3, 4, 5]), PairConfig::Disjoint);
        assert_eq!(classify_pair(&[0, 1, 2], &[2, 4, 5]), PairConfig::SharedVertex);
        assert_eq!(classify_pair(&[0, 1, 2], &[1, 0, 5]), PairConfig::SharedEdge);
        assert_eq!(classify_pair(&[0, 1, 2], &[0, 1, 2]), PairConfig::Identical);
    }

    /// Independent oracle: split the triangle at the in-plane projection of
    /// `r` and integrate each sub-triangle in polar-like coordinates from
    /// that apex, where `1/|x−r|` is smooth. Signed areas make the split
    /// exact also when the projection lies outside the triangle.
    fn single_layer_oracle(verts: &[Vec3; 3], r: Vec3, n: usize) -> f64 {
        let nrm = tri_unit_normal(verts[0], verts[1], verts[2]).unwrap();
        let d = (r - verts[0]).dot(nrm);
        let rho = r - d * nrm;
        let (u, wu) = gauss_legendre_01(n).unwrap();
        let mut total = 0.0;
        for i in 0..3 {
            let a = verts[i];
            let b = verts[(i + 1) % 3];
            let cross = (a - rho).cross(b - rho);
            let signed = 0.5 * cross.dot(nrm);
            if signed.abs() < 1e-300 {
                continue;
            }
            // x(u,t) = ρ + u·((1−t)a + tb − ρ); dS = 2|signed|·u du dt, and
            // u/|x−r| stays bounded as u→0 even for d = 0.
            let mut s = 0.0;
            for (&ui, &wi) in u.iter().zip(&wu) {
                for (&tj, &wj) in u.iter().zip(&wu) {
                    let e = (1.0 - tj) * a + tj * b - rho;
                    let x = rho + ui * e;
                    s += wi * wj * ui / (x - r).norm();
                }
            }
            total += 2.0 * signed * s;
        }
        total / (4.0 * std::f64::consts::PI)
    }

    #[test]
    fn analytic_single_layer_matches_adaptive_oracle() {
        let tris = [t1(), t1_skew()];
        let points = [
            Vec3::new(0.3, 0.3, 0.4),    // above the panel
            Vec3::new(0.25, 0.25, 0.0),  // on the panel's plane, interior for t1
            Vec3::new(1.5, 1.5, 0.1),    // outside, near the plane
            Vec3::new(-0.2, 0.1, -0.05), // behind, near a vertex
            Vec3::new(4.0, -3.0, 2.0),   // far field
        ];
        for tri in &tris {
            for &p in &points {
                let exact = analytic_single_layer_panel(tri, p).unwrap();
                let oracle = single_layer_oracle(tri, p, 48);
                assert!(
                    (exact - oracle).abs() < 1e-10 * oracle.abs().max(1e-3),
                    "point {p:?}: analytic {exact} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn analytic_single_layer_handles_on_panel_and_vertex_points() {
        let tri = t1();
        // Interior point in the panel's plane.
        let p_in = Vec3::new(0.25, 0.25, 0.0);
        let v_in = analytic_single_layer_panel(&tri, p_in).unwrap();
        let o_in = single_layer_oracle(&tri, p_in, 64);
        assert!((v_in - o_in).abs() < 1e-9 * o_in);

        // Exactly at a vertex: adjacent edges drop out; the integral is
        // finite and equals the polar integral across the opposite edge.
        let v_corner = analytic_single_layer_panel(&tri, Vec3::new(0.0, 0.0, 0.0)).unwrap();
        let o_corner = single_layer_oracle(&tri, Vec3::new(0.0, 0.0, 0.0), 64);
        assert!((v_corner - o_corner).abs() < 1e-9 * o_corner);
        assert!(v_corner > 0.0);
    }

    #[test]
    fn analytic_single_layer_is_rigid_motion_invariant_and_scales_linearly() {
        let tri = t1_skew();
        let p = Vec3::new(0.1, 0.4, 0.3);
        let base = analytic_single_layer_panel(&tri, p).unwrap();

        // Rotation about an arbitrary axis plus a translation.
        let axis = Vec3::new(1.0, 2.0, -0.5).normalized().unwrap();
        let angle: f64 = 1.234;
        let (sa, ca) = angle.sin_cos();
        let rot = |v: Vec3| v * ca + axis.cross(v) * sa + axis * (axis.dot(v)) * (1.0 - ca);
        let shift = Vec3::new(-3.0, 0.7, 2.2);
        let tri_m = [rot(tri[0]) + shift, rot(tri[1]) + shift, rot(tri[2]) + shift];
        let moved = analytic_single_layer_panel(&tri_m, rot(p) + shift).unwrap();
        assert!((base - moved).abs() < 1e-13 * base.abs());

        // 1/r integrated over a surface scales like the length scale.
        let s = 2.75;
        let tri_s = [tri[0] * s, tri[1] * s, tri[2] * s];
        let scaled = analytic_single_layer_panel(&tri_s, p * s).unwrap();
        assert!((scaled - s * base).abs() < 1e-13 * scaled.abs());

        let degenerate = [tri[0], tri[1], tri[0]];
        assert!(matches!(
            analytic_single_layer_panel(&degenerate, p),
            Err(QuadratureError::DegenerateTriangle)
        ));
    }
}
