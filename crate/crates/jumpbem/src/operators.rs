//! Galerkin assembly of the boundary-integral operator matrices.
//!
//! All four kernels are integrated in a single sweep over unordered panel
//! pairs. For each pair the three kernel values share the same quadrature
//! points and the same distance computation:
//!
//! * `1/(4πr)` — the single-layer kernel, whose basis-weighted block feeds
//!   the single-layer matrix and whose plain sum feeds the hypersingular
//!   matrix (which, after reduction to surface curls, is the single-layer
//!   kernel tested against per-panel constant vectors);
//! * `−n_y·(x−y)/(4πr³)` — the double-layer kernel in the (a→b) direction;
//! * `+n_x·(x−y)/(4πr³)` — the same kernel with the roles of the panels
//!   swapped, evaluated at the *same* points.
//!
//! Because both directions of every pair are integrated on one shared rule,
//! the assembled double-layer matrix `K` and its adjoint satisfy
//! `K' = −Kᵀ` exactly in floating point, and the single-layer and
//! hypersingular matrices are exactly symmetric (pair blocks are accumulated
//! once and mirrored, with self-pair blocks split evenly).
//!
//! Parallelism is deterministic: panels are grouped into fixed chunks,
//! chunks are computed in parallel in bounded waves, and every wave's
//! contributions are merged sequentially in chunk order, so the result is
//! bitwise identical for any thread count.

use rayon::prelude::*;

use crate::dense::DenseMat;
use crate::geom::{bary_point, Vec3};
use crate::mesh::SurfaceMesh;
use crate::quadrature::{
    classify_and_align, PairConfig, QuadratureError, SingularRules, TriangleRule,
};
use crate::spaces::{CoeffKind, DualKind, MassMatrix, OperatorMatrix};

/// Quadrature selections for assembly.
#[derive(Debug, Clone)]
pub struct AssemblyOptions {
    /// Polynomial degree of the per-panel rule used on disjoint pairs.
    pub regular_degree: usize,
    /// Gauss points per coordinate of the singular pair rules.
    pub singular_order: usize,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions { regular_degree: 6, singular_order: 8 }
    }
}

/// The assembled Galerkin matrices of one surface.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    /// `M[j,k] = ∫ φ_j φ_k` (exact closed form).
    pub mass: MassMatrix,
    /// Single-layer `S̃[j,k] = ∬ φ_j(x) φ_k(y) / (4π|x−y|)`; symmetric.
    pub single_layer: OperatorMatrix,
    /// Double-layer `K[j,k] = ∬ φ_j(x) φ_k(y) · (−n_y·(x−y)/(4π|x−y|³))`.
    pub double_layer: OperatorMatrix,
    /// Adjoint double-layer `K' = −Kᵀ` (exact discrete identity).
    pub adjoint_double_layer: OperatorMatrix,
    /// Hypersingular `D̃[j,k] = ∬ curl_Γφ_j(x)·curl_Γφ_k(y) / (4π|x−y|)`;
    /// symmetric, annihilates constants.
    pub hypersingular: OperatorMatrix,
}

impl OperatorSet {
    pub fn n(&self) -> usize {
        self.mass.n()
    }

    /// Trace-side coupling operator `(1−ε₀)·K + ((1+ε₀)/2)·M`, the
    /// ε-weighted two-sided trace of the double-layer potential. Maps trace
    /// coefficients to trace data. Equals `M` at ε₀ = 1, and its row sums
    /// equal the mass row sums for every ε₀.
    pub fn trace_coupling(&self, eps0: f64) -> OperatorMatrix {
        let mut m = self.double_layer.matrix().clone();
        m.scale(1.0 - eps0);
        m.scaled_add(0.5 * (1.0 + eps0), self.mass.matrix());
        OperatorMatrix::new(CoeffKind::Trace, DualKind::TraceData, false, m)
    }

    /// Flux-side coupling operator `((1+ε₁)/2)·M + (1−ε₁)·K'`, the
    /// ε-weighted two-sided normal derivative of the single-layer potential.
    /// Maps flux coefficients to flux data. Equals `M` at ε₁ = 1.
    pub fn flux_coupling(&self, eps1: f64) -> OperatorMatrix {
        let mut m = self.adjoint_double_layer.matrix().clone();
        m.scale(1.0 - eps1);
        m.scaled_add(0.5 * (1.0 + eps1), self.mass.matrix());
        OperatorMatrix::new(CoeffKind::Flux, DualKind::FluxData, false, m)
    }
}

/// Per-panel geometry and basis data used in the pair loop.
struct PanelGeom {
    verts: [Vec3; 3],
    area: f64,
    normal: Vec3,
    /// Surface curls of the three nodal basis functions: constant per panel,
    /// `curl_Γ φ_i = −e_i / (2A)` with `e_i = v_{i+2} − v_{i+1}`. They sum
    /// to zero, which is what makes the hypersingular matrix annihilate
    /// constants exactly.
    curls: [Vec3; 3],
}

/// One unordered pair's contribution: 3×3 blocks in each panel's own local
/// vertex ordering, already scaled to physical values.
struct PairPayload {
    a: u32,
    b: u32,
    /// Single-layer block (test on `a`, trial on `b`).
    s: [f64; 9],
    /// Double-layer block, direction (test `a`, trial `b`).
    kab: [f64; 9],
    /// Double-layer block values for the swapped direction, still indexed
    /// (α on `a`, β on `b`); the merged matrix adds its transpose.
    kba: [f64; 9],
    /// `∬ 1/(4π|x−y|)` over the pair, for the hypersingular blocks.
    ksum: f64,
}

struct AssemblyCtx<'a> {
    tris: &'a [[usize; 3]],
    geoms: &'a [PanelGeom],
    rule_pts: &'a [[f64; 3]],
    rule_w: &'a [f64],
    /// Physical quadrature points, `panel_pts[p * nq + i]`.
    panel_pts: &'a [Vec3],
    nq: usize,
    singular: &'a SingularRules,
}

impl AssemblyCtx<'_> {
    fn pair_payload(&self, a: usize, b: usize) -> PairPayload {
        let ga = &self.geoms[a];
        let gb = &self.geoms[b];
        let scale = ga.area * gb.area * 0.25 * std::f64::consts::FRAC_1_PI;
        let mut s = [0.0f64; 9];
        let mut kab = [0.0f64; 9];
        let mut kba = [0.0f64; 9];
        let mut ksum = 0.0f64;

        let (config, perm_a, perm_b) = classify_and_align(&self.tris[a], &self.tris[b]);
        match config {
            PairConfig::Disjoint => {
                let pa = &self.panel_pts[a * self.nq..(a + 1) * self.nq];
                let pb = &self.panel_pts[b * self.nq..(b + 1) * self.nq];
                for (i, &wa) in self.rule_w.iter().enumerate() {
                    let x = pa[i];
                    let fa = &self.rule_pts[i];
                    for (j, &wb) in self.rule_w.iter().enumerate() {
                        let y = pb[j];
                        let fb = &self.rule_pts[j];
                        let w = wa * wb;
                        let d = x - y;
                        let r2 = d.norm2();
                        let inv_r = 1.0 / r2.sqrt();
                        let inv_r3 = inv_r / r2;
                        let c_s = w * inv_r;
                        let c_ab = -w * gb.normal.dot(d) * inv_r3;
                        let c_ba = w * ga.normal.dot(d) * inv_r3;
                        ksum += c_s;
                        for al in 0..3 {
                            let u = fa[al];
                            for be in 0..3 {
                                let p = u * fb[be];
                                s[al * 3 + be] += p * c_s;
                                kab[al * 3 + be] += p * c_ab;
                                kba[al * 3 + be] += p * c_ba;
                            }
                        }
                    }
                }
            }
            PairConfig::Identical => {
                // Both panels are the same flat triangle: the double-layer
                // kernels vanish identically (n·(x−y) = 0), only the
                // single-layer kernel is integrated.
                let va = &ga.verts;
                for p in self.singular.aligned_points(config) {
                    let x = bary_point(va, p.bary_a);
                    let y = bary_point(va, p.bary_b);
                    let c_s = p.weight / (x - y).norm();
                    ksum += c_s;
                    for al in 0..3 {
                        let u = p.bary_a[al];
                        for be in 0..3 {
                            s[al * 3 + be] += u * p.bary_b[be] * c_s;
                        }
                    }
                }
                // Identity permutations: blocks are already in panel order.
            }
            PairConfig::SharedEdge | PairConfig::SharedVertex => {
                let va = [ga.verts[perm_a[0]], ga.verts[perm_a[1]], ga.verts[perm_a[2]]];
                let vb = [gb.verts[perm_b[0]], gb.verts[perm_b[1]], gb.verts[perm_b[2]]];
                let mut s_al = [0.0f64; 9];
                let mut kab_al = [0.0f64; 9];
                let mut kba_al = [0.0f64; 9];
                for p in self.singular.aligned_points(config) {
                    let x = bary_point(&va, p.bary_a);
                    let y = bary_point(&vb, p.bary_b);
                    let d = x - y;
                    let r2 = d.norm2();
                    let inv_r = 1.0 / r2.sqrt();
                    let inv_r3 = inv_r / r2;
                    let c_s = p.weight * inv_r;
                    let c_ab = -p.weight * gb.normal.dot(d) * inv_r3;
                    let c_ba = p.weight * ga.normal.dot(d) * inv_r3;
                    ksum += c_s;
                    for al in 0..3 {
                        let u = p.bary_a[al];
                        for be in 0..3 {
                            let pr = u * p.bary_b[be];
                            s_al[al * 3 + be] += pr * c_s;
                            kab_al[al * 3 + be] += pr * c_ab;
                            kba_al[al * 3 + be] += pr * c_ba;
                        }
                    }
                }
                // Scatter aligned blocks back to each panel's own ordering.
                for al in 0..3 {
                    for be in 0..3 {
                        let dst = perm_a[al] * 3 + perm_b[be];
                        s[dst] = s_al[al * 3 + be];
                        kab[dst] = kab_al[al * 3 + be];
                        kba[dst] = kba_al[al * 3 + be];
                    }
                }
            }
        }

        for v in s.iter_mut().chain(kab.iter_mut()).chain(kba.iter_mut()) {
            *v *= scale;
        }
        ksum *= scale;
        PairPayload { a: a as u32, b: b as u32, s, kab, kba, ksum }
    }
}

/// Assemble every operator matrix of the surface in one deterministic sweep.
pub fn assemble_operators(mesh: &SurfaceMesh, options: &AssemblyOptions) -> Result<OperatorSet, QuadratureError> {
    let rule = TriangleRule::for_degree(options.regular_degree)?;
    let singular = SingularRules::new(options.singular_order)?;
    let n = mesh.n_vertices();
    let np = mesh.n_panels();
    let nq = rule.len();

    let geoms: Vec<PanelGeom> = (0..np)
        .map(|p| {
            let verts = mesh.panel_vertices(p);
            let area = mesh.panel_area(p);
            let inv2a = 1.0 / (2.0 * area);
            let curls = [
                (verts[2] - verts[1]) * -inv2a,
                (verts[0] - verts[2]) * -inv2a,
                (verts[1] - verts[0]) * -inv2a,
            ];
            PanelGeom { verts, area, normal: mesh.panel_normal(p), curls }
        })
        .collect();

    let mut panel_pts = Vec::with_capacity(np * nq);
    for g in &geoms {
        for b in rule.points() {
            panel_pts.push(bary_point(&g.verts, *b));
        }
    }

    // Mass matrix: per-panel closed form (A/6 diagonal, A/12 off-diagonal).
    let mut mass = DenseMat::zeros(n, n);
    for (p, g) in geoms.iter().enumerate() {
        let t = &mesh.triangles()[p];
        for al in 0..3 {
            for be in 0..3 {
                let w = if al == be { g.area / 6.0 } else { g.area / 12.0 };
                mass.add_to(t[al], t[be], w);
            }
        }
    }

    let ctx = AssemblyCtx {
        tris: mesh.triangles(),
        geoms: &geoms,
        rule_pts: rule.points(),
        rule_w: rule.weights(),
        panel_pts: &panel_pts,
        nq,
        singular: &singular,
    };

    // Partial accumulators. Self-pair blocks of the symmetric matrices are
    // halved so the final `X + Xᵀ` restores them exactly symmetric.
    let mut s_part = DenseMat::zeros(n, n);
    let mut d_part = DenseMat::zeros(n, n);
    let mut k_ab_part = DenseMat::zeros(n, n);
    let mut k_ba_part = DenseMat::zeros(n, n);

    const CHUNK: usize = 16;
    let n_chunks = np.div_ceil(CHUNK);
    let wave = (4 * rayon::current_num_threads()).max(4);
    let mut wave_results: Vec<Vec<PairPayload>> = Vec::new();
    for w0 in (0..n_chunks).step_by(wave) {
        let w1 = (w0 + wave).min(n_chunks);
        (w0..w1)
            .into_par_iter()
            .map(|c| {
                let a_lo = c * CHUNK;
                let a_hi = ((c + 1) * CHUNK).min(np);
                let mut out = Vec::with_capacity((a_hi - a_lo) * (np - a_lo));
                for a in a_lo..a_hi {
                    for b in a..np {
                        out.push(ctx.pair_payload(a, b));
                    }
                }
                out
            })
            .collect_into_vec(&mut wave_results);
        for chunk in &wave_results {
            for pl in chunk {
                let (a, b) = (pl.a as usize, pl.b as usize);
                let ta = &mesh.triangles()[a];
                let tb = &mesh.triangles()[b];
                let half = if a == b { 0.5 } else { 1.0 };
                let ca = &geoms[a].curls;
                let cb = &geoms[b].curls;
                for al in 0..3 {
                    for be in 0..3 {
                        let (i, j) = (ta[al], tb[be]);
                        s_part.add_to(i, j, half * pl.s[al * 3 + be]);
                        d_part.add_to(i, j, half * ca[al].dot(cb[be]) * pl.ksum);
                        if a != b {
                            k_ab_part.add_to(i, j, pl.kab[al * 3 + be]);
                            k_ba_part.add_to(i, j, pl.kba[al * 3 + be]);
                        }
                    }
                }
            }
        }
    }

    s_part.add_transpose_in_place();
    d_part.add_transpose_in_place();
    // K gets the (a→b) blocks directly and the swapped-direction blocks as
    // their transpose (they were stored indexed by the a-side).
    let khat = DenseMat::from_fn(n, n, |i, j| k_ab_part.get(i, j) + k_ba_part.get(j, i));
    drop(k_ab_part);
    drop(k_ba_part);
    let mut kprime = khat.transpose();
    kprime.scale(-1.0);

    Ok(OperatorSet {
        mass: MassMatrix::new(mass),
        single_layer: OperatorMatrix::new(CoeffKind::Flux, DualKind::TraceData, true, s_part),
        double_layer: OperatorMatrix::new(CoeffKind::Trace, DualKind::TraceData, false, khat),
        adjoint_double_layer: OperatorMatrix::new(CoeffKind::Flux, DualKind::FluxData, false, kprime),
        hypersingular: OperatorMatrix::new(CoeffKind::Trace, DualKind::FluxData, true, d_part),
    })
}
