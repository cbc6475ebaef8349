//! Discrete function spaces and tagged Galerkin matrices.
//!
//! Both unknowns are expanded in the same continuous piecewise-linear nodal
//! basis, but they live in different spaces and must not be mixed:
//!
//! * [`CoeffKind::Flux`] — coefficients of a flux-like density (the
//!   single-layer density σ, normal-derivative data);
//! * [`CoeffKind::Trace`] — coefficients of a trace-like density (the
//!   double-layer density q, boundary values).
//!
//! Galerkin right-hand sides and operator outputs are *moment* vectors
//! ([`DualVec`]): entry `j` is the integral of something against basis
//! function `φ_j`. [`DualKind::TraceData`] pairs with flux test functions,
//! [`DualKind::FluxData`] with trace test functions. [`OperatorMatrix`]
//! carries these tags and refuses (by panicking — a tag mismatch is a
//! programming error, not a data error) to apply an operator to the wrong
//! kind of vector.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMat;

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad operator file: {0}")]
    Format(String),
}

/// Which unknown a coefficient vector parametrizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoeffKind {
    Flux,
    Trace,
}

/// Which test space a moment vector pairs against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DualKind {
    /// Moments of a trace-like quantity; pairs with [`CoeffKind::Flux`].
    TraceData,
    /// Moments of a flux-like quantity; pairs with [`CoeffKind::Trace`].
    FluxData,
}

impl DualKind {
    /// The coefficient kind this data kind is a functional on.
    pub fn pairs_with(self) -> CoeffKind {
        match self {
            DualKind::TraceData => CoeffKind::Flux,
            DualKind::FluxData => CoeffKind::Trace,
        }
    }
}

/// Nodal coefficient vector with its space tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffVec {
    pub kind: CoeffKind,
    pub values: Vec<f64>,
}

impl CoeffVec {
    pub fn new(kind: CoeffKind, values: Vec<f64>) -> Self {
        CoeffVec { kind, values }
    }

    pub fn zeros(kind: CoeffKind, n: usize) -> Self {
        CoeffVec { kind, values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Moment (functional) vector with its data tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVec {
    pub kind: DualKind,
    pub values: Vec<f64>,
}

impl DualVec {
    pub fn new(kind: DualKind, values: Vec<f64>) -> Self {
        DualVec { kind, values }
    }

    pub fn zeros(kind: DualKind, n: usize) -> Self {
        DualVec { kind, values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Duality pairing `⟨d, c⟩ = Σ dⱼ cⱼ`; panics if the coefficient kind is
    /// not the one this data pairs with.
    pub fn pair(&self, c: &CoeffVec) -> f64 {
        assert_eq!(
            c.kind,
            self.kind.pairs_with(),
            "duality pairing between incompatible spaces ({:?} data against {:?} coefficients)",
            self.kind,
            c.kind
        );
        assert_eq!(self.len(), c.len());
        self.values.iter().zip(&c.values).map(|(a, b)| a * b).sum()
    }
}

/// Galerkin mass matrix with its row sums (`m = M·1`, the basis-function
/// surface moments) and the total area `1ᵀM·1` precomputed.
#[derive(Debug, Clone)]
pub struct MassMatrix {
    mat: DenseMat,
    row_sums: Vec<f64>,
    area: f64,
}

impl MassMatrix {
    pub fn new(mat: DenseMat) -> Self {
        assert_eq!(mat.nrows(), mat.ncols());
        let row_sums = mat.matvec(&vec![1.0; mat.ncols()]);
        let area = row_sums.iter().sum();
        MassMatrix { mat, row_sums, area }
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DenseMat {
        &self.mat
    }

    /// `m = M·1`: entry `j` is the surface integral of basis function `j`.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// Total surface area `1ᵀM·1`.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        self.mat.matvec(values)
    }

    /// Area-weighted mean of the function with these nodal coefficients.
    pub fn weighted_mean(&self, coeffs: &[f64]) -> f64 {
        assert_eq!(coeffs.len(), self.n());
        let s: f64 = self.row_sums.iter().zip(coeffs).map(|(m, c)| m * c).sum();
        s / self.area
    }
}

/// Remove the area-weighted mean from a coefficient vector (both kinds
/// quotient by constants the same way). Returns the removed constant.
pub fn project_coeff_mean_zero(c: &mut CoeffVec, mass: &MassMatrix) -> f64 {
    let mean = mass.weighted_mean(&c.values);
    for v in c.values.iter_mut() {
        *v -= mean;
    }
    mean
}

/// Remove the constant component from a moment vector and return its
/// coefficient. "Constant component" depends on the data kind:
///
/// * `TraceData` moments of a constant function equal `β·m` (mass row
///   sums), so that direction is removed with `β = Σd / area`;
/// * `FluxData` vectors produced by the hypersingular operator satisfy
///   `Σd = 0` exactly, so the quotient direction is the all-ones vector,
///   removed with `β = Σd / n`.
///
/// Either way the projected vector annihilates constants: `⟨Πd, 1⟩ = 0`.
pub fn project_dual_mean_zero(d: &mut DualVec, mass: &MassMatrix) -> f64 {
    let n = d.len();
    assert_eq!(n, mass.n());
    let total: f64 = d.values.iter().sum();
    match d.kind {
        DualKind::TraceData => {
            let beta = total / mass.area();
            for (v, m) in d.values.iter_mut().zip(mass.row_sums()) {
                *v -= beta * m;
            }
            beta
        }
        DualKind::FluxData => {
            let beta = total / n as f64;
            for v in d.values.iter_mut() {
                *v -= beta;
            }
            beta
        }
    }
}

const OPERATOR_MAGIC: &[u8; 4] = b"JBOP";
const OPERATOR_VERSION: u32 = 1;

/// A Galerkin operator matrix tagged with its domain (coefficient kind) and
/// range (data kind), plus a symmetry flag for the energy forms.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    domain: CoeffKind,
    range: DualKind,
    symmetric: bool,
    mat: DenseMat,
}

impl OperatorMatrix {
    pub fn new(domain: CoeffKind, range: DualKind, symmetric: bool, mat: DenseMat) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operator matrices are square");
        OperatorMatrix { domain, range, symmetric, mat }
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn domain(&self) -> CoeffKind {
        self.domain
    }

    pub fn range(&self) -> DualKind {
        self.range
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn matrix(&self) -> &DenseMat {
        &self.mat
    }

    pub fn into_matrix(self) -> DenseMat {
        self.mat
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.mat.symmetry_defect()
    }

    /// Apply the operator. Panics when the coefficient kind does not match
    /// the operator's domain — that is a wiring bug, never a data problem.
    pub fn apply(&self, c: &CoeffVec) -> DualVec {
        assert_eq!(
            c.kind, self.domain,
            "operator with domain {:?} applied to {:?} coefficients",
            self.domain, c.kind
        );
        assert_eq!(c.len(), self.n());
        DualVec { kind: self.range, values: self.mat.matvec(&c.values) }
    }

    /// Serialize: magic, version, dimension, tags, then the entries as
    /// row-major little-endian f64.
    pub fn dump(&self, w: &mut impl Write) -> Result<(), SpaceError> {
        let n = self.n();
        w.write_all(OPERATOR_MAGIC)?;
        w.write_all(&OPERATOR_VERSION.to_le_bytes())?;
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&[
            match self.domain {
                CoeffKind::Flux => 0u8,
                CoeffKind::Trace => 1,
            },
            match self.range {
                DualKind::TraceData => 0u8,
                DualKind::FluxData => 1,
            },
            self.symmetric as u8,
        ])?;
        let mut row = vec![0u8; n * 8];
        for i in 0..n {
            for j in 0..n {
                row[j * 8..j * 8 + 8].copy_from_slice(&self.mat.get(i, j).to_le_bytes());
            }
            w.write_all(&row)?;
        }
        Ok(())
    }

    pub fn load(r: &mut impl Read) -> Result<Self, SpaceError> {
        let mut head = [0u8; 4 + 4 + 8 + 3];
        r.read_exact(&mut head).map_err(|e| SpaceError::Format(format!("truncated header: {e}")))?;
        if &head[0..4] != OPERATOR_MAGIC {
            return Err(SpaceError::Format("bad magic bytes".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != OPERATOR_VERSION {
            return Err(SpaceError::Format(format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
        let domain = match head[16] {
            0 => CoeffKind::Flux,
            1 => CoeffKind::Trace,
            k => return Err(SpaceError::Format(format!("bad domain tag {k}"))),
        };
        let range = match head[17] {
            0 => DualKind::TraceData,
            1 => DualKind::FluxData,
            k => return Err(SpaceError::Format(format!("bad range tag {k}"))),
        };
        let symmetric = match head[18] {
            0 => false,
            1 => true,
            k => return Err(SpaceError::Format(format!("bad symmetry tag {k}"))),
        };
        let mut mat = DenseMat::zeros(n, n);
        let mut row = vec![0u8; n * 8];
        for i in 0..n {
            r.read_exact(&mut row)
                .map_err(|e| SpaceError::Format(format!("truncated data at row {i}: {e}")))?;
            for j in 0..n {
                mat.set(i, j, f64::from_le_bytes(row[j * 8..j * 8 + 8].try_into().unwrap()));
            }
        }
        Ok(OperatorMatrix { domain, range, symmetric, mat })
    }

    pub fn save_to(&self, path: impl AsRef<Path>) -> Result<(), SpaceError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.dump(&mut f)
    }

    pub fn load_from(path: impl AsRef<Path>) -> Result<Self, SpaceError> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::load(&mut f)
    }
}
