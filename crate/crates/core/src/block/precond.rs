use std::fmt;
use std::sync::Arc;

use super::{BlockMap, BlockSolve, BlockSystem};
use crate::dense::{axpy, lu_factor, DenseMatrix};
use crate::error::{Error, Result};

/// Which block preconditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecondTag {
    /// `[A11 0; A21 S]`
    LowerTri,
    /// `[A11 A12; 0 S]`
    UpperTri,
    /// Product of the three block-LDU factors; equals A when S is exact.
    Ldu,
    /// `diag(A11, S)`
    DiagPlus,
    /// `diag(A11, -S)`
    DiagMinus,
    /// `diag(A11, A22)`
    DiagHatPlus,
    /// `diag(A11, -A22)`
    DiagHatMinus,
}

impl PrecondTag {
    pub const ALL: [PrecondTag; 7] = [
        PrecondTag::LowerTri,
        PrecondTag::UpperTri,
        PrecondTag::Ldu,
        PrecondTag::DiagPlus,
        PrecondTag::DiagMinus,
        PrecondTag::DiagHatPlus,
        PrecondTag::DiagHatMinus,
    ];

    pub const DIAGONAL: [PrecondTag; 4] = [
        PrecondTag::DiagPlus,
        PrecondTag::DiagMinus,
        PrecondTag::DiagHatPlus,
        PrecondTag::DiagHatMinus,
    ];

    pub fn is_diagonal(self) -> bool {
        Self::DIAGONAL.contains(&self)
    }

    /// Diagonal kinds built from A22 rather than a Schur complement.
    pub fn is_hat(self) -> bool {
        matches!(self, PrecondTag::DiagHatPlus | PrecondTag::DiagHatMinus)
    }

    pub fn is_minus(self) -> bool {
        matches!(self, PrecondTag::DiagMinus | PrecondTag::DiagHatMinus)
    }

    /// Short label used in tables and on the command line.
    pub fn label(self) -> &'static str {
        match self {
            PrecondTag::LowerTri => "L",
            PrecondTag::UpperTri => "U",
            PrecondTag::Ldu => "M",
            PrecondTag::DiagPlus => "D+",
            PrecondTag::DiagMinus => "D-",
            PrecondTag::DiagHatPlus => "Dhat+",
            PrecondTag::DiagHatMinus => "Dhat-",
        }
    }

    pub fn from_label(s: &str) -> Option<PrecondTag> {
        Self::ALL.into_iter().find(|t| t.label().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for PrecondTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Where the second diagonal block comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SchurMode {
    Exact,
    /// A substitute for S22, e.g. an approximate Schur complement.
    Provided(DenseMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreconditionerKind {
    pub tag: PrecondTag,
    pub schur: SchurMode,
}

impl PreconditionerKind {
    pub fn exact(tag: PrecondTag) -> Self {
        Self {
            tag,
            schur: SchurMode::Exact,
        }
    }

    pub fn provided(tag: PrecondTag, s: DenseMatrix) -> Self {
        Self {
            tag,
            schur: SchurMode::Provided(s),
        }
    }
}

impl From<PrecondTag> for PreconditionerKind {
    fn from(tag: PrecondTag) -> Self {
        Self::exact(tag)
    }
}

/// A factored block preconditioner; `apply` returns `P⁻¹ r` by block
/// substitution without ever forming `P⁻¹`.
#[derive(Clone)]
pub struct PreconditionerInstance {
    tag: PrecondTag,
    n1: usize,
    n2: usize,
    a11: Arc<dyn BlockSolve>,
    second: Arc<dyn BlockSolve>,
    a12: Option<Arc<dyn BlockMap>>,
    a21: Option<Arc<dyn BlockMap>>,
}

impl fmt::Debug for PreconditionerInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PreconditionerInstance")
            .field("tag", &self.tag)
            .field("n1", &self.n1)
            .field("n2", &self.n2)
            .finish_non_exhaustive()
    }
}

impl PreconditionerInstance {
    /// Assembles an instance from arbitrary block solvers and couplings.
    ///
    /// `second` inverts the (2,2) block before any sign is applied: S (or its
    /// substitute) for Schur-based kinds, A22 for the hat kinds. Triangular
    /// and LDU kinds need the couplings they substitute with.
    pub fn from_parts(
        tag: PrecondTag,
        a11: Arc<dyn BlockSolve>,
        second: Arc<dyn BlockSolve>,
        a12: Option<Arc<dyn BlockMap>>,
        a21: Option<Arc<dyn BlockMap>>,
    ) -> Result<Self> {
        let n1 = a11.dim();
        let n2 = second.dim();
        let need12 = matches!(tag, PrecondTag::UpperTri | PrecondTag::Ldu);
        let need21 = matches!(tag, PrecondTag::LowerTri | PrecondTag::Ldu);
        if need12 && a12.is_none() || need21 && a21.is_none() {
            return Err(Error::Precondition(format!(
                "{tag} preconditioner needs its off-diagonal blocks"
            )));
        }
        if let Some(m) = &a12 {
            if m.nrows() != n1 || m.ncols() != n2 {
                return Err(Error::Dimension("A12 does not match the diagonal blocks".into()));
            }
        }
        if let Some(m) = &a21 {
            if m.nrows() != n2 || m.ncols() != n1 {
                return Err(Error::Dimension("A21 does not match the diagonal blocks".into()));
            }
        }
        Ok(Self {
            tag,
            n1,
            n2,
            a11,
            second,
            a12: if need12 { a12 } else { None },
            a21: if need21 { a21 } else { None },
        })
    }

    pub fn tag(&self) -> PrecondTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn block_dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// z = P⁻¹ r.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "residual of length {} for a preconditioner of order {}",
                r.len(),
                self.dim()
            )));
        }
        let (r1, r2) = r.split_at(self.n1);
        let (z1, z2) = match self.tag {
            PrecondTag::DiagPlus | PrecondTag::DiagHatPlus => {
                (self.a11.solve(r1)?, self.second.solve(r2)?)
            }
            PrecondTag::DiagMinus | PrecondTag::DiagHatMinus => {
                let mut z2 = self.second.solve(r2)?;
                z2.iter_mut().for_each(|v| *v = -*v);
                (self.a11.solve(r1)?, z2)
            }
            PrecondTag::LowerTri => {
                let z1 = self.a11.solve(r1)?;
                let mut w = r2.to_vec();
                axpy(-1.0, &self.coupling21().apply(&z1), &mut w);
                (z1, self.second.solve(&w)?)
            }
            PrecondTag::UpperTri => {
                let z2 = self.second.solve(r2)?;
                let mut w = r1.to_vec();
                axpy(-1.0, &self.coupling12().apply(&z2), &mut w);
                (self.a11.solve(&w)?, z2)
            }
            PrecondTag::Ldu => {
                // Lower factor, then block diagonal, then upper factor.
                let mut z1 = self.a11.solve(r1)?;
                let mut w = r2.to_vec();
                axpy(-1.0, &self.coupling21().apply(&z1), &mut w);
                let z2 = self.second.solve(&w)?;
                let t = self.a11.solve(&self.coupling12().apply(&z2))?;
                axpy(-1.0, &t, &mut z1);
                (z1, z2)
            }
        };
        let mut z = z1;
        z.extend(z2);
        Ok(z)
    }

    fn coupling12(&self) -> &dyn BlockMap {
        self.a12.as_deref().expect("checked at construction")
    }

    fn coupling21(&self) -> &dyn BlockMap {
        self.a21.as_deref().expect("checked at construction")
    }

    /// Dense `P⁻¹` by applying the preconditioner to each unit vector.
    pub fn inverse_dense(&self) -> Result<DenseMatrix> {
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            out.set_column(j, &self.apply(&e)?);
            e[j] = 0.0;
        }
        Ok(out)
    }
}

/// Factors the blocks a kind needs and wraps them in an instance.
///
/// Errors name the singular block: `A22` for the hat kinds, `S22` for exact
/// Schur kinds and `S` for a provided substitute.
pub fn make_preconditioner(
    sys: &BlockSystem,
    kind: &PreconditionerKind,
) -> Result<PreconditionerInstance> {
    let second: Arc<dyn BlockSolve> = if kind.tag.is_hat() {
        sys.a22_factors()?
    } else {
        match &kind.schur {
            SchurMode::Exact => sys.schur_factors()?,
            SchurMode::Provided(s) => {
                if s.rows() != sys.n2() || s.cols() != sys.n2() {
                    return Err(Error::Dimension(format!(
                        "provided Schur substitute is {}x{}, expected {}x{}",
                        s.rows(),
                        s.cols(),
                        sys.n2(),
                        sys.n2()
                    )));
                }
                let lu = lu_factor(s)?;
                if lu.is_singular() {
                    return Err(Error::SingularBlock {
                        block: "S",
                        detail: "provided Schur substitute is singular".into(),
                    });
                }
                Arc::new(lu)
            }
        }
    };
    let a12: Arc<dyn BlockMap> = sys.a12_shared();
    let a21: Arc<dyn BlockMap> = sys.a21_shared();
    PreconditionerInstance::from_parts(kind.tag, sys.a11_factors(), second, Some(a12), Some(a21))
}

/// Explicit dense P for a kind; a test and inspection aid.
pub fn assemble_preconditioner(sys: &BlockSystem, kind: &PreconditionerKind) -> DenseMatrix {
    let n1 = sys.n1();
    let s = match &kind.schur {
        SchurMode::Exact => sys.assemble_schur().clone(),
        SchurMode::Provided(s) => s.clone(),
    };
    let mut p = DenseMatrix::zeros(sys.dim(), sys.dim());
    p.set_submatrix(0, 0, sys.a11());
    let lower_right = match kind.tag {
        PrecondTag::LowerTri => {
            p.set_submatrix(n1, 0, sys.a21());
            s
        }
        PrecondTag::UpperTri => {
            p.set_submatrix(0, n1, sys.a12());
            s
        }
        PrecondTag::Ldu => {
            p.set_submatrix(n1, 0, sys.a21());
            p.set_submatrix(0, n1, sys.a12());
            s.add(&sys.coupling()).expect("shapes agree")
        }
        PrecondTag::DiagPlus => s,
        PrecondTag::DiagMinus => s.scaled(-1.0),
        PrecondTag::DiagHatPlus => sys.a22().clone(),
        PrecondTag::DiagHatMinus => sys.a22().scaled(-1.0),
    };
    p.set_submatrix(n1, n1, &lower_right);
    p
}
