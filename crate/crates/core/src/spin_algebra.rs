//! Spin-1 operators in the basis {↑, 0, ↓} (descending m) and their
//! embeddings into the two-qutrit product space {↑,0,↓} ⊗ {↑,0,↓}.

use std::f64::consts::SQRT_2;
use std::sync::OnceLock;

use thiserror::Error;

use crate::numerics::{kron, ComplexMatrix, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("expected a 3x3 single-site operator, got {0}x{0}")]
    BadDimension(usize),
    #[error("site index must be 1 or 2, got {0}")]
    BadSite(u8),
}

/// The spin-1 matrices with ħ = 1.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub sx: ComplexMatrix,
    pub sy: ComplexMatrix,
    pub sz: ComplexMatrix,
    pub s_plus: ComplexMatrix,
    pub s_minus: ComplexMatrix,
}

impl SpinOperators {
    pub fn vector(&self) -> [&ComplexMatrix; 3] {
        [&self.sx, &self.sy, &self.sz]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteIndex {
    One,
    Two,
}

impl TryFrom<u8> for SiteIndex {
    type Error = SpinError;
    fn try_from(value: u8) -> Result<Self, SpinError> {
        match value {
            1 => Ok(SiteIndex::One),
            2 => Ok(SiteIndex::Two),
            other => Err(SpinError::BadSite(other)),
        }
    }
}

/// m quantum numbers of the single-site basis, in storage order.
pub const SITE_M: [i32; 3] = [1, 0, -1];

pub fn spin1_operators() -> &'static SpinOperators {
    static OPS: OnceLock<SpinOperators> = OnceLock::new();
    OPS.get_or_init(|| {
        let r = 1.0 / SQRT_2;
        let z = C64::new(0.0, 0.0);
        let re = |x: f64| C64::new(x, 0.0);
        let im = |x: f64| C64::new(0.0, x);
        let sx = ComplexMatrix::from_real_rows(&[&[0.0, r, 0.0], &[r, 0.0, r], &[0.0, r, 0.0]]);
        let sy = ComplexMatrix::from_row_major(
            3,
            vec![z, im(-r), z, im(r), z, im(-r), z, im(r), z],
        );
        let sz = ComplexMatrix::from_diagonal(&[1.0, 0.0, -1.0]);
        let s_plus = ComplexMatrix::from_row_major(
            3,
            vec![z, re(SQRT_2), z, z, z, re(SQRT_2), z, z, z],
        );
        let s_minus = s_plus.adjoint();
        SpinOperators {
            sx,
            sy,
            sz,
            s_plus,
            s_minus,
        }
    })
}

/// op ⊗ I₃ for site 1, I₃ ⊗ op for site 2.
pub fn embed(op: &ComplexMatrix, site: SiteIndex) -> Result<ComplexMatrix, SpinError> {
    if op.dim() != 3 {
        return Err(SpinError::BadDimension(op.dim()));
    }
    let id = ComplexMatrix::identity(3);
    Ok(match site {
        SiteIndex::One => kron(op, &id),
        SiteIndex::Two => kron(&id, op),
    })
}

/// Cached two-site operators used by every coupled Hamiltonian.
#[derive(Debug, Clone)]
pub struct TwoSiteOperators {
    /// (S₁ˣ, S₁ʸ, S₁ᶻ)
    pub s1: [ComplexMatrix; 3],
    /// (S₂ˣ, S₂ʸ, S₂ᶻ)
    pub s2: [ComplexMatrix; 3],
    /// S₁ˣS₂ˣ + S₁ʸS₂ʸ
    pub flip_flop: ComplexMatrix,
    /// S₁ᶻS₂ᶻ
    pub zz: ComplexMatrix,
    /// (S₁⁺S₂⁻)² + (S₁⁻S₂⁺)²
    pub double_flip: ComplexMatrix,
    /// S₁ᶻ + S₂ᶻ
    pub total_sz: ComplexMatrix,
}

pub fn two_site_operators() -> &'static TwoSiteOperators {
    static OPS: OnceLock<TwoSiteOperators> = OnceLock::new();
    OPS.get_or_init(|| {
        let s = spin1_operators();
        let on = |op: &ComplexMatrix, site| embed(op, site).expect("3x3 operator");
        let s1 = s.vector().map(|op| on(op, SiteIndex::One));
        let s2 = s.vector().map(|op| on(op, SiteIndex::Two));
        let flip_flop = &s1[0].matmul(&s2[0]) + &s1[1].matmul(&s2[1]);
        let zz = s1[2].matmul(&s2[2]);
        let raise_lower = on(&s.s_plus, SiteIndex::One).matmul(&on(&s.s_minus, SiteIndex::Two));
        let squared = raise_lower.matmul(&raise_lower);
        let double_flip = &squared + &squared.adjoint();
        let total_sz = &s1[2] + &s2[2];
        TwoSiteOperators {
            s1,
            s2,
            flip_flop,
            zz,
            double_flip,
            total_sz,
        }
    })
}

/// J_z = S₁ᶻ + S₂ᶻ; diagonal with the m_tot labels (2,1,0,1,0,−1,0,−1,−2).
pub fn total_sz() -> ComplexMatrix {
    two_site_operators().total_sz.clone()
}

/// m_tot of each two-site basis state, in storage order.
pub fn two_site_m() -> [i32; 9] {
    let mut out = [0; 9];
    for (a, ma) in SITE_M.iter().enumerate() {
        for (b, mb) in SITE_M.iter().enumerate() {
            out[3 * a + b] = ma + mb;
        }
    }
    out
}
