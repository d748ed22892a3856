//! Dense complex products through `matrixmultiply`, several times faster than
//! the generic nalgebra kernel at the sizes used here.

use matrixmultiply::CGemmOption;

use crate::operators::{CMatrix, C64};

#[derive(Clone, Copy)]
enum Op {
    None,
    Adjoint,
}

fn gemm(a: &CMatrix, op_a: Op, b: &CMatrix, op_b: Op) -> CMatrix {
    // conjugated copies; the transpose is expressed through strides
    let conj_a = matches!(op_a, Op::Adjoint).then(|| a.conjugate());
    let conj_b = matches!(op_b, Op::Adjoint).then(|| b.conjugate());
    let (rows_a, cols_a) = a.shape();
    let (rows_b, cols_b) = b.shape();
    // column-major storage: (row stride, col stride) = (1, rows)
    let (m, k, rsa, csa) = match op_a {
        Op::None => (rows_a, cols_a, 1, rows_a as isize),
        Op::Adjoint => (cols_a, rows_a, rows_a as isize, 1),
    };
    let (k2, n, rsb, csb) = match op_b {
        Op::None => (rows_b, cols_b, 1, rows_b as isize),
        Op::Adjoint => (cols_b, rows_b, rows_b as isize, 1),
    };
    assert_eq!(k, k2, "inner dimensions differ");
    let a = conj_a.as_ref().unwrap_or(a);
    let b = conj_b.as_ref().unwrap_or(b);
    let mut out = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    // SAFETY: Complex<f64> is repr(C) with layout [f64; 2]; nalgebra dynamic
    // matrices are contiguous column-major, and the strides above stay inside
    // each buffer for the dimensions passed.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            rsa,
            csa,
            b.as_ptr() as *const [f64; 2],
            rsb,
            csb,
            [0.0, 0.0],
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    out
}

/// `a · b`
pub(crate) fn mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    gemm(a, Op::None, b, Op::None)
}

/// `a† · b`
pub(crate) fn adj_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    gemm(a, Op::Adjoint, b, Op::None)
}

/// `a · b†`
pub(crate) fn mul_adj(a: &CMatrix, b: &CMatrix) -> CMatrix {
    gemm(a, Op::None, b, Op::Adjoint)
}

/// `v · diag(d) · v†`
pub(crate) fn conjugate_diagonal(v: &CMatrix, d: impl IntoIterator<Item = f64>) -> CMatrix {
    let mut scaled = v.clone();
    for (j, x) in d.into_iter().enumerate() {
        let f = C64::new(x, 0.0);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= f);
    }
    mul_adj(&scaled, v)
}
