//! Dilated 1-D convolution over the time axis, lowered to a matrix product
//! via an im2col buffer.
//!
//! Layouts: input `[B, T, Cin]`, weight `[Cout, Cin, k]`, output `[B, T, Cout]`.
//! Column `c * k + tap` of the im2col matrix holds input channel `c` at frame
//! `t + tap * dilation - pad_left`, zero outside `[0, T)`.

use super::scalar::{gemm, MatRef};
use super::Real;

#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvDims {
    pub batch: usize,
    pub time: usize,
    pub cin: usize,
    pub cout: usize,
    pub k: usize,
    pub dilation: usize,
    pub pad_left: usize,
}

impl ConvDims {
    pub fn rows(&self) -> usize {
        self.batch * self.time
    }

    pub fn cols(&self) -> usize {
        self.cin * self.k
    }

    fn source(&self, t: usize, tap: usize) -> Option<usize> {
        let src = (t + tap * self.dilation) as isize - self.pad_left as isize;
        (src >= 0 && (src as usize) < self.time).then_some(src as usize)
    }
}

pub(crate) fn im2col<F: Real>(x: &[F], d: &ConvDims) -> Vec<F> {
    let r = d.cols();
    let mut col = vec![F::zero(); d.rows() * r];
    for b in 0..d.batch {
        for t in 0..d.time {
            let row = &mut col[(b * d.time + t) * r..(b * d.time + t + 1) * r];
            for tap in 0..d.k {
                if let Some(src) = d.source(t, tap) {
                    let xrow = &x[(b * d.time + src) * d.cin..(b * d.time + src + 1) * d.cin];
                    for (c, &v) in xrow.iter().enumerate() {
                        row[c * d.k + tap] = v;
                    }
                }
            }
        }
    }
    col
}

fn col2im<F: Real>(dcol: &[F], d: &ConvDims) -> Vec<F> {
    let r = d.cols();
    let mut dx = vec![F::zero(); d.rows() * d.cin];
    for b in 0..d.batch {
        for t in 0..d.time {
            let row = &dcol[(b * d.time + t) * r..(b * d.time + t + 1) * r];
            for tap in 0..d.k {
                if let Some(src) = d.source(t, tap) {
                    let dxrow = &mut dx[(b * d.time + src) * d.cin..(b * d.time + src + 1) * d.cin];
                    for (c, v) in dxrow.iter_mut().enumerate() {
                        *v += row[c * d.k + tap];
                    }
                }
            }
        }
    }
    dx
}

/// Returns the output and, for `k > 1`, the im2col buffer kept for backward.
pub(crate) fn forward<F: Real>(x: &[F], w: &[F], bias: &[F], d: &ConvDims) -> (Vec<F>, Option<Vec<F>>) {
    let n = d.rows();
    let col = (d.k > 1).then(|| im2col(x, d));
    let lhs = col.as_deref().unwrap_or(x);
    let mut out = vec![F::zero(); n * d.cout];
    gemm(
        MatRef::new(lhs, n, d.cols()),
        MatRef::t(w, d.cout, d.cols()),
        &mut out,
        false,
    );
    for row in out.chunks_exact_mut(d.cout) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    }
    (out, col)
}

pub(crate) struct ConvGrads<F> {
    pub dx: Option<Vec<F>>,
    pub dw: Vec<F>,
    pub db: Vec<F>,
}

pub(crate) fn backward<F: Real>(
    x: &[F],
    w: &[F],
    col: Option<&[F]>,
    dout: &[F],
    d: &ConvDims,
    need_dx: bool,
) -> ConvGrads<F> {
    let n = d.rows();
    let r = d.cols();
    let lhs = col.unwrap_or(x);

    let mut dw = vec![F::zero(); d.cout * r];
    gemm(MatRef::t(dout, n, d.cout), MatRef::new(lhs, n, r), &mut dw, false);

    let mut db = vec![F::zero(); d.cout];
    for row in dout.chunks_exact(d.cout) {
        for (acc, &g) in db.iter_mut().zip(row) {
            *acc += g;
        }
    }

    let dx = need_dx.then(|| {
        let mut dcol = vec![F::zero(); n * r];
        gemm(
            MatRef::new(dout, n, d.cout),
            MatRef::new(w, d.cout, r),
            &mut dcol,
            false,
        );
        if d.k > 1 {
            col2im(&dcol, d)
        } else {
            dcol
        }
    });
    ConvGrads { dx, dw, db }
}
