//! Single-direction LSTM recurrence with hand-written backpropagation
//! through time.
//!
//! Gate order inside the `4H` axis is input, forget, cell candidate, output.
//! `w_ih: [4H, Din]`, `w_hh: [4H, H]`, `bias: [4H]`. Rows of the flattened
//! input and output are indexed `b * T + t`.

use super::scalar::{gemm, MatRef};
use super::Real;

#[derive(Clone, Copy, Debug)]
pub(crate) struct LstmDims {
    pub batch: usize,
    pub time: usize,
    pub input: usize,
    pub hidden: usize,
    pub reverse: bool,
}

impl LstmDims {
    fn step_time(&self, s: usize) -> usize {
        if self.reverse {
            self.time - 1 - s
        } else {
            s
        }
    }
}

/// Activations saved by the forward pass.
#[derive(Debug)]
pub(crate) struct LstmCache<F> {
    /// Post-nonlinearity gates, `[T, B, 4H]`.
    gates: Vec<F>,
    /// Cell state entering each step, `[T, B, H]`.
    cell_prev: Vec<F>,
    /// `tanh` of the cell state leaving each step, `[T, B, H]`.
    cell_tanh: Vec<F>,
    /// Hidden state entering each step, `[B*T, H]` in input row order.
    hidden_prev: Vec<F>,
}

fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

pub(crate) fn forward<F: Real>(x: &[F], w_ih: &[F], w_hh: &[F], bias: &[F], d: &LstmDims) -> (Vec<F>, LstmCache<F>) {
    let (bsz, tlen, h) = (d.batch, d.time, d.hidden);
    let g4 = 4 * h;
    let n = bsz * tlen;

    let mut pre = vec![F::zero(); n * g4];
    gemm(
        MatRef::new(x, n, d.input),
        MatRef::t(w_ih, g4, d.input),
        &mut pre,
        false,
    );

    let mut out = vec![F::zero(); n * h];
    let mut cache = LstmCache {
        gates: vec![F::zero(); tlen * bsz * g4],
        cell_prev: vec![F::zero(); tlen * bsz * h],
        cell_tanh: vec![F::zero(); tlen * bsz * h],
        hidden_prev: vec![F::zero(); n * h],
    };
    let mut hid = vec![F::zero(); bsz * h];
    let mut cell = vec![F::zero(); bsz * h];
    let mut gates = vec![F::zero(); bsz * g4];

    for s in 0..tlen {
        let t = d.step_time(s);
        for b in 0..bsz {
            let row = b * tlen + t;
            let gb = &mut gates[b * g4..(b + 1) * g4];
            for ((g, &p), &bi) in gb.iter_mut().zip(&pre[row * g4..(row + 1) * g4]).zip(bias) {
                *g = p + bi;
            }
            cache.hidden_prev[row * h..(row + 1) * h].copy_from_slice(&hid[b * h..(b + 1) * h]);
            let off = (t * bsz + b) * h;
            cache.cell_prev[off..off + h].copy_from_slice(&cell[b * h..(b + 1) * h]);
        }
        gemm(MatRef::new(&hid, bsz, h), MatRef::t(w_hh, g4, h), &mut gates, true);

        for b in 0..bsz {
            let gb = &gates[b * g4..(b + 1) * g4];
            let act = &mut cache.gates[(t * bsz + b) * g4..(t * bsz + b + 1) * g4];
            for j in 0..h {
                let i = sigmoid(gb[j]);
                let f = sigmoid(gb[h + j]);
                let gg = gb[2 * h + j].tanh();
                let o = sigmoid(gb[3 * h + j]);
                act[j] = i;
                act[h + j] = f;
                act[2 * h + j] = gg;
                act[3 * h + j] = o;
                let c = f * cell[b * h + j] + i * gg;
                let tc = c.tanh();
                let hv = o * tc;
                cell[b * h + j] = c;
                hid[b * h + j] = hv;
                cache.cell_tanh[(t * bsz + b) * h + j] = tc;
                out[(b * tlen + t) * h + j] = hv;
            }
        }
    }
    (out, cache)
}

pub(crate) struct LstmGrads<F> {
    pub dx: Option<Vec<F>>,
    pub dw_ih: Vec<F>,
    pub dw_hh: Vec<F>,
    pub db: Vec<F>,
}

pub(crate) fn backward<F: Real>(
    x: &[F],
    w_ih: &[F],
    w_hh: &[F],
    cache: &LstmCache<F>,
    dout: &[F],
    d: &LstmDims,
    need_dx: bool,
) -> LstmGrads<F> {
    let (bsz, tlen, h) = (d.batch, d.time, d.hidden);
    let g4 = 4 * h;
    let n = bsz * tlen;
    let one = F::one();

    let mut dpre = vec![F::zero(); n * g4];
    let mut dh_next = vec![F::zero(); bsz * h];
    let mut dc_next = vec![F::zero(); bsz * h];

    for s in (0..tlen).rev() {
        let t = d.step_time(s);
        for b in 0..bsz {
            let act = &cache.gates[(t * bsz + b) * g4..(t * bsz + b + 1) * g4];
            let row = b * tlen + t;
            let dg = &mut dpre[row * g4..(row + 1) * g4];
            for j in 0..h {
                let (i, f, gg, o) = (act[j], act[h + j], act[2 * h + j], act[3 * h + j]);
                let tc = cache.cell_tanh[(t * bsz + b) * h + j];
                let cp = cache.cell_prev[(t * bsz + b) * h + j];
                let dh = dout[row * h + j] + dh_next[b * h + j];
                let d_o = dh * tc;
                let dc = dc_next[b * h + j] + dh * o * (one - tc * tc);
                dc_next[b * h + j] = dc * f;
                dg[j] = dc * gg * i * (one - i);
                dg[h + j] = dc * cp * f * (one - f);
                dg[2 * h + j] = dc * i * (one - gg * gg);
                dg[3 * h + j] = d_o * o * (one - o);
            }
        }
        // dh for the previous step = dgates_t · W_hh
        gemm(
            MatRef::strided(&dpre[t * g4..], bsz, g4, tlen * g4, 1),
            MatRef::new(w_hh, g4, h),
            &mut dh_next,
            false,
        );
    }

    let mut dw_ih = vec![F::zero(); g4 * d.input];
    gemm(MatRef::t(&dpre, n, g4), MatRef::new(x, n, d.input), &mut dw_ih, false);
    let mut dw_hh = vec![F::zero(); g4 * h];
    gemm(
        MatRef::t(&dpre, n, g4),
        MatRef::new(&cache.hidden_prev, n, h),
        &mut dw_hh,
        false,
    );
    let mut db = vec![F::zero(); g4];
    for row in dpre.chunks_exact(g4) {
        for (acc, &g) in db.iter_mut().zip(row) {
            *acc += g;
        }
    }
    let dx = need_dx.then(|| {
        let mut dx = vec![F::zero(); n * d.input];
        gemm(
            MatRef::new(&dpre, n, g4),
            MatRef::new(w_ih, g4, d.input),
            &mut dx,
            false,
        );
        dx
    });
    LstmGrads { dx, dw_ih, dw_hh, db }
}
