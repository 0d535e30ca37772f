//! LSTM building blocks with explicit forward caches and hand-written
//! backward passes. Gate order throughout is input, forget, cell, output.

use ndarray::{Array1, Array2};

/// One direction of an LSTM layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmDirParams {
    /// [4H x D]
    pub wx: Array2<f64>,
    /// [4H x H]
    pub wh: Array2<f64>,
    /// [4H]
    pub b: Array1<f64>,
}

impl LstmDirParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            wx: Array2::zeros((4 * hidden, input_dim)),
            wh: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b.len() / 4
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmParams {
    pub fwd: LstmDirParams,
    pub bwd: LstmDirParams,
}

impl BiLstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            fwd: LstmDirParams::zeros(input_dim, hidden),
            bwd: LstmDirParams::zeros(input_dim, hidden),
        }
    }
}

/// Step-by-step activations in processing order.
#[derive(Debug, Clone)]
pub struct LstmDirCache {
    /// [len x D], processing order
    pub inputs: Array2<f64>,
    pub gate_i: Array2<f64>,
    pub gate_f: Array2<f64>,
    pub gate_g: Array2<f64>,
    pub gate_o: Array2<f64>,
    pub cell: Array2<f64>,
    pub tanh_cell: Array2<f64>,
    pub hidden: Array2<f64>,
    pub reverse: bool,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Run one direction over a sequence. `inputs` is in original time order;
/// with `reverse` the steps run back to front. The returned output is in
/// original time order either way.
pub fn lstm_dir_forward(
    params: &LstmDirParams,
    inputs: &Array2<f64>,
    reverse: bool,
) -> (Array2<f64>, LstmDirCache) {
    let len = inputs.nrows();
    let h_dim = params.hidden();
    let mut cache = LstmDirCache {
        inputs: Array2::zeros((len, inputs.ncols())),
        gate_i: Array2::zeros((len, h_dim)),
        gate_f: Array2::zeros((len, h_dim)),
        gate_g: Array2::zeros((len, h_dim)),
        gate_o: Array2::zeros((len, h_dim)),
        cell: Array2::zeros((len, h_dim)),
        tanh_cell: Array2::zeros((len, h_dim)),
        hidden: Array2::zeros((len, h_dim)),
        reverse,
    };
    let mut out = Array2::zeros((len, h_dim));
    let mut h_prev = Array1::zeros(h_dim);
    let mut c_prev: Array1<f64> = Array1::zeros(h_dim);
    for step in 0..len {
        let t = if reverse { len - 1 - step } else { step };
        let x = inputs.row(t);
        cache.inputs.row_mut(step).assign(&x);
        let mut z = params.wx.dot(&x) + params.wh.dot(&h_prev);
        z += &params.b;
        let mut h_t = Array1::zeros(h_dim);
        let mut c_t = Array1::zeros(h_dim);
        for u in 0..h_dim {
            let i = sigmoid(z[u]);
            let f = sigmoid(z[h_dim + u]);
            let g = z[2 * h_dim + u].tanh();
            let o = sigmoid(z[3 * h_dim + u]);
            let c = f * c_prev[u] + i * g;
            let tc = c.tanh();
            cache.gate_i[(step, u)] = i;
            cache.gate_f[(step, u)] = f;
            cache.gate_g[(step, u)] = g;
            cache.gate_o[(step, u)] = o;
            cache.cell[(step, u)] = c;
            cache.tanh_cell[(step, u)] = tc;
            c_t[u] = c;
            h_t[u] = o * tc;
        }
        cache.hidden.row_mut(step).assign(&h_t);
        out.row_mut(t).assign(&h_t);
        h_prev = h_t;
        c_prev = c_t;
    }
    (out, cache)
}

/// Backprop one direction. `d_out` is in original time order; returns
/// `d_inputs` in original time order and accumulates parameter gradients.
pub fn lstm_dir_backward(
    params: &LstmDirParams,
    cache: &LstmDirCache,
    d_out: &Array2<f64>,
    grads: &mut LstmDirParams,
) -> Array2<f64> {
    let len = cache.inputs.nrows();
    let h_dim = params.hidden();
    let mut d_inputs = Array2::zeros((len, cache.inputs.ncols()));
    let mut dh_next: Array1<f64> = Array1::zeros(h_dim);
    let mut dc_next: Array1<f64> = Array1::zeros(h_dim);
    for step in (0..len).rev() {
        let t = if cache.reverse { len - 1 - step } else { step };
        let mut dh = dh_next.clone();
        dh += &d_out.row(t);
        let mut dz = Array1::zeros(4 * h_dim);
        let mut dc_prev = Array1::zeros(h_dim);
        for u in 0..h_dim {
            let i = cache.gate_i[(step, u)];
            let f = cache.gate_f[(step, u)];
            let g = cache.gate_g[(step, u)];
            let o = cache.gate_o[(step, u)];
            let tc = cache.tanh_cell[(step, u)];
            let c_prev = if step == 0 { 0.0 } else { cache.cell[(step - 1, u)] };
            let d_o = dh[u] * tc;
            let dc = dc_next[u] + dh[u] * o * (1.0 - tc * tc);
            let d_f = dc * c_prev;
            let d_i = dc * g;
            let d_g = dc * i;
            dc_prev[u] = dc * f;
            dz[u] = d_i * i * (1.0 - i);
            dz[h_dim + u] = d_f * f * (1.0 - f);
            dz[2 * h_dim + u] = d_g * (1.0 - g * g);
            dz[3 * h_dim + u] = d_o * o * (1.0 - o);
        }
        let x = cache.inputs.row(step);
        for (r, &dz_r) in dz.iter().enumerate() {
            grads.wx.row_mut(r).scaled_add(dz_r, &x);
        }
        if step > 0 {
            let h_prev = cache.hidden.row(step - 1);
            for (r, &dz_r) in dz.iter().enumerate() {
                grads.wh.row_mut(r).scaled_add(dz_r, &h_prev);
            }
        }
        grads.b += &dz;
        d_inputs.row_mut(t).assign(&params.wx.t().dot(&dz));
        dh_next = params.wh.t().dot(&dz);
        dc_next = dc_prev;
    }
    d_inputs
}

#[derive(Debug, Clone)]
pub struct BiLstmCache {
    pub fwd: LstmDirCache,
    pub bwd: LstmDirCache,
}

/// Bidirectional layer: concatenated forward and backward hidden states.
pub fn bilstm_forward(params: &BiLstmParams, inputs: &Array2<f64>) -> (Array2<f64>, BiLstmCache) {
    let (out_f, cache_f) = lstm_dir_forward(&params.fwd, inputs, false);
    let (out_b, cache_b) = lstm_dir_forward(&params.bwd, inputs, true);
    let len = inputs.nrows();
    let h = params.fwd.hidden();
    let mut out = Array2::zeros((len, 2 * h));
    for t in 0..len {
        out.row_mut(t)
            .slice_mut(ndarray::s![..h])
            .assign(&out_f.row(t));
        out.row_mut(t)
            .slice_mut(ndarray::s![h..])
            .assign(&out_b.row(t));
    }
    (out, BiLstmCache { fwd: cache_f, bwd: cache_b })
}

pub fn bilstm_backward(
    params: &BiLstmParams,
    cache: &BiLstmCache,
    d_out: &Array2<f64>,
    grads: &mut BiLstmParams,
) -> Array2<f64> {
    let h = params.fwd.hidden();
    let d_fwd = d_out.slice(ndarray::s![.., ..h]).to_owned();
    let d_bwd = d_out.slice(ndarray::s![.., h..]).to_owned();
    let mut d_in = lstm_dir_backward(&params.fwd, &cache.fwd, &d_fwd, &mut grads.fwd);
    d_in += &lstm_dir_backward(&params.bwd, &cache.bwd, &d_bwd, &mut grads.bwd);
    d_in
}
