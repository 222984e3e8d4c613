//! LSTM recurrence in two roles:
//!
//! * `Causal`: one unidirectional pass over a step sequence (the cue-history
//!   recurrence of the auto-regressive generators). Output at step n depends
//!   only on inputs 0..=n.
//! * `BidirectionalEncoder`: forward and backward passes over a short,
//!   fully-known window (the audio context around one frame), summarized as
//!   the concatenation of the two final hidden states.
//!
//! Like the feed-forward layers, caches are stacks: backward calls must
//! mirror forward calls in reverse order.

use crate::error::{Error, Result};
use crate::neural::tensor::Tensor;
use ndarray::{concatenate, s, Array2, Axis};
use rand_chacha::ChaCha20Rng;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    i: Array2<f64>,
    f: Array2<f64>,
    g: Array2<f64>,
    o: Array2<f64>,
    c: Array2<f64>,
}

/// One LSTM cell. Gate rows of the stacked weight matrices are ordered
/// (input, forget, candidate, output), each a `hidden`-row block.
pub struct LstmCell {
    /// 4*hidden x in_dim.
    pub w_x: Tensor,
    /// 4*hidden x hidden.
    pub w_h: Tensor,
    /// 4*hidden; forget-gate block initialized to 1 for stable early training.
    pub b: Tensor,
    hidden: usize,
    cache: Vec<StepCache>,
}

impl LstmCell {
    pub fn new(name: &str, in_dim: usize, hidden: usize, rng: &mut ChaCha20Rng) -> LstmCell {
        let w_x = Tensor::uniform(format!("{name}.w_x"), &[4 * hidden, in_dim], in_dim, rng);
        let w_h = Tensor::uniform(format!("{name}.w_h"), &[4 * hidden, hidden], hidden, rng);
        let mut b = Tensor::zeros(format!("{name}.b"), &[4 * hidden]);
        for k in hidden..2 * hidden {
            b.value[[k]] = 1.0;
        }
        LstmCell { w_x, w_h, b, hidden, cache: Vec::new() }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn in_dim(&self) -> usize {
        self.w_x.shape()[1]
    }

    pub fn zero_state(&self, batch: usize) -> (Array2<f64>, Array2<f64>) {
        (Array2::zeros((batch, self.hidden)), Array2::zeros((batch, self.hidden)))
    }

    fn gates(&self, x: &Array2<f64>, h: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w_x.mat().t()) + h.dot(&self.w_h.mat().t()) + self.b.vec()
    }

    /// One step with caching for backward.
    pub fn step(
        &mut self,
        x: &Array2<f64>,
        h_prev: &Array2<f64>,
        c_prev: &Array2<f64>,
    ) -> (Array2<f64>, Array2<f64>) {
        let h_dim = self.hidden;
        let z = self.gates(x, h_prev);
        let i = z.slice(s![.., 0..h_dim]).mapv(sigmoid);
        let f = z.slice(s![.., h_dim..2 * h_dim]).mapv(sigmoid);
        let g = z.slice(s![.., 2 * h_dim..3 * h_dim]).mapv(f64::tanh);
        let o = z.slice(s![.., 3 * h_dim..4 * h_dim]).mapv(sigmoid);
        let c = &f * c_prev + &i * &g;
        let h = &o * &c.mapv(f64::tanh);
        self.cache.push(StepCache {
            x: x.clone(),
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            i,
            f,
            g,
            o,
            c: c.clone(),
        });
        (h, c)
    }

    /// One step without caching.
    pub fn step_infer(
        &self,
        x: &Array2<f64>,
        h_prev: &Array2<f64>,
        c_prev: &Array2<f64>,
    ) -> (Array2<f64>, Array2<f64>) {
        let h_dim = self.hidden;
        let z = self.gates(x, h_prev);
        let i = z.slice(s![.., 0..h_dim]).mapv(sigmoid);
        let f = z.slice(s![.., h_dim..2 * h_dim]).mapv(sigmoid);
        let g = z.slice(s![.., 2 * h_dim..3 * h_dim]).mapv(f64::tanh);
        let o = z.slice(s![.., 3 * h_dim..4 * h_dim]).mapv(sigmoid);
        let c = &f * c_prev + &i * &g;
        let h = &o * &c.mapv(f64::tanh);
        (h, c)
    }

    /// Backward through the most recent cached step. Takes the gradients
    /// flowing into this step's h and c outputs, returns (dx, dh_prev, dc_prev).
    pub fn backward_step(
        &mut self,
        dh: &Array2<f64>,
        dc_in: &Array2<f64>,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let st = self.cache.pop().expect("backward without a matching step");
        let tanh_c = st.c.mapv(f64::tanh);
        let d_o = dh * &tanh_c;
        let dc = dc_in + &(dh * &st.o * &tanh_c.mapv(|v| 1.0 - v * v));
        let d_f = &dc * &st.c_prev;
        let d_i = &dc * &st.g;
        let d_g = &dc * &st.i;
        let dz_i = d_i * &st.i.mapv(|v| v * (1.0 - v));
        let dz_f = d_f * &st.f.mapv(|v| v * (1.0 - v));
        let dz_g = d_g * &st.g.mapv(|v| 1.0 - v * v);
        let dz_o = d_o * &st.o.mapv(|v| v * (1.0 - v));
        let dz = concatenate(
            Axis(1),
            &[dz_i.view(), dz_f.view(), dz_g.view(), dz_o.view()],
        )
        .expect("gate blocks share the batch dimension");
        self.w_x.add_to_grad2(&dz.t().dot(&st.x));
        self.w_h.add_to_grad2(&dz.t().dot(&st.h_prev));
        self.b.add_to_grad1(&dz.sum_axis(Axis(0)));
        let dx = dz.dot(&self.w_x.mat());
        let dh_prev = dz.dot(&self.w_h.mat());
        let dc_prev = &dc * &st.f;
        (dx, dh_prev, dc_prev)
    }

    pub fn params(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.b]
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Causal,
    BidirectionalEncoder,
}

/// A recurrence with a declared direction mode. Causal layers run a single
/// cell over arbitrarily long sequences; bidirectional encoders run a cell
/// pair over short windows and emit one summary vector per window.
pub struct RecurrentLayer {
    pub direction: Direction,
    cell: LstmCell,
    cell_back: Option<LstmCell>,
}

impl RecurrentLayer {
    pub fn causal(name: &str, in_dim: usize, hidden: usize, rng: &mut ChaCha20Rng) -> RecurrentLayer {
        RecurrentLayer {
            direction: Direction::Causal,
            cell: LstmCell::new(name, in_dim, hidden, rng),
            cell_back: None,
        }
    }

    pub fn bidirectional_encoder(
        name: &str,
        in_dim: usize,
        hidden: usize,
        rng: &mut ChaCha20Rng,
    ) -> RecurrentLayer {
        RecurrentLayer {
            direction: Direction::BidirectionalEncoder,
            cell: LstmCell::new(&format!("{name}.fwd"), in_dim, hidden, rng),
            cell_back: Some(LstmCell::new(&format!("{name}.bwd"), in_dim, hidden, rng)),
        }
    }

    pub fn hidden(&self) -> usize {
        self.cell.hidden()
    }

    /// Width of one output vector: hidden for causal, 2*hidden for encoders.
    pub fn out_dim(&self) -> usize {
        match self.direction {
            Direction::Causal => self.cell.hidden(),
            Direction::BidirectionalEncoder => 2 * self.cell.hidden(),
        }
    }

    /// Causal pass over a step sequence from a zero state; returns the hidden
    /// state at every step.
    pub fn forward_sequence(&mut self, xs: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
        self.require(Direction::Causal)?;
        let batch = xs.first().map(|x| x.nrows()).unwrap_or(0);
        let (mut h, mut c) = self.cell.zero_state(batch);
        let mut hs = Vec::with_capacity(xs.len());
        for x in xs {
            let (nh, nc) = self.cell.step(x, &h, &c);
            h = nh;
            c = nc;
            hs.push(h.clone());
        }
        Ok(hs)
    }

    pub fn infer_sequence(&self, xs: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
        self.require(Direction::Causal)?;
        let batch = xs.first().map(|x| x.nrows()).unwrap_or(0);
        let (mut h, mut c) = self.cell.zero_state(batch);
        let mut hs = Vec::with_capacity(xs.len());
        for x in xs {
            let (nh, nc) = self.cell.step_infer(x, &h, &c);
            h = nh;
            c = nc;
            hs.push(h.clone());
        }
        Ok(hs)
    }

    /// One causal step with explicit state and no caching, for
    /// auto-regressive inference where the caller carries (h, c).
    pub fn step_infer(
        &self,
        x: &Array2<f64>,
        h: &Array2<f64>,
        c: &Array2<f64>,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        self.require(Direction::Causal)?;
        Ok(self.cell.step_infer(x, h, c))
    }

    pub fn zero_state(&self, batch: usize) -> (Array2<f64>, Array2<f64>) {
        self.cell.zero_state(batch)
    }

    pub fn in_dim(&self) -> usize {
        self.cell.in_dim()
    }

    /// Backward for `forward_sequence`: per-step output gradients in, per-step
    /// input gradients out.
    pub fn backward_sequence(&mut self, d_hs: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
        self.require(Direction::Causal)?;
        let batch = d_hs.first().map(|d| d.nrows()).unwrap_or(0);
        let (mut dh_carry, mut dc_carry) = self.cell.zero_state(batch);
        let mut dxs = vec![Array2::zeros((0, 0)); d_hs.len()];
        for n in (0..d_hs.len()).rev() {
            let dh = &d_hs[n] + &dh_carry;
            let (dx, dh_prev, dc_prev) = self.cell.backward_step(&dh, &dc_carry);
            dxs[n] = dx;
            dh_carry = dh_prev;
            dc_carry = dc_prev;
        }
        Ok(dxs)
    }

    /// Encodes one fully-known window as [h_fwd_final ; h_bwd_final].
    pub fn forward_window(&mut self, xs: &[Array2<f64>]) -> Result<Array2<f64>> {
        self.require(Direction::BidirectionalEncoder)?;
        if xs.is_empty() {
            return Err(Error::usage("bidirectional encoder needs a non-empty window"));
        }
        let batch = xs[0].nrows();
        let (mut h, mut c) = self.cell.zero_state(batch);
        for x in xs {
            let (nh, nc) = self.cell.step(x, &h, &c);
            h = nh;
            c = nc;
        }
        let back = self.cell_back.as_mut().expect("encoder owns a backward cell");
        let (mut hb, mut cb) = back.zero_state(batch);
        for x in xs.iter().rev() {
            let (nh, nc) = back.step(x, &hb, &cb);
            hb = nh;
            cb = nc;
        }
        Ok(concatenate(Axis(1), &[h.view(), hb.view()])
            .expect("window halves share the batch dimension"))
    }

    pub fn infer_window(&self, xs: &[Array2<f64>]) -> Result<Array2<f64>> {
        self.require(Direction::BidirectionalEncoder)?;
        if xs.is_empty() {
            return Err(Error::usage("bidirectional encoder needs a non-empty window"));
        }
        let batch = xs[0].nrows();
        let (mut h, mut c) = self.cell.zero_state(batch);
        for x in xs {
            let (nh, nc) = self.cell.step_infer(x, &h, &c);
            h = nh;
            c = nc;
        }
        let back = self.cell_back.as_ref().expect("encoder owns a backward cell");
        let (mut hb, mut cb) = back.zero_state(batch);
        for x in xs.iter().rev() {
            let (nh, nc) = back.step_infer(x, &hb, &cb);
            hb = nh;
            cb = nc;
        }
        Ok(concatenate(Axis(1), &[h.view(), hb.view()])
            .expect("window halves share the batch dimension"))
    }

    /// Backward for `forward_window`. `window_len` must match the forward
    /// call being unwound; returns per-position input gradients.
    pub fn backward_window(
        &mut self,
        d_out: &Array2<f64>,
        window_len: usize,
    ) -> Result<Vec<Array2<f64>>> {
        self.require(Direction::BidirectionalEncoder)?;
        let hidden = self.cell.hidden();
        let batch = d_out.nrows();
        let d_fwd = d_out.slice(s![.., 0..hidden]).to_owned();
        let d_bwd = d_out.slice(s![.., hidden..2 * hidden]).to_owned();
        let mut dxs = vec![Array2::<f64>::zeros((batch, self.cell.in_dim())); window_len];

        // The backward cell consumed the window reversed, and is unwound first
        // (its steps were cached last).
        let back = self.cell_back.as_mut().expect("encoder owns a backward cell");
        let mut dh = d_bwd;
        let mut dc = Array2::zeros((batch, hidden));
        for n in 0..window_len {
            let (dx, dh_prev, dc_prev) = back.backward_step(&dh, &dc);
            dxs[n] += &dx;
            dh = dh_prev;
            dc = dc_prev;
        }
        let mut dh = d_fwd;
        let mut dc = Array2::zeros((batch, hidden));
        for n in (0..window_len).rev() {
            let (dx, dh_prev, dc_prev) = self.cell.backward_step(&dh, &dc);
            dxs[n] += &dx;
            dh = dh_prev;
            dc = dc_prev;
        }
        Ok(dxs)
    }

    pub fn params(&mut self) -> Vec<&mut Tensor> {
        let mut ps = self.cell.params();
        if let Some(back) = self.cell_back.as_mut() {
            ps.extend(back.params());
        }
        ps
    }

    pub fn clear_cache(&mut self) {
        self.cell.clear_cache();
        if let Some(back) = self.cell_back.as_mut() {
            back.clear_cache();
        }
    }

    fn require(&self, dir: Direction) -> Result<()> {
        if self.direction == dir {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "recurrent layer is {:?}, operation needs {dir:?}",
                self.direction
            )))
        }
    }
}
