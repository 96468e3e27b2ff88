use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::numerics::{pinv_default, random_reservoir, solve_spd, tol, Mat, NumericsError};
use crate::scenario::{EsnConfig, Point2, RandomSource};

use super::conceptor::{compute_conceptor, Conceptor};
use super::CesnError;

/// Steps an autonomous or constant-input run settles before outputs count.
pub const RECALL_WARMUP: usize = 100;

/// Memory bookkeeping for one loaded pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadReport {
    pub pattern: usize,
    pub quota_before: f64,
    pub quota_after: f64,
}

impl LoadReport {
    pub fn used(&self) -> f64 {
        self.quota_before - self.quota_after
    }
}

/// Reservoir, readout, input-simulation matrix and one conceptor per loaded
/// pattern.
#[derive(Debug, Clone)]
pub struct EsnModel {
    pub w_in: Mat,
    pub w: Mat,
    pub bias: Vec<f64>,
    pub w_out: Option<Mat>,
    pub d: Mat,
    pub conceptors: Vec<Conceptor>,
    pub output_dim: usize,
    pub aperture: f64,
    pub ridge: f64,
    pub washout: usize,
    pub state: Vec<f64>,
    union: Conceptor,
    train_states: Vec<Mat>,
    train_targets: Vec<Mat>,
}

impl EsnModel {
    /// Fresh model with a random sparse reservoir scaled to `cfg.spectral_radius`.
    pub fn new(input_dim: usize, output_dim: usize, cfg: &EsnConfig, rs: &RandomSource) -> Result<EsnModel, CesnError> {
        if input_dim == 0 || output_dim == 0 {
            return Err(CesnError::Config("input and output dimensions must be positive".into()));
        }
        let n = cfg.reservoir_size;
        let w = random_reservoir(n, cfg.density, cfg.spectral_radius, &rs.derive("reservoir"))?;
        let mut rng = rs.derive("input").rng();
        let data: Vec<f64> = (0..n * input_dim).map(|_| cfg.input_scale * rng.gen_range(-1.0..1.0)).collect();
        let w_in = Mat::from_rows(n, input_dim, &data);
        let mut rng = rs.derive("bias").rng();
        let bias = (0..n).map(|_| cfg.bias_scale * rng.gen_range(-1.0..1.0)).collect();
        EsnModel::from_parts(w_in, w, bias, output_dim, cfg.aperture, cfg.ridge, cfg.washout)
    }

    /// Model with explicit weights and nothing loaded.
    pub fn from_parts(
        w_in: Mat,
        w: Mat,
        bias: Vec<f64>,
        output_dim: usize,
        aperture: f64,
        ridge: f64,
        washout: usize,
    ) -> Result<EsnModel, CesnError> {
        let n = w.rows();
        if w.cols() != n || w_in.rows() != n || bias.len() != n {
            return Err(CesnError::Dimension(format!(
                "reservoir {:?}, input {:?}, bias {}",
                w.shape(),
                w_in.shape(),
                bias.len()
            )));
        }
        if !(aperture > 0.0) || !(ridge >= 0.0) {
            return Err(CesnError::Config(format!("aperture {aperture}, ridge {ridge}")));
        }
        Ok(EsnModel {
            w_in,
            w,
            bias,
            w_out: None,
            d: Mat::zeros(n, n),
            conceptors: Vec::new(),
            output_dim,
            aperture,
            ridge,
            washout,
            state: vec![0.0; n],
            union: Conceptor::zero(n, aperture),
            train_states: Vec::new(),
            train_targets: Vec::new(),
        })
    }

    pub(super) fn restore(&mut self, d: Mat, conceptors: Vec<Conceptor>, w_out: Option<Mat>) -> Result<(), CesnError> {
        let n = self.size();
        let mut r_sum = Mat::zeros(n, n);
        for c in &conceptors {
            r_sum = &r_sum + &c.correlation();
        }
        self.union = Conceptor::from_correlation(r_sum, self.aperture);
        self.d = d;
        self.conceptors = conceptors;
        self.w_out = w_out;
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.w.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_in.cols()
    }

    pub fn is_trained(&self) -> bool {
        self.w_out.is_some()
    }

    /// Fraction of reservoir space no loaded pattern occupies.
    pub fn quota(&self) -> f64 {
        1.0 - self.union.m.trace() / self.size() as f64
    }

    fn check_input(&self, x: &[f64]) -> Result<(), CesnError> {
        if x.len() != self.input_dim() {
            return Err(CesnError::Dimension(format!("input length {} != {}", x.len(), self.input_dim())));
        }
        Ok(())
    }

    fn step(&self, v: &DVector<f64>, x: &[f64]) -> DVector<f64> {
        let mut pre = &self.w.0 * v + &self.w_in.0 * DVector::from_column_slice(x);
        for (p, b) in pre.iter_mut().zip(&self.bias) {
            *p = (*p + b).tanh();
        }
        pre
    }

    /// Reservoir states v_1..v_T for the inputs, starting from `v0`.
    pub fn drive(&self, inputs: &[Vec<f64>], v0: &[f64]) -> Result<Vec<Vec<f64>>, CesnError> {
        if v0.len() != self.size() {
            return Err(CesnError::Dimension(format!("state length {} != {}", v0.len(), self.size())));
        }
        let mut v = DVector::from_column_slice(v0);
        let mut out = Vec::with_capacity(inputs.len());
        for x in inputs {
            self.check_input(x)?;
            v = self.step(&v, x);
            out.push(v.as_slice().to_vec());
        }
        Ok(out)
    }

    /// Drives the pattern from a zero state, drops the washout and loads
    /// what remains.
    pub fn load_pattern(&mut self, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<LoadReport, CesnError> {
        if inputs.len() != targets.len() {
            return Err(CesnError::Dimension(format!("{} inputs, {} targets", inputs.len(), targets.len())));
        }
        if inputs.len() <= self.washout {
            return Err(CesnError::Dimension(format!(
                "pattern of {} steps does not outlast the {}-step washout",
                inputs.len(),
                self.washout
            )));
        }
        let n = self.size();
        let states = self.drive(inputs, &vec![0.0; n])?;
        let keep = self.washout..inputs.len();
        let prev: Vec<Vec<f64>> =
            keep.clone().map(|t| if t == 0 { vec![0.0; n] } else { states[t - 1].clone() }).collect();
        let cur: Vec<Vec<f64>> = keep.clone().map(|t| states[t].clone()).collect();
        let xs: Vec<Vec<f64>> = keep.clone().map(|t| inputs[t].clone()).collect();
        let ys: Vec<Vec<f64>> = keep.map(|t| targets[t].clone()).collect();
        self.load_states(
            &Mat::from_columns(n, &prev),
            &Mat::from_columns(n, &cur),
            &Mat::from_columns(self.input_dim(), &xs),
            &Mat::from_columns(self.output_dim, &ys),
        )
    }

    /// Loads a pattern from states already collected by the caller. All
    /// matrices hold one time step per column: `prev` are the states each
    /// step started from, `states` the states it produced under `inputs`.
    pub fn load_states(
        &mut self,
        prev: &Mat,
        states: &Mat,
        inputs: &Mat,
        targets: &Mat,
    ) -> Result<LoadReport, CesnError> {
        let n = self.size();
        let len = states.cols();
        if len == 0
            || prev.shape() != (n, len)
            || states.rows() != n
            || inputs.shape() != (self.input_dim(), len)
            || targets.shape() != (self.output_dim, len)
        {
            return Err(CesnError::Dimension(format!(
                "load shapes prev {:?} states {:?} inputs {:?} targets {:?}",
                prev.shape(),
                states.shape(),
                inputs.shape(),
                targets.shape()
            )));
        }
        let quota_before = self.quota();
        if quota_before <= tol::QUOTA_EXHAUSTED {
            return Err(CesnError::QuotaExhausted { quota: quota_before });
        }
        let l = len as f64;
        let a = self.aperture.powi(-2);
        let free = &Mat::identity(n) - &self.union.m;
        let s = &free * prev;
        let t = &(&self.w_in * inputs) - &(&self.d * prev);
        let mut gram = (&s * &s.transpose()).scale(1.0 / l);
        for i in 0..n {
            gram[(i, i)] += a;
        }
        let d_inc = (&(&pinv_default(&gram) * &s) * &t.transpose()).scale(1.0 / l).transpose();
        self.d = &self.d + &d_inc;

        let c = compute_conceptor(states, self.aperture);
        let r = c.r.clone().expect("fresh conceptor keeps its correlation");
        let r_sum = &self.union.correlation() + &r;
        self.union = Conceptor::from_correlation(r_sum, self.aperture);
        self.conceptors.push(c);
        self.train_states.push(states.clone());
        self.train_targets.push(targets.clone());
        Ok(LoadReport { pattern: self.conceptors.len() - 1, quota_before, quota_after: self.quota() })
    }

    /// Fits the readout jointly on every pattern loaded since construction.
    pub fn train_readout(&mut self) -> Result<(), CesnError> {
        if self.train_states.is_empty() {
            return Err(CesnError::NoPatterns);
        }
        let v = hcat(&self.train_states);
        let y = hcat(&self.train_targets);
        self.w_out = Some(ridge_readout(&v, &y, self.ridge)?);
        Ok(())
    }

    /// Drops buffered training data once the readout is final.
    pub fn finish_training(&mut self) {
        self.train_states.clear();
        self.train_targets.clear();
    }

    fn readout(&self, v: &DVector<f64>) -> Result<Vec<f64>, CesnError> {
        let w_out = self.w_out.as_ref().ok_or(CesnError::Untrained)?;
        Ok((&w_out.0 * v).as_slice().to_vec())
    }

    fn conceptor(&self, index: usize) -> Result<&Conceptor, CesnError> {
        self.conceptors.get(index).ok_or(CesnError::PatternIndex { index, count: self.conceptors.len() })
    }

    /// Autonomous run with the input replaced by D and the state filtered by
    /// the pattern's conceptor: v ← C·tanh(Wv + Dv + b), y = W_out v.
    pub fn recall(&self, pattern: usize, steps: usize) -> Result<Vec<Vec<f64>>, CesnError> {
        let c = &self.conceptor(pattern)?.m.0;
        if self.w_out.is_none() {
            return Err(CesnError::Untrained);
        }
        let wd = &self.w.0 + &self.d.0;
        let bias = DVector::from_column_slice(&self.bias);
        let mut v = c * DVector::from_element(self.size(), 0.5);
        let mut out = Vec::with_capacity(steps);
        for k in 0..RECALL_WARMUP + steps {
            let pre = (&wd * &v + &bias).map(f64::tanh);
            v = c * pre;
            if k >= RECALL_WARMUP {
                out.push(self.readout(&v)?);
            }
        }
        Ok(out)
    }

    /// State reached under a constant input, optionally filtered by a
    /// pattern's conceptor.
    fn settled_state(&self, input: &[f64], pattern: Option<usize>) -> Result<DVector<f64>, CesnError> {
        self.check_input(input)?;
        let c = pattern.map(|p| self.conceptor(p)).transpose()?;
        let mut v = DVector::zeros(self.size());
        for _ in 0..RECALL_WARMUP.max(self.washout) {
            v = self.step(&v, input);
            if let Some(c) = c {
                v = &c.m.0 * v;
            }
        }
        Ok(v)
    }

    /// Request probabilities under a context: readout clipped at zero and
    /// normalized, uniform when nothing survives the clip.
    pub fn predict_request_distribution(&self, context: &[f64], pattern: Option<usize>) -> Result<Vec<f64>, CesnError> {
        let v = self.settled_state(context, pattern)?;
        let y = self.readout(&v)?;
        Ok(to_distribution(&y))
    }

    /// Future positions after driving through `history`. The readout stacks
    /// the x coordinates of every step before the y coordinates, both
    /// divided by `radius`.
    pub fn predict_locations(
        &self,
        history: &[Vec<f64>],
        radius: f64,
        pattern: Option<usize>,
    ) -> Result<Vec<Point2>, CesnError> {
        if history.is_empty() {
            return Err(CesnError::Dimension("empty mobility history".into()));
        }
        let states = self.drive(history, &vec![0.0; self.size()])?;
        let mut v = DVector::from_column_slice(states.last().expect("nonempty history"));
        if let Some(p) = pattern {
            v = &self.conceptor(p)?.m.0 * v;
        }
        let y = self.readout(&v)?;
        let h = self.output_dim / 2;
        Ok((0..h).map(|k| Point2::new(y[k] * radius, y[h + k] * radius).clamp_to_disk(radius)).collect())
    }
}

fn to_distribution(y: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = y.iter().map(|v| if v.is_finite() { v.max(0.0) } else { 0.0 }).collect();
    let total: f64 = clipped.iter().sum();
    if total > 0.0 {
        clipped.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / y.len() as f64; y.len()]
    }
}

fn hcat(parts: &[Mat]) -> Mat {
    let rows = parts[0].rows();
    let cols = parts.iter().map(Mat::cols).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.columns_mut(at, p.cols()).copy_from(&p.0);
        at += p.cols();
    }
    Mat(out)
}

/// W_out = Y Vᵀ (V Vᵀ + λ²I)⁻¹ with states and targets as columns.
pub fn ridge_readout(states: &Mat, targets: &Mat, ridge: f64) -> Result<Mat, CesnError> {
    if states.cols() != targets.cols() || states.cols() == 0 {
        return Err(CesnError::Dimension(format!(
            "{} state columns, {} target columns",
            states.cols(),
            targets.cols()
        )));
    }
    let n = states.rows();
    let mut gram = states * &states.transpose();
    for i in 0..n {
        gram[(i, i)] += ridge * ridge;
    }
    let gram = gram.symmetrized();
    let rhs = states * &targets.transpose();
    let x = match solve_spd(&gram, &rhs) {
        Ok(x) => x,
        Err(NumericsError::NotPositiveDefinite { .. }) => &pinv_default(&gram) * &rhs,
        Err(e) => return Err(e.into()),
    };
    Ok(x.transpose())
}
