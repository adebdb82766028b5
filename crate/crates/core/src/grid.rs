//! Uniform periodic grids and Fourier calculus on them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the total number of grid points.
pub const MAX_POINTS: usize = 1 << 22;

/// Serializable description of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: Vec<usize>,
    #[serde(rename = "L")]
    pub box_length: Vec<f64>,
}

struct Inner {
    n: Vec<usize>,
    lengths: Vec<f64>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    len: usize,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    /// Signed angular wavenumbers per axis, Nyquist kept (as -n/2).
    wavenumbers: Vec<Vec<f64>>,
    /// |k|^2 over the full spectral array.
    k_squared: Vec<f64>,
}

/// A uniform periodic box in dimension 1, 2 or 3.
///
/// Samples are stored row-major with the last axis fastest. Coordinates are
/// centred: `x_j = -L/2 + j h`, so the origin is the grid point `j = n/2`.
/// FFT plans are built once and shared between clones.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<Inner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.inner.n)
            .field("box_length", &self.inner.lengths)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n
                && self
                    .inner
                    .lengths
                    .iter()
                    .zip(&other.inner.lengths)
                    .all(|(a, b)| a.to_bits() == b.to_bits()))
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = GridSpec::deserialize(d)?;
        Grid::new(&spec.n, &spec.box_length).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<&GridSpec> for Grid {
    type Error = Error;
    fn try_from(spec: &GridSpec) -> Result<Self> {
        Grid::new(&spec.n, &spec.box_length)
    }
}

impl Grid {
    pub fn new(n: &[usize], box_length: &[f64]) -> Result<Self> {
        let dim = n.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if box_length.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{} box lengths for {} axes",
                box_length.len(),
                dim
            )));
        }
        for &ni in n {
            if ni < 16 || !ni.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "axis size {ni} must be a power of two >= 16"
                )));
            }
        }
        for &l in box_length {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("box length {l} must be positive")));
            }
        }
        let len = n.iter().try_fold(1usize, |acc, &ni| acc.checked_mul(ni));
        let len = match len {
            Some(len) if len <= MAX_POINTS => len,
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "total point count exceeds {MAX_POINTS}"
                )))
            }
        };

        let spacing: Vec<f64> = n.iter().zip(box_length).map(|(&ni, &l)| l / ni as f64).collect();
        let mut strides = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * n[a + 1];
        }

        let mut planner = FftPlanner::new();
        let forward = n.iter().map(|&ni| planner.plan_fft_forward(ni)).collect();
        let inverse = n.iter().map(|&ni| planner.plan_fft_inverse(ni)).collect();

        let wavenumbers: Vec<Vec<f64>> = n
            .iter()
            .zip(box_length)
            .map(|(&ni, &l)| {
                let base = 2.0 * PI / l;
                (0..ni)
                    .map(|j| {
                        let m = if j < ni / 2 { j as f64 } else { j as f64 - ni as f64 };
                        base * m
                    })
                    .collect()
            })
            .collect();

        let mut k_squared = vec![0.0; len];
        for (flat, ksq) in k_squared.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..dim {
                let j = (flat / strides[a]) % n[a];
                let k = wavenumbers[a][j];
                acc += k * k;
            }
            *ksq = acc;
        }

        Ok(Grid {
            inner: Arc::new(Inner {
                n: n.to_vec(),
                lengths: box_length.to_vec(),
                spacing,
                strides,
                len,
                forward,
                inverse,
                wavenumbers,
                k_squared,
            }),
        })
    }

    /// One-dimensional convenience constructor.
    pub fn line(n: usize, length: f64) -> Result<Self> {
        Grid::new(&[n], &[length])
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { n: self.inner.n.clone(), box_length: self.inner.lengths.clone() }
    }

    pub fn dim(&self) -> usize {
        self.inner.n.len()
    }

    pub fn n(&self) -> &[usize] {
        &self.inner.n
    }

    pub fn box_length(&self) -> &[f64] {
        &self.inner.lengths
    }

    pub fn spacing(&self) -> &[f64] {
        &self.inner.spacing
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.inner.lengths.iter().product()
    }

    pub fn strides(&self) -> &[usize] {
        &self.inner.strides
    }

    /// Centred coordinates along one axis.
    pub fn coords(&self, axis: usize) -> Vec<f64> {
        let h = self.inner.spacing[axis];
        let half = 0.5 * self.inner.lengths[axis];
        (0..self.inner.n[axis]).map(|j| j as f64 * h - half).collect()
    }

    /// Per-axis index of a flat sample position.
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for (a, slot) in idx.iter_mut().enumerate().take(self.dim()) {
            *slot = (flat / self.inner.strides[a]) % self.inner.n[a];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.inner.strides).map(|(i, s)| i * s).sum()
    }

    /// Position vector of a flat sample index (unused axes are zero).
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = idx[a] as f64 * self.inner.spacing[a] - 0.5 * self.inner.lengths[a];
        }
        x
    }

    /// Evaluates `f` at every grid point.
    pub fn sample<T, F: Fn([f64; 3]) -> T>(&self, f: F) -> Vec<T> {
        (0..self.len()).map(|i| f(self.position(i))).collect()
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.inner.wavenumbers[axis]
    }

    /// |k|^2 indexed like the spectral array.
    pub fn k_squared(&self) -> &[f64] {
        &self.inner.k_squared
    }

    /// Wavenumber of one axis at a flat spectral index, with the Nyquist mode
    /// zeroed so the odd-order multiplier stays real-preserving.
    fn k_odd(&self, axis: usize, flat: usize) -> f64 {
        let n = self.inner.n[axis];
        let j = (flat / self.inner.strides[axis]) % n;
        if j == n / 2 {
            0.0
        } else {
            self.inner.wavenumbers[axis][j]
        }
    }

    /// `∫ f dx` by the periodic trapezoid rule.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        self.cell_volume() * f.iter().sum::<f64>()
    }

    /// In-place unnormalized forward transform over all axes.
    pub fn fft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.forward);
    }

    /// In-place inverse transform, normalized so `ifft(fft(f)) == f`.
    pub fn ifft(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inverse);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len(), "buffer does not match grid");
        let dim = self.dim();
        for (a, plan) in plans.iter().enumerate().take(dim) {
            let n = self.inner.n[a];
            let stride = self.inner.strides[a];
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            let block = n * stride;
            for start in (0..self.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
    }

    pub fn to_spectral(&self, f: &[Complex64]) -> Vec<Complex64> {
        let mut out = f.to_vec();
        self.fft(&mut out);
        out
    }

    pub fn to_spectral_real(&self, f: &[f64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft(&mut out);
        out
    }

    /// Applies a Fourier multiplier given per flat spectral index.
    pub fn apply_multiplier<M>(&self, f: &[Complex64], multiplier: M) -> Vec<Complex64>
    where
        M: Fn(usize) -> Complex64,
    {
        let mut spec = self.to_spectral(f);
        for (i, v) in spec.iter_mut().enumerate() {
            *v *= multiplier(i);
        }
        self.ifft(&mut spec);
        spec
    }

    /// Real-input variant of [`Grid::apply_multiplier`]; the multiplier must be
    /// Hermitian-symmetric for the result to be real, and the imaginary
    /// roundoff is discarded.
    pub fn apply_multiplier_real<M>(&self, f: &[f64], multiplier: M) -> Vec<f64>
    where
        M: Fn(usize) -> Complex64,
    {
        let mut spec = self.to_spectral_real(f);
        for (i, v) in spec.iter_mut().enumerate() {
            *v *= multiplier(i);
        }
        self.ifft(&mut spec);
        spec.into_iter().map(|v| v.re).collect()
    }

    fn derivative_multiplier(&self, axis: usize, order: u32) -> Result<impl Fn(usize) -> Complex64 + '_> {
        if axis >= self.dim() {
            return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
        }
        if !matches!(order, 1 | 2 | 4) {
            return Err(Error::InvalidOrder(order));
        }
        Ok(move |flat: usize| {
            let n = self.inner.n[axis];
            let j = (flat / self.inner.strides[axis]) % n;
            let k = self.inner.wavenumbers[axis][j];
            match order {
                1 => Complex64::new(0.0, self.k_odd(axis, flat)),
                2 => Complex64::new(-k * k, 0.0),
                _ => Complex64::new(k * k * k * k, 0.0),
            }
        })
    }

    /// `∂^order f / ∂x_axis^order` by the Fourier multiplier `(ik)^order`.
    pub fn derivative(&self, f: &[Complex64], axis: usize, order: u32) -> Result<Vec<Complex64>> {
        let m = self.derivative_multiplier(axis, order)?;
        Ok(self.apply_multiplier(f, m))
    }

    pub fn derivative_real(&self, f: &[f64], axis: usize, order: u32) -> Result<Vec<f64>> {
        let m = self.derivative_multiplier(axis, order)?;
        Ok(self.apply_multiplier_real(f, m))
    }

    /// Spectral Laplacian (sum of second derivatives over all axes).
    pub fn laplacian(&self, f: &[Complex64]) -> Vec<Complex64> {
        let ksq = self.k_squared();
        self.apply_multiplier(f, |i| Complex64::new(-ksq[i], 0.0))
    }

    pub fn laplacian_real(&self, f: &[f64]) -> Vec<f64> {
        let ksq = self.k_squared();
        self.apply_multiplier_real(f, |i| Complex64::new(-ksq[i], 0.0))
    }

    /// `∫ w(k) |f̂(k)|^2` written back in physical units: for a spectral array
    /// `spec = fft(f)`, returns `dV / N · Σ_k w(k) |spec_k|^2`.
    pub fn spectral_quadratic<W>(&self, spec: &[Complex64], weight: W) -> f64
    where
        W: Fn(usize) -> f64,
    {
        let sum: f64 = spec.iter().enumerate().map(|(i, v)| weight(i) * v.norm_sqr()).sum();
        self.cell_volume() * sum / self.len() as f64
    }

    /// `Re ∫ w(k) â(k) conj(b̂(k))` in physical units.
    pub fn spectral_inner<W>(&self, a: &[Complex64], b: &[Complex64], weight: W) -> f64
    where
        W: Fn(usize) -> f64,
    {
        let sum: f64 = a
            .iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| weight(i) * (x * y.conj()).re)
            .sum();
        self.cell_volume() * sum / self.len() as f64
    }

    /// First-derivative wavenumber along `axis` at a spectral index, Nyquist zeroed.
    pub fn k_first(&self, axis: usize, flat: usize) -> f64 {
        self.k_odd(axis, flat)
    }
}
