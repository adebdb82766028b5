//! Discrete states, the lattice-translation group, the auxiliary seminorm and
//! the orbit distance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::par;

/// Which dynamical system a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelTag {
    /// Nonlinear Schrödinger: one complex field `ψ`.
    Nls,
    /// Nonlinear wave: complex pair `(ψ, φ = ∂_t ψ)`.
    Nwe,
    /// Nonlinear beam: real pair `(u, v = ∂_t u)`, 1D only.
    Nbe,
}

impl ModelTag {
    pub fn component_names(self) -> &'static [&'static str] {
        match self {
            ModelTag::Nls => &["psi"],
            ModelTag::Nwe => &["psi", "phi"],
            ModelTag::Nbe => &["u", "v"],
        }
    }

    pub fn is_complex(self) -> bool {
        !matches!(self, ModelTag::Nbe)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::Nls => "NLS",
            ModelTag::Nwe => "NWE",
            ModelTag::Nbe => "NBE",
        }
    }
}

/// Samples of one component.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::Real(v) => v.len(),
            Samples::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn all_finite(&self) -> bool {
        match self {
            Samples::Real(v) => v.iter().all(|x| x.is_finite()),
            Samples::Complex(v) => v.iter().all(|x| x.re.is_finite() && x.im.is_finite()),
        }
    }

    /// Complex view (real samples get a zero imaginary part).
    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            Samples::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            Samples::Complex(v) => v.clone(),
        }
    }

    /// Pointwise squared modulus.
    pub fn modulus_sq(&self) -> Vec<f64> {
        match self {
            Samples::Real(v) => v.iter().map(|x| x * x).collect(),
            Samples::Complex(v) => v.iter().map(|x| x.norm_sqr()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Samples::Real(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Samples::Complex(v) => v.iter().fold(0.0, |m, x| m.max(x.norm())),
        }
    }

    fn same_kind(&self, other: &Samples) -> bool {
        matches!((self, other), (Samples::Real(_), Samples::Real(_)) | (Samples::Complex(_), Samples::Complex(_)))
    }

    /// `Re Σ a conj(b)`.
    fn dot_sum(&self, other: &Samples) -> f64 {
        match (self, other) {
            (Samples::Real(a), Samples::Real(b)) => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            (Samples::Complex(a), Samples::Complex(b)) => {
                a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
            }
            _ => unreachable!("component kinds checked by caller"),
        }
    }

    fn axpy(&mut self, alpha: f64, other: &Samples) {
        match (self, other) {
            (Samples::Real(a), Samples::Real(b)) => a.iter_mut().zip(b).for_each(|(x, y)| *x += alpha * y),
            (Samples::Complex(a), Samples::Complex(b)) => a.iter_mut().zip(b).for_each(|(x, y)| *x += y * alpha),
            _ => unreachable!("component kinds checked by caller"),
        }
    }

    fn scale(&mut self, alpha: f64) {
        match self {
            Samples::Real(a) => a.iter_mut().for_each(|x| *x *= alpha),
            Samples::Complex(a) => a.iter_mut().for_each(|x| *x *= alpha),
        }
    }

    fn shifted(&self, grid: &Grid, z: &[i64]) -> Samples {
        fn shift<T: Copy>(grid: &Grid, data: &[T], z: &[i64]) -> Vec<T> {
            let n = grid.n();
            let strides = grid.strides();
            let mut out = data.to_vec();
            for (flat, &value) in data.iter().enumerate() {
                let idx = grid.unravel(flat);
                let mut dest = 0;
                for a in 0..n.len() {
                    let na = n[a] as i64;
                    let j = (idx[a] as i64 + z[a]).rem_euclid(na) as usize;
                    dest += j * strides[a];
                }
                out[dest] = value;
            }
            out
        }
        match self {
            Samples::Real(v) => Samples::Real(shift(grid, v, z)),
            Samples::Complex(v) => Samples::Complex(shift(grid, v, z)),
        }
    }
}

/// A model-tagged state on a grid. Immutable once built; every operation
/// returns a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    model: ModelTag,
    grid: Grid,
    components: Vec<Samples>,
}

impl FieldState {
    /// Builds a state, checking the component layout and finiteness.
    pub fn new(model: ModelTag, grid: Grid, components: Vec<Samples>) -> Result<Self> {
        let expected = model.component_names().len();
        if components.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "{} expects {expected} components, got {}",
                model.as_str(),
                components.len()
            )));
        }
        if model == ModelTag::Nbe && grid.dim() != 1 {
            return Err(Error::InvalidGrid("the beam model is one-dimensional".into()));
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::GridMismatch);
            }
            let kind_ok = match c {
                Samples::Real(_) => !model.is_complex(),
                Samples::Complex(_) => model.is_complex(),
            };
            if !kind_ok {
                return Err(Error::InvalidParameter(format!(
                    "{} components must be {}",
                    model.as_str(),
                    if model.is_complex() { "complex" } else { "real" }
                )));
            }
            if !c.all_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(FieldState { model, grid, components })
    }

    pub fn nls(grid: Grid, psi: Vec<Complex64>) -> Result<Self> {
        FieldState::new(ModelTag::Nls, grid, vec![Samples::Complex(psi)])
    }

    pub fn nwe(grid: Grid, psi: Vec<Complex64>, phi: Vec<Complex64>) -> Result<Self> {
        FieldState::new(ModelTag::Nwe, grid, vec![Samples::Complex(psi), Samples::Complex(phi)])
    }

    pub fn nbe(grid: Grid, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        FieldState::new(ModelTag::Nbe, grid, vec![Samples::Real(u), Samples::Real(v)])
    }

    pub fn zeros(model: ModelTag, grid: Grid) -> Result<Self> {
        let n = grid.len();
        let comps = (0..model.component_names().len())
            .map(|_| {
                if model.is_complex() {
                    Samples::Complex(vec![Complex64::new(0.0, 0.0); n])
                } else {
                    Samples::Real(vec![0.0; n])
                }
            })
            .collect();
        FieldState::new(model, grid, comps)
    }

    pub(crate) fn from_parts_unchecked(model: ModelTag, grid: Grid, components: Vec<Samples>) -> Self {
        FieldState { model, grid, components }
    }

    pub fn model(&self) -> ModelTag {
        self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> &[Samples] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Samples> {
        self.components
    }

    /// Complex samples of component `i`, if the model is complex.
    pub fn complex(&self, i: usize) -> Option<&[Complex64]> {
        match self.components.get(i)? {
            Samples::Complex(v) => Some(v),
            Samples::Real(_) => None,
        }
    }

    /// Real samples of component `i`, if the model is real.
    pub fn real(&self, i: usize) -> Option<&[f64]> {
        match self.components.get(i)? {
            Samples::Real(v) => Some(v),
            Samples::Complex(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(Samples::all_finite)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.max_abs() == 0.0)
    }

    pub fn compatible(&self, other: &FieldState) -> bool {
        self.model == other.model && self.grid == other.grid
    }

    fn check_compatible(&self, other: &FieldState) -> Result<()> {
        if self.compatible(other) && self.components.iter().zip(&other.components).all(|(a, b)| a.same_kind(b)) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Real L² inner product `Re ∫ a · conj(b) dx`, summed over components.
    pub fn dot(&self, other: &FieldState) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self.components.iter().zip(&other.components).map(|(a, b)| a.dot_sum(b)).sum();
        Ok(self.grid.cell_volume() * s)
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).map(f64::sqrt).unwrap_or(f64::NAN)
    }

    /// `self + alpha · other`.
    pub fn add_scaled(&self, alpha: f64, other: &FieldState) -> Result<FieldState> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(&other.components) {
            a.axpy(alpha, b);
        }
        Ok(out)
    }

    pub fn scaled(&self, alpha: f64) -> FieldState {
        let mut out = self.clone();
        out.components.iter_mut().for_each(|c| c.scale(alpha));
        out
    }

    /// Multiplies one component by a real factor.
    pub fn with_component_scaled(&self, index: usize, alpha: f64) -> FieldState {
        let mut out = self.clone();
        out.components[index].scale(alpha);
        out
    }

    /// Global phase rotation `e^{iθ} u` (identity for real models).
    pub fn phase_rotated(&self, theta: f64) -> FieldState {
        let mut out = self.clone();
        let rot = Complex64::from_polar(1.0, theta);
        for c in out.components.iter_mut() {
            if let Samples::Complex(v) = c {
                v.iter_mut().for_each(|x| *x *= rot);
            }
        }
        out
    }

    /// Lattice translation `(g_z u)(x) = u(x - z h)`: an exact circular shift.
    pub fn translate(&self, shift: &LatticeShift) -> FieldState {
        assert_eq!(shift.z.len(), self.grid.dim(), "shift dimension mismatch");
        let components = self.components.iter().map(|c| c.shifted(&self.grid, &shift.z)).collect();
        FieldState { model: self.model, grid: self.grid.clone(), components }
    }

    /// Spectral weight of component `i` in the phase-space norm.
    pub(crate) fn x_weight(&self, component: usize, flat: usize) -> f64 {
        let ksq = self.grid.k_squared()[flat];
        match (self.model, component) {
            (ModelTag::Nls, _) | (ModelTag::Nwe, 0) => 1.0 + ksq,
            (ModelTag::Nbe, 0) => 1.0 + ksq * ksq,
            _ => 1.0,
        }
    }

    /// Applies a real Fourier multiplier `m(component, flat_index)` to every
    /// component.
    pub(crate) fn map_spectral<M>(&self, multiplier: M) -> FieldState
    where
        M: Fn(usize, usize) -> f64,
    {
        let grid = &self.grid;
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| match c {
                Samples::Real(v) => Samples::Real(grid.apply_multiplier_real(v, |k| Complex64::new(multiplier(i, k), 0.0))),
                Samples::Complex(v) => Samples::Complex(grid.apply_multiplier(v, |k| Complex64::new(multiplier(i, k), 0.0))),
            })
            .collect();
        FieldState { model: self.model, grid: grid.clone(), components }
    }

    /// Phase-space norm: `(∫ |∇ψ|² + |ψ|²)^{1/2}` (NLS),
    /// `(∫ |φ|² + |∇ψ|² + |ψ|²)^{1/2}` (NWE), `(∫ v² + u_xx² + u²)^{1/2}` (NBE).
    pub fn x_norm(&self) -> f64 {
        self.x_norm_sq().sqrt()
    }

    pub fn x_norm_sq(&self) -> f64 {
        self.components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let spec = self.grid.to_spectral(&c.to_complex());
                self.grid.spectral_quadratic(&spec, |k| self.x_weight(i, k))
            })
            .sum()
    }

    /// Auxiliary seminorm: `sup_z (∫_{B_1(z)} |ψ|²)^{1/2}` over grid points
    /// for NLS/NWE, `max |u|` for NBE.
    pub fn sharp_seminorm(&self) -> Result<f64> {
        if self.model == ModelTag::Nbe {
            return Ok(self.components[0].max_abs());
        }
        let offsets = unit_ball_offsets(&self.grid)?;
        let density = self.components[0].modulus_sq();
        let grid = &self.grid;
        let dim = grid.dim();
        let n = grid.n();
        let strides = grid.strides();
        let best = par::max_range(grid.len(), |center| {
            let idx = grid.unravel(center);
            let mut acc = 0.0;
            for off in &offsets {
                let mut flat = 0;
                for a in 0..dim {
                    let j = (idx[a] as i64 + off[a]).rem_euclid(n[a] as i64) as usize;
                    flat += j * strides[a];
                }
                acc += density[flat];
            }
            acc
        });
        Ok((grid.cell_volume() * best.max(0.0)).sqrt())
    }
}

/// Grid offsets within periodic Euclidean distance 1 of the origin.
pub fn unit_ball_offsets(grid: &Grid) -> Result<Vec<[i64; 3]>> {
    if grid.box_length().iter().any(|&l| l <= 2.0) {
        return Err(Error::InvalidGrid("unit ball wraps around a box side of length <= 2".into()));
    }
    let h = grid.spacing();
    let dim = grid.dim();
    let reach: Vec<i64> = h.iter().map(|hi| (1.0 / hi).floor() as i64).collect();
    let mut out = Vec::new();
    let range = |a: usize| if a < dim { -reach[a]..=reach[a] } else { 0..=0 };
    for i in range(0) {
        for j in range(1) {
            for k in range(2) {
                let o = [i, j, k];
                let r2: f64 = (0..dim).map(|a| (o[a] as f64 * h[a]).powi(2)).sum();
                if r2 <= 1.0 + 1e-12 {
                    out.push(o);
                }
            }
        }
    }
    Ok(out)
}

/// Element of the lattice-translation group, in grid points per axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeShift {
    pub z: Vec<i64>,
}

impl LatticeShift {
    pub fn new(z: Vec<i64>) -> Self {
        LatticeShift { z }
    }

    /// Representative with every component reduced into `[0, n_i)`.
    pub fn reduced(&self, grid: &Grid) -> LatticeShift {
        LatticeShift { z: self.z.iter().zip(grid.n()).map(|(&z, &n)| z.rem_euclid(n as i64)).collect() }
    }

    pub fn compose(&self, other: &LatticeShift) -> LatticeShift {
        LatticeShift { z: self.z.iter().zip(&other.z).map(|(a, b)| a + b).collect() }
    }

    pub fn inverse(&self) -> LatticeShift {
        LatticeShift { z: self.z.iter().map(|a| -a).collect() }
    }
}

pub fn translate(state: &FieldState, shift: &LatticeShift) -> FieldState {
    state.translate(shift)
}

/// Best group element aligning `b` onto `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitAlignment {
    pub distance: f64,
    pub shift: LatticeShift,
    /// Optimal global phase (always 0 for the real beam model).
    pub phase: f64,
}

impl OrbitAlignment {
    /// Applies the aligning group element to `b`.
    pub fn apply(&self, b: &FieldState) -> FieldState {
        b.translate(&self.shift).phase_rotated(self.phase)
    }
}

/// Number of correlation maxima re-evaluated directly.
const CANDIDATES: usize = 3;

/// `min_{z, θ} ‖a − e^{iθ} g_z b‖_X` over all grid shifts (and the global
/// phase for the complex models).
///
/// All shifts are scored at once through the FFT cross-correlation of the
/// phase-space inner product; the best few are then re-evaluated directly to
/// avoid the cancellation in `‖a‖² + ‖b‖² − 2|⟨a, g_z b⟩|`.
pub fn orbit_alignment(a: &FieldState, b: &FieldState) -> Result<OrbitAlignment> {
    a.check_compatible(b)?;
    let grid = a.grid();
    let mut corr = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 0..a.components.len() {
        let ah = grid.to_spectral(&a.components[i].to_complex());
        let bh = grid.to_spectral(&b.components[i].to_complex());
        for (k, slot) in corr.iter_mut().enumerate() {
            *slot += ah[k] * bh[k].conj() * a.x_weight(i, k);
        }
    }
    grid.ifft(&mut corr);

    let complex = a.model.is_complex();
    let score = |c: &Complex64| if complex { c.norm() } else { c.re };
    let mut order: Vec<usize> = (0..corr.len()).collect();
    order.sort_by(|&i, &j| score(&corr[j]).total_cmp(&score(&corr[i])).then(i.cmp(&j)));

    let mut best: Option<OrbitAlignment> = None;
    for &flat in order.iter().take(CANDIDATES) {
        let idx = grid.unravel(flat);
        let shift = LatticeShift::new((0..grid.dim()).map(|d| idx[d] as i64).collect());
        let phase = if complex && corr[flat].norm() > 0.0 { corr[flat].arg() } else { 0.0 };
        let candidate = OrbitAlignment { distance: 0.0, shift, phase };
        let moved = candidate.apply(b);
        let distance = a.add_scaled(-1.0, &moved)?.x_norm();
        if best.as_ref().is_none_or(|bst| distance < bst.distance) {
            best = Some(OrbitAlignment { distance, ..candidate });
        }
    }
    Ok(best.expect("grid has at least one point"))
}

pub fn orbit_distance(a: &FieldState, b: &FieldState) -> Result<f64> {
    orbit_alignment(a, b).map(|al| al.distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bump_state(grid: &Grid, center: f64) -> FieldState {
        let psi = grid.sample(|x| {
            let r2 = (x[0] - center).powi(2) + x[1].powi(2) + x[2].powi(2);
            Complex64::new((-r2).exp(), 0.5 * (-(r2) * 2.0).exp() * x[0].sin())
        });
        FieldState::nls(grid.clone(), psi).unwrap()
    }

    #[test]
    fn rejects_bad_layouts() {
        let g = Grid::line(32, 10.0).unwrap();
        assert!(FieldState::new(ModelTag::Nls, g.clone(), vec![]).is_err());
        assert!(FieldState::nbe(g.clone(), vec![0.0; 31], vec![0.0; 32]).is_err());
        assert!(matches!(
            FieldState::nls(g.clone(), vec![Complex64::new(f64::NAN, 0.0); 32]),
            Err(Error::NonFinite)
        ));
        let g2 = Grid::new(&[16, 16], &[4.0, 4.0]).unwrap();
        assert!(FieldState::nbe(g2, vec![0.0; 256], vec![0.0; 256]).is_err());
    }

    #[test]
    fn translation_group_laws() {
        let g = Grid::new(&[32, 16], &[8.0, 6.0]).unwrap();
        let s = bump_state(&g, 0.7);
        let full = LatticeShift::new(vec![32, -16]);
        assert_eq!(s.translate(&full), s);
        let z = LatticeShift::new(vec![5, -3]);
        assert_eq!(s.translate(&z).translate(&z.inverse()), s);
        let z2 = LatticeShift::new(vec![-11, 7]);
        assert_eq!(s.translate(&z).translate(&z2), s.translate(&z.compose(&z2)));
        assert_eq!(z.compose(&z2).reduced(&g).z, vec![26, 4]);
    }

    #[test]
    fn translation_moves_samples_forward() {
        let g = Grid::line(16, 4.0).unwrap();
        let mut u = vec![0.0; 16];
        u[3] = 1.0;
        let s = FieldState::nbe(g, u, vec![0.0; 16]).unwrap();
        let t = s.translate(&LatticeShift::new(vec![2]));
        assert_eq!(t.real(0).unwrap()[5], 1.0);
    }

    #[test]
    fn sharp_of_zero_and_bump() {
        let g = Grid::line(1024, 40.0).unwrap();
        let zero = FieldState::zeros(ModelTag::Nls, g.clone()).unwrap();
        assert_eq!(zero.sharp_seminorm().unwrap(), 0.0);

        // narrow bump well inside one unit ball
        let sigma = 0.1;
        let psi = g.sample(|x| Complex64::new((-(x[0] * x[0]) / (2.0 * sigma * sigma)).exp() * 3.0, 0.0));
        let s = FieldState::nls(g.clone(), psi).unwrap();
        let mass = g.integrate(&s.components()[0].modulus_sq());
        // independent oracle: direct summation over the mask around the peak
        let h = g.spacing()[0];
        let center = 512usize;
        let reach = (1.0 / h).floor() as usize;
        let density = s.components()[0].modulus_sq();
        let direct: f64 = (center - reach..=center + reach).map(|j| density[j]).sum::<f64>() * h;
        assert!((direct - mass).abs() < 1e-12 * mass);
        assert!((s.sharp_seminorm().unwrap() - mass.sqrt()).abs() <= 1e-6);
    }

    #[test]
    fn sharp_of_beam_is_sup_norm() {
        let g = Grid::line(128, 20.0).unwrap();
        let u = g.sample(|x| 3.0 * (-(x[0] * x[0]) * 4.0).exp());
        let v = g.sample(|x| x[0].sin() * 10.0);
        let s = FieldState::nbe(g, u, v).unwrap();
        assert!((s.sharp_seminorm().unwrap() - 3.0).abs() <= 1e-12);
    }

    #[test]
    fn sharp_rejects_small_boxes() {
        let g = Grid::line(16, 2.0).unwrap();
        let s = FieldState::zeros(ModelTag::Nls, g).unwrap();
        assert!(s.sharp_seminorm().is_err());
    }

    #[test]
    fn ball_offsets_2d_count() {
        let g = Grid::new(&[64, 64], &[16.0, 16.0]).unwrap();
        let offsets = unit_ball_offsets(&g).unwrap();
        // lattice points of Z² with |p| ≤ 4
        let expected = (-4i64..=4).flat_map(|i| (-4i64..=4).map(move |j| (i, j))).filter(|(i, j)| i * i + j * j <= 16).count();
        assert_eq!(offsets.len(), expected);
    }

    #[test]
    fn orbit_distance_basic_cases() {
        let g = Grid::line(128, 20.0).unwrap();
        let s = bump_state(&g, 1.3);
        let shifted = s.translate(&LatticeShift::new(vec![17]));
        assert!(orbit_distance(&s, &shifted).unwrap() <= 1e-12);
        let rotated = s.phase_rotated(PI / 3.0);
        assert!(orbit_distance(&s, &rotated).unwrap() <= 1e-12);
        let zero = FieldState::zeros(ModelTag::Nls, g.clone()).unwrap();
        let d = orbit_distance(&s, &zero).unwrap();
        assert!((d - s.x_norm()).abs() <= 1e-12 * s.x_norm());
        assert_eq!(orbit_distance(&s, &s).unwrap(), 0.0);
    }

    #[test]
    fn orbit_distance_is_symmetric() {
        let g = Grid::new(&[32, 32], &[10.0, 10.0]).unwrap();
        let a = bump_state(&g, 0.0);
        let b = bump_state(&g, 2.2).phase_rotated(0.4).scaled(1.3);
        let dab = orbit_distance(&a, &b).unwrap();
        let dba = orbit_distance(&b, &a).unwrap();
        assert!((dab - dba).abs() <= 1e-10);
        assert!(dab > 0.1);
    }

    #[test]
    fn orbit_distance_beam_has_no_phase() {
        let g = Grid::line(64, 12.0).unwrap();
        let u = g.sample(|x| (-(x[0] * x[0])).exp());
        let a = FieldState::nbe(g.clone(), u.clone(), vec![0.0; 64]).unwrap();
        let b = FieldState::nbe(g, u.iter().map(|x| -x).collect(), vec![0.0; 64]).unwrap();
        // brute-force oracle over every shift, no phase freedom
        let d = orbit_distance(&a, &b).unwrap();
        let brute = (0..64)
            .map(|z| a.add_scaled(-1.0, &b.translate(&LatticeShift::new(vec![z]))).unwrap().x_norm())
            .fold(f64::INFINITY, f64::min);
        assert!((d - brute).abs() <= 1e-12 * brute);
        assert!(d < 2f64.sqrt() * a.x_norm() + 1e-9);
        assert!(orbit_distance(&a, &b.translate(&LatticeShift::new(vec![9]))).unwrap() > 0.1);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = FieldState::zeros(ModelTag::Nls, Grid::line(32, 10.0).unwrap()).unwrap();
        let b = FieldState::zeros(ModelTag::Nls, Grid::line(64, 10.0).unwrap()).unwrap();
        assert!(matches!(orbit_distance(&a, &b), Err(Error::GridMismatch)));
        let c = FieldState::zeros(ModelTag::Nwe, Grid::line(32, 10.0).unwrap()).unwrap();
        assert!(orbit_distance(&a, &c).is_err());
    }

    #[test]
    fn x_norm_matches_physical_resummation() {
        let g = Grid::line(128, 16.0).unwrap();
        let s = bump_state(&g, 0.4);
        let psi = s.complex(0).unwrap();
        let dpsi = g.derivative(psi, 0, 1).unwrap();
        let direct: f64 = g.integrate(&psi.iter().zip(&dpsi).map(|(p, d)| p.norm_sqr() + d.norm_sqr()).collect::<Vec<_>>());
        assert!((s.x_norm_sq() - direct).abs() <= 1e-12 * direct);
        assert!((s.scaled(2.0).x_norm() - 2.0 * s.x_norm()).abs() <= 1e-12 * s.x_norm());
    }
}
