//! Seeded randomness.
//!
//! Every stage draws from its own SplitMix64 stream whose seed is the run seed
//! xor a 64-bit FNV-1a hash of the stage name, so adding draws to one stage
//! never shifts another.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::SplitMix64;

use crate::field::{FieldState, ModelTag, Samples};
use crate::grid::Grid;

pub type StreamRng = SplitMix64;

/// 64-bit FNV-1a.
pub fn stage_hash(stage: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    stage.bytes().fold(OFFSET, |h, b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// Independent generator for a named stage of a run.
pub fn stream(seed: u64, stage: &str) -> StreamRng {
    SplitMix64::seed_from_u64(seed ^ stage_hash(stage))
}

fn normal_c(rng: &mut StreamRng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random field whose Fourier coefficients are independent complex normals
/// on `|k| <= k_max` and zero elsewhere. The result has unit L² norm.
pub fn band_limited_complex(grid: &Grid, k_max: f64, rng: &mut StreamRng) -> Vec<Complex64> {
    let ksq = grid.k_squared();
    let mut spec: Vec<Complex64> = ksq
        .iter()
        .map(|&k2| {
            // draw unconditionally so the stream position does not depend on k_max
            let z = normal_c(rng);
            if k2 <= k_max * k_max {
                z
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    grid.ifft(&mut spec);
    normalize(grid, &mut spec);
    spec
}

fn normalize(grid: &Grid, f: &mut [Complex64]) {
    let norm = grid.integrate(&f.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>()).sqrt();
    if norm > 0.0 {
        f.iter_mut().for_each(|z| *z /= norm);
    }
}

/// Knobs for [`random_state`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomStateOptions {
    /// Log-uniform range of the L² norm of each component.
    pub norm_range: (f64, f64),
    /// Log-uniform range of the Gaussian envelope width.
    pub width_range: (f64, f64),
    /// Largest wavenumber of the band-limited carrier.
    pub k_max: f64,
}

impl RandomStateOptions {
    /// Defaults scaled to the grid: widths from 4h to L/8, carriers up to a
    /// quarter of the Nyquist wavenumber.
    pub fn for_grid(grid: &Grid) -> Self {
        let h = grid.spacing().iter().cloned().fold(0.0, f64::max);
        let l = grid.box_length().iter().cloned().fold(f64::INFINITY, f64::min);
        RandomStateOptions {
            norm_range: (1e-2, 10.0),
            width_range: (4.0 * h, l / 8.0),
            k_max: std::f64::consts::PI / (4.0 * h),
        }
    }
}

fn log_uniform(rng: &mut StreamRng, (lo, hi): (f64, f64)) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// Localized random state: a band-limited carrier under a Gaussian envelope
/// at a random position, rescaled to a random norm. Each component is drawn
/// independently.
pub fn random_state(model: ModelTag, grid: &Grid, opts: &RandomStateOptions, rng: &mut StreamRng) -> FieldState {
    let n_comp = model.component_names().len();
    let mut comps = Vec::with_capacity(n_comp);
    for _ in 0..n_comp {
        let width = log_uniform(rng, opts.width_range);
        let center: Vec<f64> = grid.box_length().iter().map(|l| (rng.gen::<f64>() - 0.5) * l).collect();
        let norm = log_uniform(rng, opts.norm_range);
        comps.push(enveloped_component(model, grid, &center, width, norm, opts.k_max, rng));
    }
    FieldState::new(model, grid.clone(), comps).expect("random state is finite and well-shaped")
}

/// Like [`random_state`] but with every component centred at `center` with
/// envelope `width` and L² norm `norm`.
pub fn localized_state(
    model: ModelTag,
    grid: &Grid,
    center: &[f64],
    width: f64,
    norm: f64,
    k_max: f64,
    rng: &mut StreamRng,
) -> FieldState {
    let comps = (0..model.component_names().len())
        .map(|_| enveloped_component(model, grid, center, width, norm, k_max, rng))
        .collect();
    FieldState::new(model, grid.clone(), comps).expect("localized state is finite and well-shaped")
}

fn enveloped_component(
    model: ModelTag,
    grid: &Grid,
    center: &[f64],
    width: f64,
    norm: f64,
    k_max: f64,
    rng: &mut StreamRng,
) -> Samples {
    let carrier = band_limited_complex(grid, k_max, rng);
    let mut f: Vec<Complex64> = carrier
        .iter()
        .enumerate()
        .map(|(flat, z)| {
            let x = grid.position(flat);
            let r2: f64 = (0..grid.dim())
                .map(|a| {
                    let l = grid.box_length()[a];
                    let d = (x[a] - center[a]).rem_euclid(l);
                    let d = if d > l / 2.0 { d - l } else { d };
                    d * d
                })
                .sum();
            z * (-r2 / (2.0 * width * width)).exp()
        })
        .collect();
    normalize(grid, &mut f);
    f.iter_mut().for_each(|z| *z *= norm);
    if model.is_complex() {
        Samples::Complex(f)
    } else {
        Samples::Real(f.into_iter().map(|z| z.re * std::f64::consts::SQRT_2).collect())
    }
}

/// Random direction with band-limited components (no envelope), unit L² norm
/// per component.
pub fn random_direction(model: ModelTag, grid: &Grid, k_max: f64, rng: &mut StreamRng) -> FieldState {
    let comps = (0..model.component_names().len())
        .map(|_| {
            let f = band_limited_complex(grid, k_max, rng);
            if model.is_complex() {
                Samples::Complex(f)
            } else {
                Samples::Real(f.into_iter().map(|z| z.re * std::f64::consts::SQRT_2).collect())
            }
        })
        .collect();
    FieldState::new(model, grid.clone(), comps).expect("random direction is finite and well-shaped")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        // published FNV-1a test vectors
        assert_eq!(stage_hash(""), 0xcbf29ce484222325);
        assert_eq!(stage_hash("a"), 0xaf63dc4c8601ec8c);
        assert_eq!(stage_hash("foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, "noise"), |r, _| Some(r.gen())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, "noise"), |r, _| Some(r.gen())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, "probe"), |r, _| Some(r.gen())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn band_limited_is_normalized_and_band_limited() {
        let g = Grid::line(128, 20.0).unwrap();
        let mut rng = stream(1, "t");
        let f = band_limited_complex(&g, 2.0, &mut rng);
        let norm = g.integrate(&f.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
        assert!((norm - 1.0).abs() < 1e-12);
        let spec = g.to_spectral(&f);
        for (i, v) in spec.iter().enumerate() {
            if g.k_squared()[i] > 4.0 {
                assert!(v.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn random_states_are_valid() {
        let g = Grid::line(64, 16.0).unwrap();
        let opts = RandomStateOptions::for_grid(&g);
        let mut rng = stream(3, "t");
        for model in [ModelTag::Nls, ModelTag::Nwe, ModelTag::Nbe] {
            let s = random_state(model, &g, &opts, &mut rng);
            assert!(s.is_finite());
            assert!(!s.is_zero());
        }
    }
}
