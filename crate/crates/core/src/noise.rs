//! Smooth random vector fields on R³.
//!
//! A [`NoiseField`] is a finite sum of plane waves
//! `F(x) = Σ_w a_w sin(κ_w · x + φ_w)` with random directions, amplitude
//! vectors of norm `decay^w`, wave numbers geometrically spaced from 1 to 8
//! (so amplitude falls as frequency rises) and uniform phases. It is smooth and its parameters are a pure function of the seed.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::seed;

pub const DEFAULT_NUM_WAVES: usize = 16;
pub const DEFAULT_DECAY: f64 = 0.7;
pub const MIN_WAVE_NUMBER: f64 = 1.0;
pub const MAX_WAVE_NUMBER: f64 = 8.0;

/// Generator parameters, recorded alongside generated data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub num_waves: usize,
    pub decay: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { num_waves: DEFAULT_NUM_WAVES, decay: DEFAULT_DECAY }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Wave {
    wave_vector: Vector3<f64>,
    amplitude: Vector3<f64>,
    phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    seed: u64,
    params: NoiseParams,
    waves: Vec<Wave>,
}

fn random_unit<R: Rng>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v: Vector3<f64> = Vector3::from_fn(|_, _| rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

impl NoiseField {
    pub fn new(seed: u64) -> Self {
        Self::with_params(seed, NoiseParams::default())
    }

    /// # Panics
    /// If `num_waves == 0` or `decay` is not positive.
    pub fn with_params(seed: u64, params: NoiseParams) -> Self {
        assert!(params.num_waves > 0, "num_waves must be positive");
        assert!(params.decay > 0.0, "decay must be positive");
        let mut rng = seed::rng_from(seed);
        let span = (params.num_waves - 1).max(1) as f64;
        let waves = (1..=params.num_waves)
            .map(|w| {
                let magnitude =
                    MIN_WAVE_NUMBER * (MAX_WAVE_NUMBER / MIN_WAVE_NUMBER).powf((w - 1) as f64 / span);
                let wave_vector = random_unit(&mut rng) * magnitude;
                let amplitude = random_unit(&mut rng) * params.decay.powi(w as i32);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                Wave { wave_vector, amplitude, phase }
            })
            .collect();
        Self { seed, params, waves }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> NoiseParams {
        self.params
    }

    pub fn eval(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.waves
            .iter()
            .fold(Vector3::zeros(), |acc, w| acc + w.amplitude * (w.wave_vector.dot(x) + w.phase).sin())
    }

    /// Global Lipschitz constant `Σ ‖a_w‖ ‖κ_w‖`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.waves.iter().map(|w| w.amplitude.norm() * w.wave_vector.norm()).sum()
    }
}
