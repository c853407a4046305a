use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GvfError, Result};

/// Additive position disturbance `d(t)` (e.g. wind), in m/s.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Disturbance {
    #[default]
    None,
    Constant([f64; 3]),
    /// `vector * exp(-lambda t)`.
    Decaying { vector: [f64; 3], lambda: f64 },
    /// Piecewise-constant noise, uniform in the ball of radius `amplitude`,
    /// redrawn every `hold` seconds from a seeded stream.
    Noise { amplitude: f64, hold: f64, seed: u64 },
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl Disturbance {
    pub fn constant(vector: [f64; 3]) -> Result<Self> {
        check_vector(&vector)?;
        Ok(Self::Constant(vector))
    }

    pub fn decaying(vector: [f64; 3], lambda: f64) -> Result<Self> {
        check_vector(&vector)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(GvfError::Parameter(format!(
                "decay rate must be finite and >= 0 for a bounded disturbance, got {lambda}"
            )));
        }
        Ok(Self::Decaying { vector, lambda })
    }

    pub fn noise(amplitude: f64, hold: f64, seed: u64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(GvfError::Parameter(format!("noise amplitude must be finite and >= 0, got {amplitude}")));
        }
        if !(hold.is_finite() && hold > 0.0) {
            return Err(GvfError::Parameter(format!("noise hold time must be > 0, got {hold}")));
        }
        Ok(Self::Noise { amplitude, hold, seed })
    }

    /// Uniform bound `r >= |d(t)|`.
    pub fn bound(&self) -> f64 {
        match self {
            Disturbance::None => 0.0,
            Disturbance::Constant(v) => norm3(v),
            Disturbance::Decaying { vector, .. } => norm3(vector),
            Disturbance::Noise { amplitude, .. } => *amplitude,
        }
    }

    pub fn eval(&self, t: f64) -> [f64; 3] {
        match self {
            Disturbance::None => [0.0; 3],
            Disturbance::Constant(v) => *v,
            Disturbance::Decaying { vector, lambda } => {
                let s = (-lambda * t).exp();
                [vector[0] * s, vector[1] * s, vector[2] * s]
            }
            Disturbance::Noise { amplitude, hold, seed } => {
                let slot = (t / hold).floor().max(0.0) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(slot);
                loop {
                    let u: [f64; 3] = [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ];
                    if norm3(&u) <= 1.0 {
                        return [u[0] * amplitude, u[1] * amplitude, u[2] * amplitude];
                    }
                }
            }
        }
    }
}

fn check_vector(v: &[f64; 3]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(GvfError::Parameter(format!("disturbance vector must be finite, got {v:?}")))
    }
}
