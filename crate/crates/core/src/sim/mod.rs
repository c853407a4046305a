//! Fixed-step integration of guided vehicle models.

mod disturbance;
mod models;
mod simulate;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{GvfError, Result};

pub use disturbance::Disturbance;
pub use models::{ExtendedDynamics, ProjectionOperator, SingleIntegrator, Unicycle, SINGULARITY_THRESHOLD};
pub use simulate::{simulate, InitialState, ModelKind, Record, Scenario, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    SingularityReached,
    ExcludedSet,
    NonFinite,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::SingularityReached => "singularity_reached",
            Termination::ExcludedSet => "excluded_set",
            Termination::NonFinite => "non_finite",
        }
    }
}

/// Right-hand side of an autonomous-in-structure, possibly time-varying ODE.
pub trait Dynamics {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>>;
}

impl<F> Dynamics for (usize, F)
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    fn dim(&self) -> usize {
        self.0
    }

    fn rhs(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        (self.1)(t, x)
    }
}

/// States at `t_k = k dt`, `k = 0..=ceil(T/dt)`, unless stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub termination: Termination,
}

/// Number of steps covering `[0, duration]`.
pub fn step_count(dt: f64, duration: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(GvfError::Parameter(format!("dt must be finite and > 0, got {dt}")));
    }
    if !(duration.is_finite() && duration >= dt) {
        return Err(GvfError::Parameter(format!("T must be finite and >= dt, got T={duration}, dt={dt}")));
    }
    let ratio = duration / dt;
    let nearest = ratio.round();
    let steps = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    Ok(steps as usize)
}

fn classify(err: GvfError) -> std::result::Result<Termination, GvfError> {
    match err {
        GvfError::Singularity(_) => Ok(Termination::SingularityReached),
        GvfError::ExcludedSet(_) => Ok(Termination::ExcludedSet),
        other => Err(other),
    }
}

fn finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Integrates `dynamics` from `x0` with fixed step `dt` up to `duration`.
///
/// Singularity and excluded-set errors from the dynamics, as well as
/// non-finite derivatives or states, stop the run with the corresponding
/// [`Termination`]; any other error is returned.
pub fn integrate<D: Dynamics + ?Sized>(
    dynamics: &D,
    x0: DVector<f64>,
    dt: f64,
    duration: f64,
    method: Method,
) -> Result<RawTrajectory> {
    if x0.len() != dynamics.dim() {
        return Err(GvfError::Shape(format!(
            "initial state has {} entries, dynamics expects {}",
            x0.len(),
            dynamics.dim()
        )));
    }
    let steps = step_count(dt, duration)?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    if !finite(&x0) {
        return Ok(RawTrajectory {
            times,
            states,
            termination: Termination::NonFinite,
        });
    }
    times.push(0.0);
    states.push(x0);

    let eval = |t: f64, x: &DVector<f64>| -> std::result::Result<DVector<f64>, Stop> {
        match dynamics.rhs(t, x) {
            Ok(d) if finite(&d) => Ok(d),
            Ok(_) => Err(Stop::End(Termination::NonFinite)),
            Err(e) => Err(match classify(e) {
                Ok(reason) => Stop::End(reason),
                Err(e) => Stop::Fail(e),
            }),
        }
    };

    for k in 0..steps {
        let t = k as f64 * dt;
        let x = &states[k];
        let next = match method {
            Method::Euler => eval(t, x).map(|d| x + d * dt),
            Method::Rk4 => (|| {
                let k1 = eval(t, x)?;
                let k2 = eval(t + 0.5 * dt, &(x + &k1 * (0.5 * dt)))?;
                let k3 = eval(t + 0.5 * dt, &(x + &k2 * (0.5 * dt)))?;
                let k4 = eval(t + dt, &(x + &k3 * dt))?;
                Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
            })(),
        };
        let termination = match next {
            Ok(x_next) if finite(&x_next) => {
                times.push((k + 1) as f64 * dt);
                states.push(x_next);
                continue;
            }
            Ok(_) => Termination::NonFinite,
            Err(Stop::End(reason)) => reason,
            Err(Stop::Fail(e)) => return Err(e),
        };
        return Ok(RawTrajectory {
            times,
            states,
            termination,
        });
    }
    Ok(RawTrajectory {
        times,
        states,
        termination: Termination::Completed,
    })
}

enum Stop {
    End(Termination),
    Fail(GvfError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay() -> (usize, impl Fn(f64, &DVector<f64>) -> Result<DVector<f64>>) {
        (1, |_t: f64, x: &DVector<f64>| Ok(-x))
    }

    #[test]
    fn rk4_exponential_decay() {
        let raw = integrate(&decay(), DVector::from_vec(vec![1.0]), 0.01, 1.0, Method::Rk4).unwrap();
        assert_eq!(raw.times.len(), 101);
        assert_eq!(raw.termination, Termination::Completed);
        let x = raw.states.last().unwrap()[0];
        assert!((x - (-1.0f64).exp()).abs() < 1e-7, "{x}");
        assert!((raw.times[100] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_step() {
        let raw = integrate(&decay(), DVector::from_vec(vec![1.0]), 0.5, 0.5, Method::Euler).unwrap();
        assert_eq!(raw.states.len(), 2);
        assert_eq!(raw.states[1][0], 0.5);
    }

    #[test]
    fn non_finite_derivative_stops() {
        let sys = (1, |t: f64, x: &DVector<f64>| {
            Ok(if t >= 0.25 { DVector::from_vec(vec![f64::NAN]) } else { x.clone() })
        });
        let raw = integrate(&sys, DVector::from_vec(vec![1.0]), 0.1, 1.0, Method::Euler).unwrap();
        assert_eq!(raw.termination, Termination::NonFinite);
        assert_eq!(raw.times.len(), 4);
        assert!(raw.states.iter().all(|s| s[0].is_finite()));
    }

    #[test]
    fn typed_errors_become_terminations() {
        let sys = (1, |_t: f64, _x: &DVector<f64>| -> Result<DVector<f64>> {
            Err(GvfError::Singularity("here".into()))
        });
        let raw = integrate(&sys, DVector::from_vec(vec![0.0]), 0.1, 1.0, Method::Rk4).unwrap();
        assert_eq!(raw.termination, Termination::SingularityReached);
        assert_eq!(raw.times, vec![0.0]);
    }

    #[test]
    fn other_errors_propagate() {
        let sys = (1, |_t: f64, _x: &DVector<f64>| -> Result<DVector<f64>> {
            Err(GvfError::Shape("bad".into()))
        });
        assert!(integrate(&sys, DVector::from_vec(vec![0.0]), 0.1, 1.0, Method::Rk4).is_err());
    }

    #[test]
    fn step_count_validation() {
        assert_eq!(step_count(0.02, 600.0).unwrap(), 30_000);
        assert_eq!(step_count(0.3, 1.0).unwrap(), 4);
        assert!(step_count(0.0, 1.0).is_err());
        assert!(step_count(0.1, 0.05).is_err());
    }
}
