use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{
    integrate, Disturbance, ExtendedDynamics, Method, ProjectionOperator, RawTrajectory, SingleIntegrator,
    Termination, Unicycle,
};
use crate::error::{GvfError, Result};
use crate::field::VectorField;
use crate::guidance::{heading_error, wrap_angle, StateLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SingleIntegrator,
    SingleIntegratorNormalized,
    Extended,
    Unicycle,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::SingleIntegrator => "single_integrator",
            ModelKind::SingleIntegratorNormalized => "single_integrator_normalized",
            ModelKind::Extended => "extended",
            ModelKind::Unicycle => "unicycle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub position: Vec<f64>,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub w: f64,
}

/// A fully resolved simulation setup.
#[derive(Clone)]
pub struct Scenario {
    pub field: Arc<dyn VectorField>,
    pub model: ModelKind,
    pub initial: InitialState,
    /// `s` for the normalized integrator, ground speed `v` for the unicycle.
    pub speed: f64,
    pub disturbance: Disturbance,
    pub dt: f64,
    pub duration: f64,
    pub method: Method,
}

impl Scenario {
    pub fn new(field: Arc<dyn VectorField>, model: ModelKind, initial: InitialState) -> Self {
        Self {
            field,
            model,
            initial,
            speed: 12.0,
            disturbance: Disturbance::None,
            dt: 0.02,
            duration: 600.0,
            method: Method::Rk4,
        }
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout::of(self.field.as_ref())
    }

    /// Generalized initial position `(x, y, [z], [w])`.
    pub fn initial_xi(&self) -> Result<DVector<f64>> {
        let layout = self.layout();
        if self.initial.position.len() != layout.physical {
            return Err(GvfError::Shape(format!(
                "initial position has {} coordinates, field needs {}",
                self.initial.position.len(),
                layout.physical
            )));
        }
        let mut xi = DVector::zeros(layout.generalized_dim());
        for (i, p) in self.initial.position.iter().enumerate() {
            xi[i] = *p;
        }
        if layout.virtual_coordinate {
            xi[layout.physical] = self.initial.w;
        }
        Ok(xi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    /// Generalized position `(x, y, [z], [w])`.
    pub xi: DVector<f64>,
    pub theta: Option<f64>,
    pub beta: Option<f64>,
    pub e: DVector<f64>,
    pub err_norm: f64,
    /// `0.5 e^T K e`.
    pub lyapunov: f64,
    pub chi: DVector<f64>,
    /// Second block of the extended model.
    pub transformed: Option<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub model: ModelKind,
    pub layout: StateLayout,
    pub gains: Vec<f64>,
    pub records: Vec<Record>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("trajectory has at least one record")
    }

    pub fn position(&self, r: &Record) -> Vec<f64> {
        r.xi.rows(0, self.layout.physical).iter().copied().collect()
    }

    pub fn w(&self, r: &Record) -> Option<f64> {
        self.layout.virtual_coordinate.then(|| r.xi[self.layout.physical])
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn error_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.err_norm).collect()
    }
}

pub fn simulate(scenario: &Scenario) -> Result<Trajectory> {
    let layout = scenario.layout();
    let xi0 = scenario.initial_xi()?;
    let g = layout.generalized_dim();
    let field = scenario.field.clone();
    let (raw, unicycle): (RawTrajectory, bool) = match scenario.model {
        ModelKind::SingleIntegrator => {
            let dynamics = SingleIntegrator::new(field).with_disturbance(scenario.disturbance.clone());
            (integrate(&dynamics, xi0, scenario.dt, scenario.duration, scenario.method)?, false)
        }
        ModelKind::SingleIntegratorNormalized => {
            let dynamics =
                SingleIntegrator::normalized(field, scenario.speed)?.with_disturbance(scenario.disturbance.clone());
            (integrate(&dynamics, xi0, scenario.dt, scenario.duration, scenario.method)?, false)
        }
        ModelKind::Extended => {
            let base = SingleIntegrator::new(field).with_disturbance(scenario.disturbance.clone());
            let dynamics = ExtendedDynamics::new(base, ProjectionOperator::drop_last(g))?;
            let x0 = dynamics.initial_state(&xi0);
            (integrate(&dynamics, x0, scenario.dt, scenario.duration, scenario.method)?, false)
        }
        ModelKind::Unicycle => {
            let dynamics = Unicycle::new(field, scenario.speed)?.with_disturbance(scenario.disturbance.clone());
            let x0 = dynamics.pack(&xi0, scenario.initial.theta);
            (integrate(&dynamics, x0, scenario.dt, scenario.duration, scenario.method)?, true)
        }
    };

    let gains = scenario.field.params().gains().to_vec();
    let mut records = Vec::with_capacity(raw.states.len());
    for (t, state) in raw.times.iter().zip(&raw.states) {
        let xi = state.rows(0, g).into_owned();
        let sample = scenario.field.sample(&xi)?;
        let (theta, beta) = if unicycle {
            let theta = state[g];
            (Some(wrap_angle(theta)), heading_error(theta, &sample).ok())
        } else {
            (None, None)
        };
        let lyapunov = 0.5 * sample.e.iter().zip(&gains).map(|(e, k)| k * e * e).sum::<f64>();
        records.push(Record {
            t: *t,
            theta,
            beta,
            err_norm: sample.e.norm(),
            lyapunov,
            e: sample.e,
            chi: sample.chi,
            transformed: (scenario.model == ModelKind::Extended).then(|| state.rows(g, g).into_owned()),
            xi,
        });
    }
    if records.is_empty() {
        return Err(GvfError::Parameter("initial state is not finite".into()));
    }
    Ok(Trajectory {
        model: scenario.model,
        layout,
        gains,
        records,
        termination: raw.termination,
    })
}
