//! Constant-velocity Kalman filter over 3D box states.
//!
//! State layout: `(x, y, z, θ, l, w, h, vx, vy, vz)` with an optional
//! trailing `vθ` when angular velocity is enabled. Time advances in whole
//! frames, so velocities are per-frame displacements. Only the first seven
//! components are observed.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Box3D};

pub const OBSERVED_DIM: usize = 7;
const THETA: usize = 3;

/// Diagonal covariance settings and model switches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KalmanConfig {
    /// Initial variance of the observed components.
    pub initial_observed_var: f64,
    /// Initial variance of the velocity components.
    pub initial_velocity_var: f64,
    /// Process noise on the observed components, per frame.
    pub process_observed_var: f64,
    /// Process noise on the velocity components, per frame.
    pub process_velocity_var: f64,
    /// Measurement noise on every observed component.
    pub measurement_var: f64,
    /// Adds `vθ` to the state.
    pub angular_velocity: bool,
    /// Flips the prior heading by π when it disagrees with the detection by
    /// more than π/2.
    pub orientation_correction: bool,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self {
            initial_observed_var: 10.0,
            initial_velocity_var: 1000.0,
            process_observed_var: 0.0,
            process_velocity_var: 1.0,
            measurement_var: 1.0,
            angular_velocity: false,
            orientation_correction: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl TrackState {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn to_box(&self) -> Box3D {
        let m = &self.mean;
        Box3D::new(m[0], m[1], m[2], m[3], m[4], m[5], m[6])
    }

    pub fn velocity(&self) -> [f64; 3] {
        [self.mean[7], self.mean[8], self.mean[9]]
    }

    pub fn angular_velocity(&self) -> Option<f64> {
        (self.dim() > 10).then(|| self.mean[10])
    }
}

/// Returns the trajectory heading to use for the update: flipped by π when
/// it differs from the detection heading by more than π/2.
pub fn correct_orientation(traj_theta: f64, det_theta: f64) -> f64 {
    let diff = wrap_angle(det_theta - traj_theta);
    if diff.abs() > FRAC_PI_2 {
        wrap_angle(traj_theta + PI)
    } else {
        traj_theta
    }
}

#[derive(Debug, Clone)]
pub struct KalmanFilter {
    config: KalmanConfig,
    dim: usize,
    transition: DMatrix<f64>,
    process_noise: DMatrix<f64>,
    measurement_noise: DMatrix<f64>,
    initial_covariance: DMatrix<f64>,
}

impl KalmanFilter {
    pub fn new(config: KalmanConfig) -> Result<Self> {
        let vars = [
            ("initial_observed_var", config.initial_observed_var),
            ("initial_velocity_var", config.initial_velocity_var),
            ("process_observed_var", config.process_observed_var),
            ("process_velocity_var", config.process_velocity_var),
            ("measurement_var", config.measurement_var),
        ];
        for (name, v) in vars {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        let dim = if config.angular_velocity { 11 } else { 10 };
        let mut transition = DMatrix::identity(dim, dim);
        transition[(0, 7)] = 1.0;
        transition[(1, 8)] = 1.0;
        transition[(2, 9)] = 1.0;
        if config.angular_velocity {
            transition[(THETA, 10)] = 1.0;
        }
        let diag = |obs: f64, vel: f64| {
            DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| {
                if i < OBSERVED_DIM {
                    obs
                } else {
                    vel
                }
            }))
        };
        Ok(Self {
            dim,
            transition,
            process_noise: diag(config.process_observed_var, config.process_velocity_var),
            measurement_noise: DMatrix::identity(OBSERVED_DIM, OBSERVED_DIM)
                * config.measurement_var,
            initial_covariance: diag(config.initial_observed_var, config.initial_velocity_var),
            config,
        })
    }

    pub fn config(&self) -> &KalmanConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// State at the detection's pose with zero velocity.
    pub fn init_state(&self, b: &Box3D) -> TrackState {
        let mut mean = DVector::zeros(self.dim);
        for (i, v) in observation(b).iter().enumerate() {
            mean[i] = *v;
        }
        TrackState {
            mean,
            covariance: self.initial_covariance.clone(),
        }
    }

    pub fn predict(&self, state: &TrackState) -> TrackState {
        let mut mean = state.mean.clone();
        mean[0] += mean[7];
        mean[1] += mean[8];
        mean[2] += mean[9];
        if self.config.angular_velocity {
            mean[THETA] += mean[10];
        }
        mean[THETA] = wrap_angle(mean[THETA]);
        let f = &self.transition;
        let mut covariance = f * &state.covariance * f.transpose() + &self.process_noise;
        symmetrize(&mut covariance);
        TrackState { mean, covariance }
    }

    /// Bayesian update with a matched detection. Orientation correction (if
    /// enabled) is applied to the prior before the innovation is formed.
    pub fn update(&self, state: &TrackState, det: &Box3D) -> Result<TrackState> {
        let mut prior = state.mean.clone();
        if self.config.orientation_correction {
            prior[THETA] = correct_orientation(prior[THETA], det.yaw);
        }
        let p = &state.covariance;
        let z = observation(det);
        let mut innovation = DVector::from_fn(OBSERVED_DIM, |i, _| z[i] - prior[i]);
        innovation[THETA] = wrap_angle(innovation[THETA]);

        // H selects the leading observed block, so H·P is its first rows.
        let hp = p.rows(0, OBSERVED_DIM).into_owned();
        let s = hp.columns(0, OBSERVED_DIM).into_owned() + &self.measurement_noise;
        let chol = s.cholesky().ok_or_else(|| {
            Error::Filter("innovation covariance is not positive definite".into())
        })?;
        // K = P Hᵀ S⁻¹ = (S⁻¹ H P)ᵀ
        let gain = chol.solve(&hp).transpose();

        let mut mean = prior + &gain * innovation;
        mean[THETA] = wrap_angle(mean[THETA]);

        // Joseph form keeps the posterior symmetric PSD.
        let mut i_kh = DMatrix::identity(self.dim, self.dim);
        {
            let mut block = i_kh.columns_mut(0, OBSERVED_DIM);
            block -= &gain;
        }
        let mut covariance =
            &i_kh * p * i_kh.transpose() + &gain * &self.measurement_noise * gain.transpose();
        symmetrize(&mut covariance);
        Ok(TrackState { mean, covariance })
    }
}

fn observation(b: &Box3D) -> [f64; OBSERVED_DIM] {
    [b.cx, b.cy, b.cz, b.yaw, b.length, b.width, b.height]
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
