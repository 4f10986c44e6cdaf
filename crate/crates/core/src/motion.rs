//! Constant-velocity Kalman filter over `(cx, cy, w, h)` and their rates.
//!
//! Noise standard deviations scale with the current box height, following
//! the convention of SORT-family trackers.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::BBox;

pub type StateVector = SVector<f64, 8>;
pub type StateMatrix = SMatrix<f64, 8, 8>;

type MeasurementMatrix = SMatrix<f64, 4, 8>;

/// Smallest width/height a state is allowed to report.
pub const MIN_EXTENT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: StateVector,
    pub covariance: StateMatrix,
}

impl KalmanState {
    /// Box at the current mean.
    pub fn bbox(&self) -> BBox {
        let m = &self.mean;
        BBox::from_state(m[0], m[1], m[2], m[3], MIN_EXTENT)
    }

    pub fn max_asymmetry(&self) -> f64 {
        (self.covariance - self.covariance.transpose()).abs().max()
    }
}

/// Standard deviations expressed as multiples of the box height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub init_position: f64,
    pub init_velocity: f64,
    pub process_position: f64,
    pub process_velocity: f64,
    pub measurement: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        let position = 1.0 / 20.0;
        let velocity = 1.0 / 160.0;
        Self {
            init_position: 2.0 * position,
            init_velocity: 10.0 * velocity,
            process_position: position,
            process_velocity: velocity,
            measurement: position,
        }
    }
}

impl NoiseModel {
    /// No process noise and near-exact measurements, for targets known to
    /// move at constant velocity without detector jitter.
    pub fn noiseless() -> Self {
        Self {
            process_position: 0.0,
            process_velocity: 0.0,
            measurement: 1e-6,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MotionModel {
    pub noise: NoiseModel,
}

fn transition() -> StateMatrix {
    let mut f = StateMatrix::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

fn observation() -> MeasurementMatrix {
    MeasurementMatrix::identity()
}

fn symmetrize(m: &StateMatrix) -> StateMatrix {
    (m + m.transpose()) * 0.5
}

impl MotionModel {
    pub fn new(noise: NoiseModel) -> Self {
        Self { noise }
    }

    pub fn init(&self, b: &BBox) -> KalmanState {
        let mean = StateVector::from_column_slice(&[b.cx, b.cy, b.w, b.h, 0.0, 0.0, 0.0, 0.0]);
        let p = self.noise.init_position * b.h;
        let v = self.noise.init_velocity * b.h;
        let std = StateVector::from_column_slice(&[p, p, p, p, v, v, v, v]);
        KalmanState {
            mean,
            covariance: StateMatrix::from_diagonal(&std.component_mul(&std)),
        }
    }

    /// Advances the state by one frame.
    pub fn predict(&self, s: &KalmanState) -> KalmanState {
        let h = s.mean[3].max(MIN_EXTENT);
        let p = self.noise.process_position * h;
        let v = self.noise.process_velocity * h;
        let std = StateVector::from_column_slice(&[p, p, p, p, v, v, v, v]);
        let q = StateMatrix::from_diagonal(&std.component_mul(&std));
        let f = transition();
        KalmanState {
            mean: f * s.mean,
            covariance: symmetrize(&(f * s.covariance * f.transpose() + q)),
        }
    }

    /// Corrects the state with a measured box.
    pub fn update(&self, s: &KalmanState, z: &BBox) -> Result<KalmanState> {
        let z = SVector::<f64, 4>::new(z.cx, z.cy, z.w, z.h);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteMeasurement);
        }
        let r_std = self.noise.measurement * s.mean[3].max(MIN_EXTENT);
        let r = SMatrix::<f64, 4, 4>::identity() * (r_std * r_std);
        let h = observation();
        let pht = s.covariance * h.transpose();
        let innovation_cov = h * pht + r;
        let gain = match innovation_cov.cholesky() {
            Some(chol) => (chol.solve(&pht.transpose())).transpose(),
            None => {
                let inv = innovation_cov
                    .try_inverse()
                    .ok_or(Error::NonFiniteMeasurement)?;
                pht * inv
            }
        };
        let mut mean = s.mean + gain * (z - h * s.mean);
        // Joseph form keeps the posterior symmetric positive semidefinite.
        let i_kh = StateMatrix::identity() - gain * h;
        let covariance =
            symmetrize(&(i_kh * s.covariance * i_kh.transpose() + gain * r * gain.transpose()));
        mean[2] = mean[2].max(MIN_EXTENT);
        mean[3] = mean[3].max(MIN_EXTENT);
        Ok(KalmanState { mean, covariance })
    }
}
