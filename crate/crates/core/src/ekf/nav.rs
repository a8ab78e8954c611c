use nalgebra::{Matrix3, Matrix3x4, Matrix4, Quaternion, SMatrix, SVector, UnitQuaternion, Vector3, Vector4};

use crate::types::GRAVITY;

/// Dimension of the filter state `[v, q, p]`.
pub const STATE_DIM: usize = 10;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateMatrix = SMatrix<f64, STATE_DIM, STATE_DIM>;

/// Earth-frame gravity; the z axis points down.
pub fn gravity() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, GRAVITY)
}

/// Strapdown navigation state at the IMU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavState {
    /// Velocity in the body frame [m/s].
    pub v: Vector3<f64>,
    /// Body-to-earth attitude.
    pub q: UnitQuaternion<f64>,
    /// Earth-frame position [m].
    pub p: Vector3<f64>,
}

impl Default for NavState {
    fn default() -> Self {
        Self {
            v: Vector3::zeros(),
            q: UnitQuaternion::identity(),
            p: Vector3::zeros(),
        }
    }
}

impl NavState {
    /// Level state with the given heading.
    pub fn planar(x: f64, y: f64, yaw: f64, v: Vector3<f64>) -> Self {
        Self {
            v,
            q: UnitQuaternion::from_euler_angles(0.0, 0.0, yaw),
            p: Vector3::new(x, y, 0.0),
        }
    }

    pub fn yaw(&self) -> f64 {
        self.q.euler_angles().2
    }

    /// `[v, (w, x, y, z), p]`.
    pub fn to_vector(&self) -> StateVector {
        let q = self.q.quaternion();
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.v);
        x.fixed_rows_mut::<4>(3).copy_from(&Vector4::new(q.w, q.i, q.j, q.k));
        x.fixed_rows_mut::<3>(7).copy_from(&self.p);
        x
    }

    /// Inverse of [`NavState::to_vector`]; the quaternion is renormalized.
    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            v: x.fixed_rows::<3>(0).into_owned(),
            q: UnitQuaternion::from_quaternion(Quaternion::new(x[3], x[4], x[5], x[6])),
            p: x.fixed_rows::<3>(7).into_owned(),
        }
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation matrix of a possibly unnormalized quaternion `(w, x, y, z)`,
/// written as the homogeneous quadratic form.
fn rotation(q: &Vector4<f64>) -> Matrix3<f64> {
    let w = q[0];
    let u = Vector3::new(q[1], q[2], q[3]);
    Matrix3::identity() * (w * w - u.dot(&u)) + 2.0 * u * u.transpose() + 2.0 * w * skew(&u)
}

/// `∂(R(q)·a)/∂q` for the homogeneous rotation.
fn rotation_jacobian(q: &Vector4<f64>, a: &Vector3<f64>) -> Matrix3x4<f64> {
    let w = q[0];
    let u = Vector3::new(q[1], q[2], q[3]);
    let first = w * a + u.cross(a);
    let rest = Matrix3::identity() * u.dot(a) + u * a.transpose() - a * u.transpose() - w * skew(a);
    let mut j = Matrix3x4::zeros();
    j.set_column(0, &(2.0 * first));
    j.fixed_columns_mut::<3>(1).copy_from(&(2.0 * rest));
    j
}

/// `Ω(ω)` with `q ⊗ (0, ω) = Ω(ω)·q`.
fn omega_matrix(w: &Vector3<f64>) -> Matrix4<f64> {
    Matrix4::new(
        0.0, -w.x, -w.y, -w.z, //
        w.x, 0.0, w.z, -w.y, //
        w.y, -w.z, 0.0, w.x, //
        w.z, w.y, -w.x, 0.0,
    )
}

/// `Ξ(q)` with `q ⊗ (0, ω) = Ξ(q)·ω`.
pub(crate) fn xi_matrix(q: &Vector4<f64>) -> SMatrix<f64, 4, 3> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    SMatrix::<f64, 4, 3>::new(-x, -y, -z, w, -z, y, z, w, -x, -y, x, w)
}

fn split(x: &StateVector) -> (Vector3<f64>, Vector4<f64>, Vector3<f64>) {
    (
        x.fixed_rows::<3>(0).into_owned(),
        x.fixed_rows::<4>(3).into_owned(),
        x.fixed_rows::<3>(7).into_owned(),
    )
}

/// Continuous-time strapdown dynamics:
/// `v̇ = a + Rᵀg − ω×v`, `q̇ = ½·q⊗(0, ω)`, `ṗ = R·v`.
pub fn state_derivative(x: &StateVector, accel: &Vector3<f64>, gyro: &Vector3<f64>) -> StateVector {
    let (v, q, _) = split(x);
    let r = rotation(&q);
    let v_dot = accel + r.transpose() * gravity() - gyro.cross(&v);
    let q_dot = 0.5 * omega_matrix(gyro) * q;
    let p_dot = r * v;
    let mut out = StateVector::zeros();
    out.fixed_rows_mut::<3>(0).copy_from(&v_dot);
    out.fixed_rows_mut::<4>(3).copy_from(&q_dot);
    out.fixed_rows_mut::<3>(7).copy_from(&p_dot);
    out
}

/// Analytic Jacobian of [`state_derivative`] with respect to the state.
pub fn state_jacobian(x: &StateVector, gyro: &Vector3<f64>) -> StateMatrix {
    let (v, q, _) = split(x);
    let conj = Vector4::new(q[0], -q[1], -q[2], -q[3]);
    let flip = Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0));
    let mut f = StateMatrix::zeros();
    f.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-skew(gyro)));
    f.fixed_view_mut::<3, 4>(0, 3)
        .copy_from(&(rotation_jacobian(&conj, &gravity()) * flip));
    f.fixed_view_mut::<4, 4>(3, 3).copy_from(&(0.5 * omega_matrix(gyro)));
    f.fixed_view_mut::<3, 3>(7, 0).copy_from(&rotation(&q));
    f.fixed_view_mut::<3, 4>(7, 3).copy_from(&rotation_jacobian(&q, &v));
    f
}

/// Propagate the navigation state over `dt` with constant IMU readings.
///
/// Attitude uses the exact quaternion exponential, velocity a forward Euler
/// step, and position the trapezoidal velocity rotated by the mid-interval
/// attitude. `dt = 0` returns the state unchanged.
pub fn mechanize(state: &NavState, accel: &Vector3<f64>, gyro: &Vector3<f64>, dt: f64) -> NavState {
    if dt == 0.0 {
        return *state;
    }
    let half = UnitQuaternion::from_scaled_axis(gyro * (0.5 * dt));
    let q_mid = state.q * half;
    let q_new = UnitQuaternion::new_normalize(*(q_mid * half).quaternion());
    let v_dot = accel + state.q.inverse_transform_vector(&gravity()) - gyro.cross(&state.v);
    let v_new = state.v + v_dot * dt;
    let p_new = state.p + q_mid.transform_vector(&(0.5 * (state.v + v_new))) * dt;
    NavState {
        v: v_new,
        q: q_new,
        p: p_new,
    }
}
