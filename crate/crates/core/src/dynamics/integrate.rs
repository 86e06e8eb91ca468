use nalgebra::DVector;

use crate::error::{invalid, Error, Result};

/// One classical fourth-order Runge-Kutta step of `x' = f(x)`.
pub fn rk4_step<F>(x: &DVector<f64>, dt: f64, mut f: F) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(dt > 0.0) {
        return Err(invalid(format!("RK4 step must be positive, got {dt}")));
    }
    let k1 = f(x)?;
    let k2 = f(&(x + &k1 * (0.5 * dt)))?;
    let k3 = f(&(x + &k2 * (0.5 * dt)))?;
    let k4 = f(&(x + &k3 * dt))?;
    let next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite value in RK4 step".into()));
    }
    Ok(next)
}
