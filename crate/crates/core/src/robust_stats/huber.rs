use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

/// Huber cost: quadratic inside `[-lambda, lambda]`, linear outside.
pub fn huber_rho(r: f64, lambda: f64) -> f64 {
    let a = r.abs();
    if a <= lambda {
        0.5 * r * r
    } else {
        lambda * a - 0.5 * lambda * lambda
    }
}

pub fn huber_psi(r: f64, lambda: f64) -> f64 {
    if r.abs() <= lambda {
        r
    } else {
        lambda * r.signum()
    }
}

pub fn huber_psi_prime(r: f64, lambda: f64) -> f64 {
    if r.abs() <= lambda {
        1.0
    } else {
        0.0
    }
}

/// IRLS weight `psi(r) / r`, equal to 1 at the origin.
pub fn huber_weight(r: f64, lambda: f64) -> f64 {
    let a = r.abs();
    if a <= lambda {
        1.0
    } else {
        lambda / a
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Expectations of the Huber score under a standard Gaussian residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberExpectations {
    /// `E[psi'(r)] = 2 Phi(lambda) - 1`.
    pub e_psi_prime: f64,
    /// `E[psi(r)^2]`.
    pub e_psi_sq: f64,
}

pub fn huber_expectations(lambda: f64) -> HuberExpectations {
    let cdf = std_normal_cdf(lambda);
    let tail = std_normal_cdf(-lambda);
    let l2 = lambda * lambda;
    let inner = 2.0 * cdf - 1.0;
    HuberExpectations {
        e_psi_prime: inner,
        e_psi_sq: l2 * tail - 2.0 * lambda * std_normal_pdf(lambda) + inner + l2 * (1.0 - cdf),
    }
}

/// Asymptotic variance inflation `E[psi^2] / E[psi']^2` of the Huber
/// estimator relative to least squares at the Gaussian.
pub fn efficiency_coefficient(lambda: f64) -> f64 {
    let e = huber_expectations(lambda);
    e.e_psi_sq / (e.e_psi_prime * e.e_psi_prime)
}
