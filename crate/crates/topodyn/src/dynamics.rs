//! Synthetic trajectory and signal generation: Lorenz and Rössler flows
//! integrated with fixed-step RK4, plus simple sinusoid fixtures.
//!
//! Everything here is bit-deterministic: the integrator is seed-free and
//! the signal noise comes from a caller-provided seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::embedding::TimeSeries;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid spec: {0}")]
    InvalidSpec(&'static str),
    #[error("trajectory diverged at step {step} (|coordinate| > {bound})")]
    DivergedTrajectory { step: usize, bound: f64 },
}

/// A three-dimensional autonomous flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum System {
    Lorenz { sigma: f64, rho: f64, beta: f64 },
    Rossler { a: f64, b: f64, c: f64 },
}

impl System {
    /// Classical chaotic parameters sigma=10, rho=28, beta=8/3.
    pub fn lorenz() -> Self {
        System::Lorenz { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }
    }

    /// Classical chaotic parameters a=0.2, b=0.2, c=5.7.
    pub fn rossler() -> Self {
        System::Rossler { a: 0.2, b: 0.2, c: 5.7 }
    }

    fn derivative(&self, s: [f64; 3]) -> [f64; 3] {
        let [x, y, z] = s;
        match *self {
            System::Lorenz { sigma, rho, beta } => {
                [sigma * (y - x), x * (rho - z) - y, x * y - beta * z]
            }
            System::Rossler { a, b, c } => [-y - z, x + a * y, b + z * (x - c)],
        }
    }
}

/// Integration request: system, start state, step size, step counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSpec {
    pub system: System,
    pub x0: [f64; 3],
    pub dt: f64,
    /// Total RK4 steps taken; the series keeps the last
    /// `n_steps - burn_in` states.
    pub n_steps: usize,
    pub burn_in: usize,
    /// Any coordinate beyond this magnitude counts as divergence.
    pub divergence_bound: f64,
}

impl OdeSpec {
    /// Pinned benchmark scale: dt=0.01, 6000 steps, 1000 burned.
    pub fn new(system: System, x0: [f64; 3]) -> Self {
        Self { system, x0, dt: 0.01, n_steps: 6000, burn_in: 1000, divergence_bound: 1e6 }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(DynamicsError::InvalidSpec("dt must be finite and > 0"));
        }
        if self.n_steps <= self.burn_in {
            return Err(DynamicsError::InvalidSpec("n_steps must exceed burn_in"));
        }
        if !self.x0.iter().all(|c| c.is_finite()) {
            return Err(DynamicsError::InvalidSpec("x0 must be finite"));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(DynamicsError::InvalidSpec("divergence bound must be > 0"));
        }
        Ok(())
    }
}

fn rk4_step(system: &System, s: [f64; 3], dt: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], w: f64| [a[0] + w * b[0], a[1] + w * b[1], a[2] + w * b[2]];
    let k1 = system.derivative(s);
    let k2 = system.derivative(add(s, k1, dt / 2.0));
    let k3 = system.derivative(add(s, k2, dt / 2.0));
    let k4 = system.derivative(add(s, k3, dt));
    let mut out = s;
    for i in 0..3 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates `spec` and returns the x, y, z component series (channel
/// ids "x", "y", "z"), each of length `n_steps - burn_in`.
pub fn integrate(spec: &OdeSpec) -> Result<[TimeSeries; 3], DynamicsError> {
    spec.validate()?;
    let keep = spec.n_steps - spec.burn_in;
    let mut xs = Vec::with_capacity(keep);
    let mut ys = Vec::with_capacity(keep);
    let mut zs = Vec::with_capacity(keep);
    let mut s = spec.x0;
    for step in 1..=spec.n_steps {
        s = rk4_step(&spec.system, s, spec.dt);
        if !s.iter().all(|c| c.is_finite() && c.abs() <= spec.divergence_bound) {
            return Err(DynamicsError::DivergedTrajectory {
                step,
                bound: spec.divergence_bound,
            });
        }
        if step > spec.burn_in {
            xs.push(s[0]);
            ys.push(s[1]);
            zs.push(s[2]);
        }
    }
    Ok([
        TimeSeries::new("x", xs).expect("finite by the divergence check"),
        TimeSeries::new("y", ys).expect("finite by the divergence check"),
        TimeSeries::new("z", zs).expect("finite by the divergence check"),
    ])
}

/// Sinusoid family for classification fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Sine,
    /// Sine plus uniform noise in `noise * [-1, 1)`.
    NoisySine,
    /// Sine damped by `exp(-decay * t)`.
    DampedSine,
}

/// Sinusoid shape: `amplitude * sin(2 pi t / period + phase)`, with the
/// kind-specific noise or decay field applied on top.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParams {
    pub amplitude: f64,
    /// Samples per cycle; need not be an integer.
    pub period: f64,
    pub phase: f64,
    pub noise: f64,
    pub decay: f64,
}

impl Default for SignalParams {
    fn default() -> Self {
        Self { amplitude: 1.0, period: 16.0, phase: 0.0, noise: 0.1, decay: 0.02 }
    }
}

/// Generates `n` samples of the requested signal. Deterministic for a
/// fixed seed; kinds ignore the params they do not use, so `noise = 0`
/// or `decay = 0` degenerate to the plain sine bit-for-bit.
pub fn synth_signal(
    kind: SignalKind,
    params: &SignalParams,
    n: usize,
    seed: u64,
) -> Result<TimeSeries, DynamicsError> {
    if n < 4 {
        return Err(DynamicsError::InvalidSpec("need at least 4 samples"));
    }
    if !(params.period.is_finite() && params.period > 0.0) {
        return Err(DynamicsError::InvalidSpec("period must be finite and > 0"));
    }
    if !(params.amplitude.is_finite() && params.phase.is_finite()) {
        return Err(DynamicsError::InvalidSpec("amplitude and phase must be finite"));
    }
    if !(params.noise.is_finite() && params.noise >= 0.0) {
        return Err(DynamicsError::InvalidSpec("noise must be finite and >= 0"));
    }
    if !(params.decay.is_finite() && params.decay >= 0.0) {
        return Err(DynamicsError::InvalidSpec("decay must be finite and >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = 2.0 * std::f64::consts::PI / params.period;
    let id = match kind {
        SignalKind::Sine => "sine",
        SignalKind::NoisySine => "noisy_sine",
        SignalKind::DampedSine => "damped_sine",
    };
    let samples = (0..n)
        .map(|t| {
            let t = t as f64;
            let base = params.amplitude * (omega * t + params.phase).sin();
            match kind {
                SignalKind::Sine => base,
                SignalKind::NoisySine => {
                    if params.noise == 0.0 {
                        base
                    } else {
                        base + params.noise * rng.random_range(-1.0..1.0)
                    }
                }
                SignalKind::DampedSine => (-params.decay * t).exp() * base,
            }
        })
        .collect();
    Ok(TimeSeries::new(id, samples).expect("finite by construction"))
}
