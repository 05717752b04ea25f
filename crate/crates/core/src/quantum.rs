//! Empirical models from multi-qubit pure states under equatorial
//! measurements `cos(phi) X + sin(phi) Y`.
//!
//! Outcome `0` is the `+1` eigenvalue. Qubit `0` is the most significant bit
//! of a basis index, matching the first-party-most-significant order of the
//! Bell scenarios.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::empirical::{EmpiricalModel, EPS_QUANTUM};
use crate::error::{Error, Result};
use crate::fraction::{contextual_fraction, BackendChoice, FractionOptions};
use crate::scenario::MeasurementScenario;

pub const MAX_QUBITS: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::PreconditionViolated(format!(
                "{len} amplitudes is not a power of two"
            )));
        }
        let qubits = len.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(Error::SizeLimitExceeded {
                what: "qubits",
                size: qubits as u128,
                limit: MAX_QUBITS as u128,
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::PreconditionViolated(format!(
                "state has squared norm {norm}"
            )));
        }
        Ok(Self { qubits, amplitudes })
    }

    /// Normalizes an arbitrary nonzero vector first.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= 0.0 {
            return Err(Error::PreconditionViolated("zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Self::new(amplitudes)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Applies `diag(e^{-i t/2}, e^{i t/2})` to every qubit.
    pub fn rotate_z(&self, theta: f64) -> Self {
        let n = self.qubits;
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let ones = idx.count_ones() as f64;
                let zeros = n as f64 - ones;
                a * Complex64::from_polar(1.0, theta / 2.0 * (ones - zeros))
            })
            .collect();
        Self {
            qubits: n,
            amplitudes,
        }
    }

    /// Parses `bell` or `ghz<n>`.
    pub fn from_selector(id: &str) -> Result<Self> {
        match id {
            "bell" => ghz_state(2),
            _ => match id.strip_prefix("ghz").map(str::parse::<usize>) {
                Some(Ok(n)) => ghz_state(n),
                _ => Err(Error::Parse(format!(
                    "unknown state `{id}`; expected `bell` or `ghz<n>`"
                ))),
            },
        }
    }
}

/// `(|0...0> + |1...1>) / sqrt(2)`.
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::PreconditionViolated(format!(
            "GHZ state needs at least 2 qubits, got {n}"
        )));
    }
    if n > MAX_QUBITS {
        return Err(Error::SizeLimitExceeded {
            what: "qubits",
            size: n as u128,
            limit: MAX_QUBITS as u128,
        });
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
    amplitudes[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amplitudes[(1 << n) - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    PureState::new(amplitudes)
}

/// Rotates qubit `q` into the eigenbasis of the equatorial observable at
/// `phi`, in place, by stride arithmetic.
fn apply_basis_change(amps: &mut [Complex64], n: usize, q: usize, phi: f64) {
    let stride = 1usize << (n - 1 - q);
    let phase = Complex64::from_polar(FRAC_1_SQRT_2, -phi);
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    for base in (0..amps.len()).filter(|i| i & stride == 0) {
        let (a0, a1) = (amps[base], amps[base | stride]);
        amps[base] = h * a0 + phase * a1;
        amps[base | stride] = h * a0 - phase * a1;
    }
}

/// Outcome distribution when qubit `j` is measured at `angles[j]`.
pub fn outcome_distribution(state: &PureState, angles: &[f64]) -> Vec<f64> {
    let mut amps = state.amplitudes.clone();
    for (q, &phi) in angles.iter().enumerate() {
        apply_basis_change(&mut amps, state.qubits, q, phi);
    }
    amps.iter().map(|a| a.norm_sqr()).collect()
}

/// The model on the `(n, 2, 2)` scenario where qubit `j` chooses between
/// `settings[j][0]` and `settings[j][1]`.
pub fn born_model(state: &PureState, settings: &[[f64; 2]]) -> Result<EmpiricalModel> {
    let n = state.qubits;
    if settings.len() != n {
        return Err(Error::PreconditionViolated(format!(
            "{} settings for {n} qubits",
            settings.len()
        )));
    }
    let scn = MeasurementScenario::bell(n, 2, 2)?;
    let tables = scn
        .contexts()
        .iter()
        .map(|ctx| {
            // Context members are `party * 2 + setting`.
            let angles: Vec<f64> = ctx
                .iter()
                .enumerate()
                .map(|(q, &x)| settings[q][x - 2 * q])
                .collect();
            outcome_distribution(state, &angles)
        })
        .collect();
    EmpiricalModel::with_tolerance(scn, tables, EPS_QUANTUM)
}

/// Same two settings on every qubit.
pub fn uniform_settings(n: usize, phi1: f64, phi2: f64) -> Vec<[f64; 2]> {
    vec![[phi1, phi2]; n]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub phi1: f64,
    pub phi2: f64,
    pub cf: f64,
}

/// `cf` over the `G x G` grid `phi = i pi / G`, row-major in `phi1`.
pub fn sweep(state: &PureState, grid: usize, opts: &FractionOptions) -> Result<Vec<SweepPoint>> {
    if grid == 0 {
        return Err(Error::PreconditionViolated(
            "grid resolution must be positive".into(),
        ));
    }
    let opts = FractionOptions {
        backend: match opts.backend {
            BackendChoice::Auto => BackendChoice::Float,
            b => b,
        },
        ..*opts
    };
    let n = state.qubits;
    (0..grid * grid)
        .into_par_iter()
        .map(|k| {
            let phi1 = (k / grid) as f64 * PI / grid as f64;
            let phi2 = (k % grid) as f64 * PI / grid as f64;
            let e = born_model(state, &uniform_settings(n, phi1, phi2))?;
            Ok(SweepPoint {
                phi1,
                phi2,
                cf: contextual_fraction(&e, &opts)?,
            })
        })
        .collect()
}

/// Grid points whose `cf` is within `tol` of the maximum, in row-major order.
pub fn sweep_maxima(points: &[SweepPoint], tol: f64) -> Vec<SweepPoint> {
    let max = points
        .iter()
        .map(|p| p.cf)
        .fold(f64::NEG_INFINITY, f64::max);
    points
        .iter()
        .copied()
        .filter(|p| p.cf >= max - tol)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhzAngleReport {
    pub phi1: f64,
    pub phi2: f64,
    pub cf: f64,
    pub strongly_contextual: bool,
}

/// Checks that the GHZ(n) model at `((n+k) pi / 2n, k pi / 2n)` has `cf = 1`.
pub fn ghz_angle_check(n: usize, k: usize, opts: &FractionOptions) -> Result<GhzAngleReport> {
    if !(3..=6).contains(&n) || k >= n {
        return Err(Error::PreconditionViolated(format!(
            "need 2 < n <= 6 and k < n, got n = {n}, k = {k}"
        )));
    }
    let phi1 = (n + k) as f64 * PI / (2 * n) as f64;
    let phi2 = k as f64 * PI / (2 * n) as f64;
    let e = born_model(&ghz_state(n)?, &uniform_settings(n, phi1, phi2))?;
    let cf = contextual_fraction(&e, opts)?;
    Ok(GhzAngleReport {
        phi1,
        phi2,
        cf,
        strongly_contextual: (cf - 1.0).abs() <= 1e-6,
    })
}
