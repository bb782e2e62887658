//! Toy atmospheric models and a fixed-step RK4 integrator.
//!
//! Three systems are provided, each with every coefficient exposed as a named
//! parameter:
//!
//! * Lorenz-63: `sigma = 10`, `rho = 28`, `beta = 8/3`.
//! * Two-scale Lorenz-96: `K = 8` slow variables, each coupled to `J = 32`
//!   fast ones, with `F = 20`, `h = 1`, `c = 10`, `b = 10`. Only the slow
//!   variables are returned as the point cloud.
//! * Charney-DeVore six-mode barotropic model with the usual bistable set
//!   `x1_star = 0.95`, `x4_star = -0.76095`, `C = 0.1`, `beta = 1.25`,
//!   `gamma = 0.2`, `b = 0.5`.
//!
//! Users who need exact agreement with a particular published dataset should
//! override these through [`OdeSystem::with_param`].
//!
//! Suggested trajectory defaults ([`TrajectoryConfig::for_system`]): time step
//! 0.01 (Lorenz-63), 0.005 (Lorenz-96) and 0.05 (Charney-DeVore), with a
//! burn-in of 10,000 steps. Charney-DeVore keeps every 10th step so that
//! nearest neighbours are not just consecutive states.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    #[serde(alias = "l63")]
    Lorenz63,
    #[serde(alias = "l96")]
    Lorenz96,
    #[serde(alias = "cdv")]
    CharneyDeVore,
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::Lorenz63 => "l63",
            SystemKind::Lorenz96 => "l96",
            SystemKind::CharneyDeVore => "cdv",
        })
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l63" | "lorenz63" => Ok(SystemKind::Lorenz63),
            "l96" | "lorenz96" => Ok(SystemKind::Lorenz96),
            "cdv" | "charney_devore" => Ok(SystemKind::CharneyDeVore),
            other => Err(Error::InvalidArgument(format!("unknown system `{other}`"))),
        }
    }
}

/// A named vector field plus its coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSystem {
    kind: SystemKind,
    params: BTreeMap<String, f64>,
}

impl OdeSystem {
    pub fn new(kind: SystemKind) -> Self {
        let defaults: &[(&str, f64)] = match kind {
            SystemKind::Lorenz63 => &[("sigma", 10.0), ("rho", 28.0), ("beta", 8.0 / 3.0)],
            SystemKind::Lorenz96 => &[
                ("K", 8.0),
                ("J", 32.0),
                ("F", 20.0),
                ("h", 1.0),
                ("c", 10.0),
                ("b", 10.0),
            ],
            SystemKind::CharneyDeVore => &[
                ("x1_star", 0.95),
                ("x4_star", -0.76095),
                ("C", 0.1),
                ("beta", 1.25),
                ("gamma", 0.2),
                ("b", 0.5),
            ],
        };
        OdeSystem {
            kind,
            params: defaults.iter().map(|&(k, v)| (k.to_owned(), v)).collect(),
        }
    }

    pub fn lorenz63() -> Self {
        Self::new(SystemKind::Lorenz63)
    }

    pub fn lorenz96() -> Self {
        Self::new(SystemKind::Lorenz96)
    }

    pub fn charney_devore() -> Self {
        Self::new(SystemKind::CharneyDeVore)
    }

    /// Overrides one coefficient. Unknown names are rejected.
    pub fn with_param(mut self, name: &str, value: f64) -> Result<Self> {
        match self.params.get_mut(name) {
            Some(slot) => {
                if !value.is_finite() {
                    return Err(Error::InvalidArgument(format!("parameter {name} must be finite")));
                }
                if matches!((self.kind, name), (SystemKind::Lorenz96, "K" | "J"))
                    && (value < 1.0 || value.fract() != 0.0 || (name == "K" && value < 4.0))
                {
                    return Err(Error::InvalidArgument(format!(
                        "Lorenz-96 {name} must be a positive integer (K >= 4)"
                    )));
                }
                *slot = value;
                Ok(self)
            }
            None => Err(Error::InvalidArgument(format!(
                "{} has no parameter `{name}`",
                self.kind
            ))),
        }
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    fn p(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn state_dim(&self) -> usize {
        match self.kind {
            SystemKind::Lorenz63 => 3,
            SystemKind::Lorenz96 => {
                let k = self.p("K") as usize;
                k + k * self.p("J") as usize
            }
            SystemKind::CharneyDeVore => 6,
        }
    }

    /// Number of leading state variables kept in generated clouds.
    pub fn observed_dim(&self) -> usize {
        match self.kind {
            SystemKind::Lorenz96 => self.p("K") as usize,
            _ => self.state_dim(),
        }
    }

    /// Fixed base state around which seeded initial conditions are drawn.
    pub fn base_state(&self) -> Vec<f64> {
        match self.kind {
            SystemKind::Lorenz63 => vec![1.0, 1.0, 1.0],
            SystemKind::Lorenz96 => {
                let k = self.p("K") as usize;
                let mut s = vec![0.0; self.state_dim()];
                s[..k].iter_mut().for_each(|x| *x = 1.0);
                s
            }
            SystemKind::CharneyDeVore => {
                vec![self.p("x1_star"), 0.0, 0.0, self.p("x4_star"), 0.0, 0.0]
            }
        }
    }

    /// Time derivative at `state`.
    pub fn vector_field(&self, state: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim(),
                found: state.len(),
            });
        }
        let mut out = vec![0.0; state.len()];
        self.eval(state, &mut out);
        Ok(out)
    }

    fn eval(&self, s: &[f64], out: &mut [f64]) {
        match self.kind {
            SystemKind::Lorenz63 => {
                let (sigma, rho, beta) = (self.p("sigma"), self.p("rho"), self.p("beta"));
                out[0] = sigma * (s[1] - s[0]);
                out[1] = s[0] * (rho - s[2]) - s[1];
                out[2] = s[0] * s[1] - beta * s[2];
            }
            SystemKind::Lorenz96 => self.eval_l96(s, out),
            SystemKind::CharneyDeVore => self.eval_cdv(s, out),
        }
    }

    fn eval_l96(&self, s: &[f64], out: &mut [f64]) {
        let k = self.p("K") as usize;
        let j = self.p("J") as usize;
        let (f, h, c, b) = (self.p("F"), self.p("h"), self.p("c"), self.p("b"));
        let (x, y) = s.split_at(k);
        let (dx, dy) = out.split_at_mut(k);
        let m = y.len();
        let coupling = h * c / b;
        for i in 0..k {
            let fast: f64 = y[i * j..(i + 1) * j].iter().sum();
            dx[i] = x[(i + k - 1) % k] * (x[(i + 1) % k] - x[(i + k - 2) % k]) - x[i] + f
                - coupling * fast;
        }
        // fast variables form one ring of length K*J
        for i in 0..m {
            dy[i] = -c * b * y[(i + 1) % m] * (y[(i + 2) % m] - y[(i + m - 1) % m]) - c * y[i]
                + coupling * x[i / j];
        }
    }

    fn eval_cdv(&self, s: &[f64], out: &mut [f64]) {
        let c = CdvCoefficients::new(self);
        let [x1, x2, x3, x4, x5, x6] = [s[0], s[1], s[2], s[3], s[4], s[5]];
        let damp = self.p("C");
        let (x1s, x4s) = (self.p("x1_star"), self.p("x4_star"));
        out[0] = c.gamma_t[0] * x3 - damp * (x1 - x1s);
        out[1] = -(c.alpha[0] * x1 - c.beta[0]) * x3 - damp * x2 - c.delta[0] * x4 * x6;
        out[2] = (c.alpha[0] * x1 - c.beta[0]) * x2 - c.gamma[0] * x1 - damp * x3
            + c.delta[0] * x4 * x5;
        out[3] = c.gamma_t[1] * x6 - damp * (x4 - x4s) + c.epsilon * (x2 * x6 - x3 * x5);
        out[4] = -(c.alpha[1] * x1 - c.beta[1]) * x6 - damp * x5 - c.delta[1] * x4 * x3;
        out[5] = (c.alpha[1] * x1 - c.beta[1]) * x5 - c.gamma[1] * x4 - damp * x6
            + c.delta[1] * x4 * x2;
    }
}

/// Derived Charney-DeVore coefficients for wavenumbers m = 1, 2.
struct CdvCoefficients {
    alpha: [f64; 2],
    beta: [f64; 2],
    delta: [f64; 2],
    gamma: [f64; 2],
    gamma_t: [f64; 2],
    epsilon: f64,
}

impl CdvCoefficients {
    fn new(sys: &OdeSystem) -> Self {
        let b = sys.p("b");
        let beta0 = sys.p("beta");
        let gamma0 = sys.p("gamma");
        let b2 = b * b;
        let coef = |m: f64| {
            let m2 = m * m;
            let alpha = 8.0 * SQRT_2 * m2 * (b2 + m2 - 1.0) / (PI * (4.0 * m2 - 1.0) * (b2 + m2));
            let beta = beta0 * b2 / (b2 + m2);
            let delta = 64.0 * SQRT_2 / (15.0 * PI) * (b2 - m2 + 1.0) / (b2 + m2);
            let gamma_t = gamma0 * 4.0 * SQRT_2 * m * b / (PI * (4.0 * m2 - 1.0));
            let gamma = gamma0 * 4.0 * SQRT_2 * m2 * m * b / (PI * (4.0 * m2 - 1.0) * (b2 + m2));
            (alpha, beta, delta, gamma, gamma_t)
        };
        let (a1, be1, d1, g1, gt1) = coef(1.0);
        let (a2, be2, d2, g2, gt2) = coef(2.0);
        CdvCoefficients {
            alpha: [a1, a2],
            beta: [be1, be2],
            delta: [d1, d2],
            gamma: [g1, g2],
            gamma_t: [gt1, gt2],
            epsilon: 16.0 * SQRT_2 / (5.0 * PI),
        }
    }
}

pub fn default_stride(kind: SystemKind) -> usize {
    match kind {
        SystemKind::CharneyDeVore => 10,
        _ => 1,
    }
}

/// How to sample a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub dt: f64,
    /// Steps recorded after burn-in (before striding).
    pub n_steps: usize,
    pub burn_in: usize,
    /// Explicit start state; when absent the seeded perturbation of the base state is used.
    pub initial_state: Option<Vec<f64>>,
    pub stride: usize,
    pub seed: u64,
}

impl TrajectoryConfig {
    /// Defaults for `kind` producing `n_points` cloud points.
    pub fn for_system(kind: SystemKind, n_points: usize) -> Self {
        let stride = default_stride(kind);
        let dt = match kind {
            SystemKind::Lorenz63 => 0.01,
            SystemKind::Lorenz96 => 0.005,
            SystemKind::CharneyDeVore => 0.05,
        };
        TrajectoryConfig {
            dt,
            n_steps: n_points * stride,
            burn_in: 10_000,
            initial_state: None,
            stride,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be >= 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn initial_state(&self, system: &OdeSystem) -> Result<Vec<f64>> {
        match &self.initial_state {
            Some(s) if s.len() != system.state_dim() => Err(Error::DimensionMismatch {
                expected: system.state_dim(),
                found: s.len(),
            }),
            Some(s) => Ok(s.clone()),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                Ok(system
                    .base_state()
                    .into_iter()
                    .map(|x| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        x + 1e-3 * z
                    })
                    .collect())
            }
        }
    }
}

/// Classical fourth-order Runge-Kutta step, in place.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn step(&mut self, system: &OdeSystem, state: &mut [f64], dt: f64) {
        let n = state.len();
        system.eval(state, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = state[i] + 0.5 * dt * self.k1[i];
        }
        system.eval(&self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = state[i] + 0.5 * dt * self.k2[i];
        }
        system.eval(&self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = state[i] + dt * self.k3[i];
        }
        system.eval(&self.tmp, &mut self.k4);
        for i in 0..n {
            state[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Integrates `system` and returns every `stride`-th post-burn-in state
/// (observed variables only).
pub fn integrate(system: &OdeSystem, config: &TrajectoryConfig) -> Result<PointCloud> {
    config.validate()?;
    let mut state = config.initial_state(system)?;
    let mut rk = Rk4::new(state.len());
    let obs = system.observed_dim();
    let mut coords = Vec::with_capacity(config.n_steps.div_ceil(config.stride) * obs);
    for step in 0..config.burn_in + config.n_steps {
        rk.step(system, &mut state, config.dt);
        if !state.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFiniteState { step });
        }
        if step >= config.burn_in && (step - config.burn_in) % config.stride == 0 {
            coords.extend_from_slice(&state[..obs]);
        }
    }
    PointCloud::new(coords, obs)
}
