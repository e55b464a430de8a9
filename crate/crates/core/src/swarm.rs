//! Global-best PSO and the four-subswarm heterogeneous variant (CHPSO).
//!
//! Both optimizers minimize the negated thresholding criterion over a box
//! `[0, 255]^m`. Positions are continuous and decoded to integer thresholds
//! only for evaluation.
//!
//! Random draws are consumed in a fixed order so that a seed fully determines
//! a run:
//!
//! * initialization, per subswarm: `m` position draws for each particle,
//!   then `m` velocity draws for each particle;
//! * each velocity update that has cognitive and social terms draws an
//!   `m`-vector for the `c1` term, then an `m`-vector for the `c2` term.
//!   In a CHPSO iteration the order for particle index `i` is subswarm 1,
//!   subswarm 2, subswarm 3; subswarm 4 draws nothing.
//!
//! The generator is ChaCha8 (`rand_chacha`) seeded with `seed_from_u64`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::image_io::LEVELS;
use crate::objectives::{decode_position, ObjectiveSpec, ThresholdVector};

const POSITION_MAX: f64 = (LEVELS - 1) as f64;

/// Offset added after shifting the basic-subswarm fitnesses to be positive.
pub const GAMMA_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SwarmError {
    #[error("invalid swarm parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SwarmAlgorithm {
    Pso,
    Chpso,
}

impl SwarmAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            SwarmAlgorithm::Pso => "pso",
            SwarmAlgorithm::Chpso => "chpso",
        }
    }

    fn subswarm_count(self) -> usize {
        match self {
            SwarmAlgorithm::Pso => 1,
            SwarmAlgorithm::Chpso => 4,
        }
    }
}

impl fmt::Display for SwarmAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SwarmAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pso" => Ok(SwarmAlgorithm::Pso),
            "chpso" => Ok(SwarmAlgorithm::Chpso),
            other => Err(format!("unknown swarm algorithm `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmParams {
    pub n_particles: usize,
    pub n_iterations: usize,
    pub c1: f64,
    pub c2: f64,
    /// Inertia at the first iteration; it moves linearly to `inertia_end`.
    pub inertia_start: f64,
    pub inertia_end: f64,
    /// Weights on previous position, personal best and global best in the
    /// exploration subswarm's position update. Must sum to 1.
    pub impact_factors: [f64; 3],
    pub v_max: f64,
    pub seed: u64,
}

impl Default for SwarmParams {
    fn default() -> Self {
        Self {
            n_particles: 20,
            n_iterations: 100,
            c1: 1.49,
            c2: 1.49,
            inertia_start: 0.4,
            inertia_end: 0.9,
            impact_factors: [1.0 / 6.0, 1.0 / 3.0, 1.0 / 2.0],
            v_max: POSITION_MAX / 2.0,
            seed: 0,
        }
    }
}

impl SwarmParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, algorithm: SwarmAlgorithm) -> Result<(), SwarmError> {
        let bad = |msg: String| Err(SwarmError::InvalidParams(msg));
        if self.n_particles == 0 {
            return bad("n_particles must be positive".into());
        }
        if algorithm == SwarmAlgorithm::Chpso && !self.n_particles.is_multiple_of(4) {
            return bad(format!(
                "CHPSO needs n_particles divisible by 4, got {}",
                self.n_particles
            ));
        }
        if self.n_iterations == 0 {
            return bad("n_iterations must be positive".into());
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return bad(format!("v_max must be positive, got {}", self.v_max));
        }
        for (name, v) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("inertia_start", self.inertia_start),
            ("inertia_end", self.inertia_end),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.impact_factors.iter().any(|&a| a.is_nan() || a <= 0.0) {
            return bad("impact factors must be positive".into());
        }
        let sum: f64 = self.impact_factors.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return bad(format!("impact factors must sum to 1, got {sum}"));
        }
        Ok(())
    }

    /// Inertia weight for 0-based iteration `t`.
    pub fn inertia(&self, t: usize) -> f64 {
        if self.n_iterations <= 1 {
            return self.inertia_start;
        }
        let frac = t as f64 / (self.n_iterations - 1) as f64;
        self.inertia_start + (self.inertia_end - self.inertia_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Fitness at the current position.
    pub fitness: f64,
}

impl Particle {
    /// Particle at rest whose personal best is its current position.
    pub fn at_rest(position: Vec<f64>, fitness: f64) -> Self {
        let dim = position.len();
        Self {
            best_position: position.clone(),
            position,
            velocity: vec![0.0; dim],
            best_fitness: fitness,
            fitness,
        }
    }

    fn record(&mut self, fitness: f64) {
        self.fitness = fitness;
        if fitness < self.best_fitness {
            self.best_fitness = fitness;
            self.best_position.clone_from(&self.position);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subswarm {
    pub particles: Vec<Particle>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
}

impl Subswarm {
    pub fn new(particles: Vec<Particle>) -> Self {
        let mut best = 0;
        for (i, p) in particles.iter().enumerate() {
            if p.best_fitness < particles[best].best_fitness {
                best = i;
            }
        }
        Self {
            best_position: particles[best].best_position.clone(),
            best_fitness: particles[best].best_fitness,
            particles,
        }
    }

    fn absorb(&mut self, idx: usize) {
        let p = &self.particles[idx];
        if p.best_fitness < self.best_fitness {
            self.best_fitness = p.best_fitness;
            self.best_position.clone_from(&p.best_position);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub subswarms: Vec<Subswarm>,
    pub gbest_position: Vec<f64>,
    pub gbest_fitness: f64,
    pub iteration: usize,
    pub evaluations: u64,
}

impl SwarmState {
    pub fn from_subswarms(subswarms: Vec<Subswarm>) -> Self {
        let mut state = Self {
            gbest_position: subswarms[0].best_position.clone(),
            gbest_fitness: subswarms[0].best_fitness,
            subswarms,
            iteration: 0,
            evaluations: 0,
        };
        state.refresh_gbest();
        state
    }

    /// Random initial swarm: positions uniform in the box, velocities uniform
    /// in `[-v_max, v_max]`.
    pub fn initialize<R: Rng + ?Sized>(
        algorithm: SwarmAlgorithm,
        spec: &ObjectiveSpec,
        dim: usize,
        params: &SwarmParams,
        rng: &mut R,
    ) -> Result<Self, SwarmError> {
        params.validate(algorithm)?;
        if dim == 0 || dim >= LEVELS {
            return Err(SwarmError::InvalidParams(format!(
                "number of thresholds must be in 1..={}, got {dim}",
                LEVELS - 1
            )));
        }
        let groups = algorithm.subswarm_count();
        let per_group = params.n_particles / groups;
        let mut evaluations = 0;
        let mut subswarms = Vec::with_capacity(groups);
        for _ in 0..groups {
            let positions: Vec<Vec<f64>> = (0..per_group)
                .map(|_| (0..dim).map(|_| rng.gen::<f64>() * POSITION_MAX).collect())
                .collect();
            let velocities: Vec<Vec<f64>> = (0..per_group)
                .map(|_| {
                    (0..dim)
                        .map(|_| (2.0 * rng.gen::<f64>() - 1.0) * params.v_max)
                        .collect()
                })
                .collect();
            let particles = positions
                .into_iter()
                .zip(velocities)
                .map(|(pos, vel)| {
                    let f = evaluate(spec, &pos);
                    evaluations += 1;
                    let mut p = Particle::at_rest(pos, f);
                    p.velocity = vel;
                    p
                })
                .collect();
            subswarms.push(Subswarm::new(particles));
        }
        let mut state = Self::from_subswarms(subswarms);
        state.evaluations = evaluations;
        Ok(state)
    }

    /// Swarm best as the argmin over subswarm bests; earlier subswarms win ties
    /// and the incumbent is kept unless strictly improved.
    fn refresh_gbest(&mut self) {
        for sub in &self.subswarms {
            if sub.best_fitness < self.gbest_fitness {
                self.gbest_fitness = sub.best_fitness;
                self.gbest_position.clone_from(&sub.best_position);
            }
        }
    }

    pub fn thresholds(&self) -> ThresholdVector {
        decode_position(&self.gbest_position)
    }
}

#[inline]
fn evaluate(spec: &ObjectiveSpec, position: &[f64]) -> f64 {
    spec.minimization_fitness(&decode_position(position))
}

#[inline]
fn clamp_velocity(v: f64, v_max: f64) -> f64 {
    v.clamp(-v_max, v_max)
}

#[inline]
fn clamp_position(x: f64) -> f64 {
    x.clamp(0.0, POSITION_MAX)
}

fn draw<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen::<f64>()).collect()
}

/// Standard inertia / cognitive / social velocity update, followed by the
/// ballistic position update. Used for PSO and the CHPSO basic subswarms.
fn inertial_move<R: Rng + ?Sized>(
    p: &mut Particle,
    gbest: &[f64],
    inertia: f64,
    params: &SwarmParams,
    rng: &mut R,
) {
    let dim = p.position.len();
    let r1 = draw(rng, dim);
    let r2 = draw(rng, dim);
    for d in 0..dim {
        let x = p.position[d];
        let v = inertia * p.velocity[d]
            + params.c1 * r1[d] * (p.best_position[d] - x)
            + params.c2 * r2[d] * (gbest[d] - x);
        let v = clamp_velocity(v, params.v_max);
        p.velocity[d] = v;
        p.position[d] = clamp_position(x + v);
    }
}

/// Coefficients applied to the two basic-subswarm velocities in the adaptive
/// subswarm update, given their (minimization) fitnesses.
///
/// Fitnesses are shifted so the better one maps to `GAMMA_EPSILON`; the
/// coefficient `gamma / gamma_s` is therefore larger for the better particle.
pub fn adaptive_weights(f1: f64, f2: f64) -> (f64, f64) {
    let floor = f1.min(f2);
    let g1 = f1 - floor + GAMMA_EPSILON;
    let g2 = f2 - floor + GAMMA_EPSILON;
    let gamma = g1 + g2;
    (gamma / g1, gamma / g2)
}

/// One iteration of global-best PSO on a single-group state.
pub fn pso_step<R: Rng + ?Sized>(
    state: &mut SwarmState,
    spec: &ObjectiveSpec,
    params: &SwarmParams,
    rng: &mut R,
) {
    let inertia = params.inertia(state.iteration);
    let gbest = state.gbest_position.clone();
    for sub in &mut state.subswarms {
        for i in 0..sub.particles.len() {
            let p = &mut sub.particles[i];
            inertial_move(p, &gbest, inertia, params, rng);
            let f = evaluate(spec, &p.position);
            p.record(f);
            state.evaluations += 1;
            sub.absorb(i);
        }
    }
    state.refresh_gbest();
    state.iteration += 1;
}

/// One CHPSO iteration over four equal subswarms.
///
/// Subswarms 1 and 2 are basic PSO groups. Particle `i` of subswarm 3 blends
/// the fresh velocities of particle `i` in subswarms 1 and 2, weighted by
/// their fitness. Particle `i` of subswarm 4 moves by the velocity difference
/// `V1 + V2 - V3` from a convex blend of its position, personal best and the
/// swarm best.
pub fn chpso_step<R: Rng + ?Sized>(
    state: &mut SwarmState,
    spec: &ObjectiveSpec,
    params: &SwarmParams,
    rng: &mut R,
) {
    debug_assert_eq!(state.subswarms.len(), 4);
    let inertia = params.inertia(state.iteration);
    let gbest = state.gbest_position.clone();
    let [_, w_pbest, w_gbest] = params.impact_factors;
    let n = state.subswarms[0].particles.len();
    let dim = gbest.len();
    let [s1, s2, s3, s4] = &mut state.subswarms[..] else {
        unreachable!("CHPSO state must have four subswarms");
    };

    for i in 0..n {
        // basic subswarms
        inertial_move(&mut s1.particles[i], &gbest, inertia, params, rng);
        inertial_move(&mut s2.particles[i], &gbest, inertia, params, rng);
        let f1 = evaluate(spec, &s1.particles[i].position);
        let f2 = evaluate(spec, &s2.particles[i].position);
        s1.particles[i].record(f1);
        s2.particles[i].record(f2);
        let (k1, k2) = adaptive_weights(f1, f2);

        // adaptive subswarm
        let v1 = &s1.particles[i].velocity;
        let v2 = &s2.particles[i].velocity;
        let p3 = &mut s3.particles[i];
        let r1 = draw(rng, dim);
        let r2 = draw(rng, dim);
        for d in 0..dim {
            let x = p3.position[d];
            let v = inertia * (k1 * v1[d] + k2 * v2[d] + p3.velocity[d])
                + params.c1 * r1[d] * (p3.best_position[d] - x)
                + params.c2 * r2[d] * (gbest[d] - x);
            let v = clamp_velocity(v, params.v_max);
            p3.velocity[d] = v;
            p3.position[d] = clamp_position(x + v);
        }
        let f3 = evaluate(spec, &p3.position);
        p3.record(f3);

        // exploration subswarm; alpha1 * x + alpha2 * pbest + alpha3 * gbest
        // is written relative to x so that a consensus state maps to itself
        // exactly in floating point.
        let v3 = &s3.particles[i].velocity;
        let p4 = &mut s4.particles[i];
        for d in 0..dim {
            let v = clamp_velocity(v1[d] + v2[d] - v3[d], params.v_max);
            let x = p4.position[d];
            let blended = x + w_pbest * (p4.best_position[d] - x) + w_gbest * (gbest[d] - x);
            p4.velocity[d] = v;
            p4.position[d] = clamp_position(blended + v);
        }
        let f4 = evaluate(spec, &p4.position);
        p4.record(f4);

        state.evaluations += 4;
        s1.absorb(i);
        s2.absorb(i);
        s3.absorb(i);
        s4.absorb(i);
    }
    state.refresh_gbest();
    state.iteration += 1;
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub thresholds: ThresholdVector,
    /// Criterion value (maximization form) at `thresholds`.
    pub maximization_fitness: f64,
    /// Swarm best minimization fitness after each iteration.
    pub trace: Vec<f64>,
    pub evaluations: u64,
    pub wall_time: Duration,
}

/// Runs `params.n_iterations` iterations from a seeded random start.
pub fn run(
    algorithm: SwarmAlgorithm,
    spec: &ObjectiveSpec,
    m: usize,
    params: &SwarmParams,
) -> Result<OptimizationResult, SwarmError> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut state = SwarmState::initialize(algorithm, spec, m, params, &mut rng)?;
    let mut trace = Vec::with_capacity(params.n_iterations);
    for _ in 0..params.n_iterations {
        match algorithm {
            SwarmAlgorithm::Pso => pso_step(&mut state, spec, params, &mut rng),
            SwarmAlgorithm::Chpso => chpso_step(&mut state, spec, params, &mut rng),
        }
        trace.push(state.gbest_fitness);
    }
    Ok(OptimizationResult {
        thresholds: state.thresholds(),
        maximization_fitness: -state.gbest_fitness,
        trace,
        evaluations: state.evaluations,
        wall_time: started.elapsed(),
    })
}
