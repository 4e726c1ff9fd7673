//! The sensorimotor and episodic demonstrations.

use fpeng::codec::decode_categorical;
use fpeng::{Error, Metacluster, Result, SyntheticCognition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{EpisodicConfig, SensorimotorConfig};
use crate::corpus::{EpisodicCorpus, SensorimotorCorpus, MOTOR};

/// Offset separating the noise stream from the corpus stream of one seed.
const NOISE_STREAM: u64 = 0x5eed_0001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternOutcome {
    pub pattern: usize,
    pub sound: usize,
    pub expected_motor: usize,
    /// `None` when completion found nothing to recall.
    pub decoded_motor: Option<usize>,
    pub confidence: Option<f64>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseOutcome {
    pub flip_rate: f64,
    pub trials: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorimotorReport {
    pub seed: u64,
    pub patterns: usize,
    pub passes: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub no_match: bool,
    pub results: Vec<PatternOutcome>,
    pub noise: Option<NoiseOutcome>,
}

/// Motor symbol and confidence completed from `sensors`, or `None` on no match.
fn complete_motor(
    mc: &Metacluster,
    corpus: &SensorimotorCorpus,
    sensors: &fpeng::ChannelInputs,
) -> Result<Option<(usize, f64)>> {
    match mc.complete(sensors, MOTOR) {
        Ok(v) => decode_categorical(&v, &corpus.motor).map(Some),
        Err(Error::NoMatch(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn train_sensorimotor(cfg: &SensorimotorConfig, seed: u64) -> Result<(SensorimotorCorpus, Metacluster)> {
    let corpus = SensorimotorCorpus::generate(cfg.patterns, cfg.image_side, cfg.block_size, seed)?;
    let mut mc = Metacluster::new(corpus.spec(cfg.policy))?;
    for _ in 0..cfg.passes {
        for i in 0..corpus.patterns.len() {
            mc.learn(&corpus.training_inputs(i)?)?;
        }
    }
    Ok((corpus, mc))
}

pub fn run_sensorimotor(cfg: &SensorimotorConfig, seed: u64) -> Result<(SensorimotorReport, Metacluster)> {
    let (corpus, mc) = train_sensorimotor(cfg, seed)?;
    let mut results = Vec::with_capacity(corpus.patterns.len());
    for (i, p) in corpus.patterns.iter().enumerate() {
        let got = complete_motor(&mc, &corpus, &corpus.sensors(i)?)?;
        results.push(PatternOutcome {
            pattern: i,
            sound: p.sound,
            expected_motor: p.motor,
            decoded_motor: got.map(|g| g.0),
            confidence: got.map(|g| g.1),
            correct: got.is_some_and(|g| g.0 == p.motor),
        });
    }
    let no_match = results.iter().any(|r| r.decoded_motor.is_none());
    let noise = if no_match || cfg.noise_trials == 0 {
        None
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(NOISE_STREAM));
        let mut correct = 0;
        for i in 0..corpus.patterns.len() {
            for _ in 0..cfg.noise_trials {
                let sensors = corpus.noisy_sensors(i, cfg.noise, &mut rng)?;
                if complete_motor(&mc, &corpus, &sensors)?.is_some_and(|g| g.0 == corpus.patterns[i].motor) {
                    correct += 1;
                }
            }
        }
        let trials = cfg.noise_trials * corpus.patterns.len();
        Some(NoiseOutcome {
            flip_rate: cfg.noise,
            trials,
            correct,
            accuracy: correct as f64 / trials as f64,
        })
    };
    let correct = results.iter().filter(|r| r.correct).count();
    let report = SensorimotorReport {
        seed,
        patterns: corpus.patterns.len(),
        passes: cfg.passes,
        correct,
        accuracy: correct as f64 / corpus.patterns.len().max(1) as f64,
        no_match,
        results,
        noise,
    };
    Ok((report, mc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextOutcome {
    pub context: usize,
    pub expected_motor: usize,
    pub decoded_motor: Option<usize>,
    pub confidence: Option<f64>,
    pub fell_back: bool,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    /// `None` for the reactive agent.
    pub episode_len: Option<usize>,
    pub correct: usize,
    pub total: usize,
    pub contexts: Vec<ContextOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodicReport {
    pub seed: u64,
    pub passes: usize,
    pub reactive: WindowReport,
    /// Whether the reactive agent produced the same motor vector in every context.
    pub reactive_identical: bool,
    pub episodic: Vec<WindowReport>,
}

impl EpisodicReport {
    pub fn window(&self, episode_len: usize) -> Option<&WindowReport> {
        self.episodic.iter().find(|w| w.episode_len == Some(episode_len))
    }
}

pub fn train_episodic(corpus: &EpisodicCorpus, cfg: &EpisodicConfig, episode_len: usize) -> Result<SyntheticCognition> {
    let mc = Metacluster::new(corpus.spec(cfg.policy))?;
    let mut agent = SyntheticCognition::episodic(mc, MOTOR, episode_len, cfg.policy)?;
    for _ in 0..cfg.passes {
        for seq in &corpus.sequences {
            agent.reset_context();
            for &step in seq {
                agent.train_step(&corpus.step_inputs(step)?)?;
            }
        }
    }
    agent.reset_context();
    Ok(agent)
}

fn outcome(context: usize, expected: usize, decoded: Option<(usize, f64)>, fell_back: bool) -> ContextOutcome {
    ContextOutcome {
        context,
        expected_motor: expected,
        decoded_motor: decoded.map(|d| d.0),
        confidence: decoded.map(|d| d.1),
        fell_back,
        correct: decoded.is_some_and(|d| d.0 == expected),
    }
}

fn summarize(episode_len: Option<usize>, contexts: Vec<ContextOutcome>) -> WindowReport {
    WindowReport {
        episode_len,
        correct: contexts.iter().filter(|c| c.correct).count(),
        total: contexts.len(),
        contexts,
    }
}

/// Replays every context in acting mode and scores the probe step.
fn evaluate_episodic(agent: &mut SyntheticCognition, corpus: &EpisodicCorpus) -> Result<WindowReport> {
    let n = agent.declarative().map(|d| d.episode_len());
    let mut contexts = Vec::new();
    for (ctx, seq) in corpus.sequences.iter().enumerate() {
        agent.reset_context();
        for (t, &(sensor, motor)) in seq.iter().enumerate().take(corpus.probe + 1) {
            let r = agent.step(&corpus.sensors(sensor)?)?;
            if t == corpus.probe {
                contexts.push(outcome(ctx, motor, r.decoded_motor, r.fell_back));
            }
        }
    }
    agent.reset_context();
    Ok(summarize(n, contexts))
}

pub fn run_episodic(cfg: &EpisodicConfig, windows: &[usize], seed: u64) -> Result<EpisodicReport> {
    let corpus = EpisodicCorpus::generate(cfg.block_size, seed)?;
    let mut episodic = Vec::new();
    let mut reactive = None;
    for &n in windows {
        let mut agent = train_episodic(&corpus, cfg, n)?;
        if reactive.is_none() {
            let mut contexts = Vec::new();
            let mut motors = Vec::new();
            for (ctx, seq) in corpus.sequences.iter().enumerate() {
                let (sensor, motor) = seq[corpus.probe];
                let r = agent.react(&corpus.sensors(sensor)?)?;
                contexts.push(outcome(ctx, motor, r.decoded_motor, false));
                motors.push(r.motor);
            }
            let identical = motors.windows(2).all(|w| w[0] == w[1]);
            reactive = Some((summarize(None, contexts), identical));
        }
        episodic.push(evaluate_episodic(&mut agent, &corpus)?);
    }
    let (reactive, reactive_identical) =
        reactive.ok_or_else(|| Error::Argument("no episode window configured".into()))?;
    Ok(EpisodicReport {
        seed,
        passes: cfg.passes,
        reactive,
        reactive_identical,
        episodic,
    })
}
