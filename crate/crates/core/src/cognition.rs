//! A motoperceptive metacluster, optionally paired with a declarative memory
//! over its root input vectors, exposed as a single agent step.
//!
//! Reactive agents complete the motor channel from the current sensors only.
//! Episodic agents also look at the frames they acted on before, so the same
//! sensor state can map to different actions depending on what preceded it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterPolicy, Trace};
use crate::codec::{decode_categorical, CodecBinding};
use crate::episodic::{slot_name, DeclarativeMemory};
use crate::error::{Error, Result};
use crate::metacluster::{ChannelInputs, MCResult, Metacluster};
use crate::repr::{segment, ActivationVector, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Reactive,
    Episodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCognition {
    motoperceptive: Metacluster,
    declarative: Option<DeclarativeMemory>,
    mode: Mode,
    motor: String,
    /// Root frames (and masks) of recent steps, oldest first, at most `n - 1`.
    history: VecDeque<(ActivationVector, Mask)>,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub motoperceptive: MCResult,
    /// `None` while the declarative window is warming up or when absent.
    pub episode: Option<Trace>,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub motor: ActivationVector,
    /// Symbol and confidence when the motor channel is categorical.
    pub decoded_motor: Option<(usize, f64)>,
    pub mode_used: Mode,
    /// Episodic mode was requested but the context window was not full yet.
    pub fell_back: bool,
    pub motoperceptive: MCResult,
    pub episode: Option<Trace>,
}

impl SyntheticCognition {
    /// A reactive agent.
    pub fn reactive(motoperceptive: Metacluster, motor: &str) -> Result<Self> {
        Self::build(motoperceptive, motor, None, Mode::Reactive)
    }

    /// An agent with declarative memory over windows of `episode_len` frames.
    pub fn episodic(
        motoperceptive: Metacluster,
        motor: &str,
        episode_len: usize,
        policy: ClusterPolicy,
    ) -> Result<Self> {
        let frame_dim = motoperceptive.root_layout().total();
        let dm = DeclarativeMemory::new(episode_len, frame_dim, policy)?;
        Self::build(motoperceptive, motor, Some(dm), Mode::Episodic)
    }

    pub(crate) fn build(
        motoperceptive: Metacluster,
        motor: &str,
        declarative: Option<DeclarativeMemory>,
        mode: Mode,
    ) -> Result<Self> {
        motoperceptive.channel(motor)?;
        if motoperceptive.spec().channels.len() < 2 {
            return Err(Error::arg("needs at least one sensor channel besides the motor"));
        }
        if motoperceptive.root_child_towards(motor)?.is_none() {
            return Err(Error::arg("motor channel cannot feed the root directly"));
        }
        if let Some(dm) = &declarative {
            if dm.frame_dim() != motoperceptive.root_layout().total() {
                return Err(Error::arg(
                    "declarative frames must match the motoperceptive root input",
                ));
            }
        } else if mode == Mode::Episodic {
            return Err(Error::arg("episodic mode needs a declarative memory"));
        }
        Ok(Self {
            motoperceptive,
            declarative,
            mode,
            motor: motor.to_string(),
            history: VecDeque::new(),
        })
    }

    pub fn motoperceptive(&self) -> &Metacluster {
        &self.motoperceptive
    }

    pub fn declarative(&self) -> Option<&DeclarativeMemory> {
        self.declarative.as_ref()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) -> Result<()> {
        if mode == Mode::Episodic && self.declarative.is_none() {
            return Err(Error::arg("episodic mode needs a declarative memory"));
        }
        self.mode = mode;
        Ok(())
    }

    pub fn motor_channel(&self) -> &str {
        &self.motor
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Clears the acting history and the declarative window. Learned
    /// footprints are kept.
    pub fn reset_context(&mut self) {
        self.history.clear();
        if let Some(dm) = &mut self.declarative {
            dm.reset_buffer();
        }
    }

    /// One supervised step with every channel, motor included, present.
    pub fn train_step(&mut self, inputs: &ChannelInputs) -> Result<TrainReport> {
        for ch in &self.motoperceptive.spec().channels {
            if !inputs.contains_key(&ch.name) {
                return Err(Error::arg(format!("training step is missing channel `{}`", ch.name)));
            }
        }
        let result = self.motoperceptive.learn(inputs)?;
        let episode = match &mut self.declarative {
            Some(dm) => dm.observe(result.root().input.clone(), true)?,
            None => None,
        };
        Ok(TrainReport {
            motoperceptive: result,
            episode,
        })
    }

    /// History-free motor completion. Never mutates.
    pub fn react(&self, sensors: &ChannelInputs) -> Result<StepResult> {
        self.check_sensors(sensors)?;
        let result = self.motoperceptive.query(sensors)?;
        let motor = self.motor_from_result(&result)?;
        Ok(StepResult {
            decoded_motor: self.decode(&motor)?,
            motor,
            mode_used: Mode::Reactive,
            fell_back: false,
            motoperceptive: result,
            episode: None,
        })
    }

    /// Acts on `sensors` (motor absent). Episodic mode records the step's
    /// root frame in the acting history; no footprint is ever learned.
    pub fn step(&mut self, sensors: &ChannelInputs) -> Result<StepResult> {
        if self.mode == Mode::Reactive {
            return self.react(sensors);
        }
        self.check_sensors(sensors)?;
        let dm = self.declarative.as_ref().expect("episodic mode has declarative memory");
        let context = dm.episode_len() - 1;
        let result = self.motoperceptive.query(sensors)?;
        let root = result.root();
        self.history.push_back((root.input.clone(), root.mask.clone()));
        while self.history.len() > context {
            self.history.pop_front();
        }
        if self.history.len() < context {
            let mut reactive = self.react(sensors)?;
            reactive.fell_back = true;
            return Ok(reactive);
        }

        // The current frame sits in the second-to-last slot with its motor
        // segment masked; the following slot is left open.
        let mut slots: Vec<Option<(&ActivationVector, &Mask)>> =
            self.history.iter().map(|(f, m)| Some((f, m))).collect();
        slots.push(None);
        let trace = dm.recall(&slots)?;
        let episode = trace
            .projection()
            .ok_or_else(|| Error::NoMatch("episode memory is empty".into()))?;
        let current = segment(episode, dm.layout(), &slot_name(context - 1))?;
        let motor = self
            .motoperceptive
            .descend_from_root(&current, &self.motor)?
            .ok_or_else(|| Error::NoMatch("motor cluster is empty".into()))?;
        Ok(StepResult {
            decoded_motor: self.decode(&motor)?,
            motor,
            mode_used: Mode::Episodic,
            fell_back: false,
            motoperceptive: result,
            episode: Some(trace),
        })
    }

    fn check_sensors(&self, sensors: &ChannelInputs) -> Result<()> {
        if sensors.contains_key(&self.motor) {
            return Err(Error::arg(format!(
                "motor channel `{}` must be absent when acting",
                self.motor
            )));
        }
        Ok(())
    }

    fn motor_from_result(&self, result: &MCResult) -> Result<ActivationVector> {
        let ch = self.motoperceptive.channel_index(&self.motor)?;
        result.leaf_projections[ch]
            .clone()
            .ok_or_else(|| Error::NoMatch("no motor response available".into()))
    }

    fn decode(&self, motor: &ActivationVector) -> Result<Option<(usize, f64)>> {
        match &self.motoperceptive.channel(&self.motor)?.codec {
            CodecBinding::Categorical(spec) => decode_categorical(motor, spec).map(Some),
            _ => Ok(None),
        }
    }

    pub(crate) fn parts(
        &self,
    ) -> (
        &Metacluster,
        Option<&DeclarativeMemory>,
        &VecDeque<(ActivationVector, Mask)>,
    ) {
        (&self.motoperceptive, self.declarative.as_ref(), &self.history)
    }

    pub(crate) fn restore_history(&mut self, history: Vec<(ActivationVector, Mask)>) -> Result<()> {
        let dim = self.motoperceptive.root_layout().total();
        let cap = self.declarative.as_ref().map_or(0, |dm| dm.episode_len() - 1);
        if history.len() > cap {
            return Err(Error::invalid("history", "longer than the context window"));
        }
        for (i, (f, m)) in history.iter().enumerate() {
            if f.len() != dim || m.len() != dim {
                return Err(Error::invalid(format!("history[{i}]"), "wrong frame dimension"));
            }
        }
        self.history = history.into();
        Ok(())
    }
}
