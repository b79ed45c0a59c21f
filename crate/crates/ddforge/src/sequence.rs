//! Pi-pulse sequences per qubit and the standard sequence families
//! (free evolution, CPMG, UDD, XY-8, Heisenberg-Weyl cycle, custom).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseAxis {
    X,
    Y,
}

/// One instantaneous (nominally pi) pulse at `time` within (0, T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseEvent {
    pub time: f64,
    pub axis: PulseAxis,
    pub nominal_angle: f64,
}

impl PulseEvent {
    pub fn pi(time: f64, axis: PulseAxis) -> Self {
        Self {
            time,
            axis,
            nominal_angle: PI,
        }
    }
}

/// Ordered per-qubit pulse events over a storage window [0, T].
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub total_time: f64,
    pub qubits: [Vec<PulseEvent>; 2],
}

impl PulseSequence {
    pub fn new(total_time: f64, qubits: [Vec<PulseEvent>; 2]) -> Result<Self> {
        let seq = Self { total_time, qubits };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_time > 0.0) {
            return Err(DdError::InvalidSequence("total time must be > 0".into()));
        }
        for (q, events) in self.qubits.iter().enumerate() {
            let mut prev = 0.0;
            for e in events {
                if !(e.time > 0.0 && e.time < self.total_time) {
                    return Err(DdError::InvalidSequence(format!(
                        "qubit {q}: pulse time {} outside (0, {})",
                        e.time, self.total_time
                    )));
                }
                if e.time <= prev {
                    return Err(DdError::InvalidSequence(format!(
                        "qubit {q}: pulse times not strictly increasing at {}",
                        e.time
                    )));
                }
                prev = e.time;
            }
        }
        Ok(())
    }

    pub fn pulse_times(&self, qubit: usize) -> Vec<f64> {
        self.qubits[qubit].iter().map(|e| e.time).collect()
    }

    pub fn pulse_count(&self, qubit: usize) -> usize {
        self.qubits[qubit].len()
    }

    /// Same pulse pattern rescaled to a new window length.
    pub fn stretched(&self, new_total: f64) -> Result<Self> {
        let scale = new_total / self.total_time;
        let qubits = [0, 1].map(|q| {
            self.qubits[q]
                .iter()
                .map(|e| PulseEvent {
                    time: e.time * scale,
                    ..*e
                })
                .collect()
        });
        Self::new(new_total, qubits)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SequenceWire::from(self)).expect("sequence serialization")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let wire: SequenceWire = serde_json::from_value(value.clone())
            .map_err(|e| DdError::InvalidSequence(format!("bad sequence JSON: {e}")))?;
        wire.try_into()
    }
}

/// Wire format: {"T_us": ..., "qubits": [[{"t_us": ..., "axis": "X"}...], [...]]}
#[derive(Serialize, Deserialize)]
struct SequenceWire {
    #[serde(rename = "T_us")]
    t_us: f64,
    qubits: Vec<Vec<EventWire>>,
}

#[derive(Serialize, Deserialize)]
struct EventWire {
    t_us: f64,
    axis: PulseAxis,
}

impl From<&PulseSequence> for SequenceWire {
    fn from(seq: &PulseSequence) -> Self {
        Self {
            t_us: seq.total_time,
            qubits: seq
                .qubits
                .iter()
                .map(|events| {
                    events
                        .iter()
                        .map(|e| EventWire {
                            t_us: e.time,
                            axis: e.axis,
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<SequenceWire> for PulseSequence {
    type Error = DdError;

    fn try_from(wire: SequenceWire) -> Result<Self> {
        if wire.qubits.len() != 2 {
            return Err(DdError::InvalidSequence(format!(
                "expected 2 qubit event lists, got {}",
                wire.qubits.len()
            )));
        }
        let mut qubits: [Vec<PulseEvent>; 2] = [Vec::new(), Vec::new()];
        for (q, events) in wire.qubits.into_iter().enumerate() {
            qubits[q] = events
                .into_iter()
                .map(|e| PulseEvent::pi(e.t_us, e.axis))
                .collect();
        }
        PulseSequence::new(wire.t_us, qubits)
    }
}

/// No pulses on either qubit: y_i(t) = 1.
pub fn free_evolution(total_time: f64) -> Result<PulseSequence> {
    PulseSequence::new(total_time, [Vec::new(), Vec::new()])
}

/// CPMG-N: pulses at t_k = (k - 1/2) T / N, axis X, both qubits.
pub fn cpmg(n: usize, total_time: f64) -> Result<PulseSequence> {
    if n == 0 {
        return Err(DdError::InvalidSequence(
            "CPMG needs N >= 1 (use free_evolution for N = 0)".into(),
        ));
    }
    let events: Vec<PulseEvent> = (1..=n)
        .map(|k| PulseEvent::pi((k as f64 - 0.5) * total_time / n as f64, PulseAxis::X))
        .collect();
    PulseSequence::new(total_time, [events.clone(), events])
}

/// UDD-N: pulses at t_j = T sin^2(j pi / (2N + 2)), axis X, both qubits.
pub fn udd(n: usize, total_time: f64) -> Result<PulseSequence> {
    if n == 0 {
        return Err(DdError::InvalidSequence("UDD needs N >= 1".into()));
    }
    let events: Vec<PulseEvent> = (1..=n)
        .map(|j| {
            let t = total_time * (j as f64 * PI / (2.0 * (n as f64 + 1.0))).sin().powi(2);
            PulseEvent::pi(t, PulseAxis::X)
        })
        .collect();
    PulseSequence::new(total_time, [events.clone(), events])
}

/// XY-8: 8 reps equally spaced pulses at CPMG timing with per-block axis
/// pattern X,Y,X,Y,Y,X,Y,X, both qubits.
pub fn xy8(total_time: f64, repetitions: usize) -> Result<PulseSequence> {
    if repetitions == 0 {
        return Err(DdError::InvalidSequence("XY-8 needs repetitions >= 1".into()));
    }
    const PATTERN: [PulseAxis; 8] = [
        PulseAxis::X,
        PulseAxis::Y,
        PulseAxis::X,
        PulseAxis::Y,
        PulseAxis::Y,
        PulseAxis::X,
        PulseAxis::Y,
        PulseAxis::X,
    ];
    let n = 8 * repetitions;
    let events: Vec<PulseEvent> = (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) * total_time / n as f64;
            PulseEvent::pi(t, PATTERN[k % 8])
        })
        .collect();
    PulseSequence::new(total_time, [events.clone(), events])
}

/// Symmetrized two-qubit cycle whose modulation integrates to zero on
/// each qubit: pi_X pulses at T/4 and 3T/4, mirrored about T/2. The
/// contract is the zero-mean property Y_i(0, T) = 0, which cancels the
/// first-order average of the sigma_z noise operators.
pub fn heisenberg_weyl_cycle(total_time: f64) -> Result<PulseSequence> {
    let events = vec![
        PulseEvent::pi(0.25 * total_time, PulseAxis::X),
        PulseEvent::pi(0.75 * total_time, PulseAxis::X),
    ];
    PulseSequence::new(total_time, [events.clone(), events])
}

/// Arbitrary per-qubit timing with X axes; used by the optimizer.
pub fn custom(times: [&[f64]; 2], total_time: f64) -> Result<PulseSequence> {
    let qubits = [0, 1].map(|q| {
        times[q]
            .iter()
            .map(|&t| PulseEvent::pi(t, PulseAxis::X))
            .collect()
    });
    PulseSequence::new(total_time, qubits)
}

/// Identical timing on both qubits.
pub fn custom_symmetric(times: &[f64], total_time: f64) -> Result<PulseSequence> {
    custom([times, times], total_time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn free_evolution_is_empty() {
        let seq = free_evolution(1.0).unwrap();
        assert_eq!(seq.pulse_count(0), 0);
        assert_eq!(seq.pulse_count(1), 0);
        assert_relative_eq!(seq.total_time, 1.0);
    }

    #[test]
    fn cpmg_timing() {
        let seq = cpmg(1, 1.0).unwrap();
        assert_eq!(seq.pulse_times(0), vec![0.5]);
        let seq = cpmg(4, 1.0).unwrap();
        assert_eq!(seq.pulse_times(0), vec![0.125, 0.375, 0.625, 0.875]);
        assert!(cpmg(0, 1.0).is_err());
    }

    #[test]
    fn cpmg_symmetric_about_midpoint() {
        for n in 1..10 {
            let times = cpmg(n, 2.0).unwrap().pulse_times(0);
            for (k, &t) in times.iter().enumerate() {
                assert_relative_eq!(t + times[times.len() - 1 - k], 2.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn udd_timing() {
        let seq = udd(1, 1.0).unwrap();
        assert_relative_eq!(seq.pulse_times(0)[0], 0.5, epsilon = 1e-12);
        let t2 = udd(2, 1.0).unwrap().pulse_times(0);
        assert_relative_eq!(t2[0], 0.25, epsilon = 1e-12);
        assert_relative_eq!(t2[1], 0.75, epsilon = 1e-12);
        let t3 = udd(3, 1.0).unwrap().pulse_times(0);
        assert_relative_eq!(t3[0], (PI / 8.0).sin().powi(2), epsilon = 1e-12);
        assert_relative_eq!(t3[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(t3[2], (3.0 * PI / 8.0).sin().powi(2), epsilon = 1e-12);
    }

    #[test]
    fn udd_reflection_symmetry() {
        for n in 1..9 {
            let times = udd(n, 1.0).unwrap().pulse_times(0);
            for j in 0..n {
                assert_relative_eq!(times[j] + times[n - 1 - j], 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn xy8_pattern_and_timing() {
        let seq = xy8(1.0, 1).unwrap();
        let events = &seq.qubits[0];
        assert_eq!(events.len(), 8);
        assert_relative_eq!(events[0].time, 0.0625);
        assert_relative_eq!(events[7].time, 0.9375);
        let axes: Vec<PulseAxis> = events.iter().map(|e| e.axis).collect();
        assert_eq!(
            axes,
            vec![
                PulseAxis::X,
                PulseAxis::Y,
                PulseAxis::X,
                PulseAxis::Y,
                PulseAxis::Y,
                PulseAxis::X,
                PulseAxis::Y,
                PulseAxis::X
            ]
        );
        let seq2 = xy8(1.0, 2).unwrap();
        assert_eq!(seq2.pulse_count(0), 16);
        assert_relative_eq!(seq2.qubits[0][0].time, 1.0 / 32.0);
    }

    #[test]
    fn custom_rejects_bad_times() {
        assert!(custom_symmetric(&[0.5, 0.5], 1.0).is_err()); // duplicates
        assert!(custom_symmetric(&[0.7, 0.3], 1.0).is_err()); // unordered
        assert!(custom_symmetric(&[1.5], 1.0).is_err()); // out of range
        let hahn = custom_symmetric(&[0.5], 1.0).unwrap();
        assert_eq!(hahn, cpmg(1, 1.0).unwrap());
    }

    #[test]
    fn stretch_rescales_times() {
        let seq = cpmg(4, 1.0).unwrap().stretched(2.0).unwrap();
        assert_eq!(seq.pulse_times(0), vec![0.25, 0.75, 1.25, 1.75]);
    }

    #[test]
    fn json_round_trip() {
        let seq = xy8(1.0, 1).unwrap();
        let json = seq.to_json();
        assert!(json.get("T_us").is_some());
        let back = PulseSequence::from_json(&json).unwrap();
        assert_eq!(back, seq);
    }
}
