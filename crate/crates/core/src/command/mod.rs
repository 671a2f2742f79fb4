//! Navigation targets and the position-based velocity command, plus the
//! style reward map and PD torque law.

mod patches;

use std::io::Write;

use nalgebra::Isometry3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

pub use patches::{
    check_patch, disk_heights, patches_from_json, patches_to_json, sample_flat_patches, DiskPattern, FlatPatch, PatchConfig,
    SampleBounds,
};

#[derive(Debug, Error, PartialEq)]
pub enum CommandError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("attempt budget exhausted: found {found} of {wanted} flat patches in {attempts} attempts")]
    BudgetExhausted { found: usize, wanted: usize, attempts: usize },
    #[error("no patches to choose targets from")]
    NoPatches,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommandConfig {
    /// Linear gain k_v (1/s).
    pub k_v: f64,
    /// Angular gain k_ω (1/s).
    pub k_omega: f64,
    /// Forward speed limit (m/s).
    pub v_max: f64,
    /// Yaw rate limit (rad/s).
    pub omega_max: f64,
    /// Share of flat-terrain agents that only turn in place.
    pub turning_fraction: f64,
}

impl Default for CommandConfig {
    fn default() -> Self {
        Self {
            k_v: 1.0,
            k_omega: 1.0,
            v_max: 1.5,
            omega_max: 1.0,
            turning_fraction: 0.1,
        }
    }
}

impl CommandConfig {
    pub fn validate(&self) -> Result<(), CommandError> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.k_v) && pos(self.k_omega)) {
            return Err(CommandError::Config("gains must be positive".into()));
        }
        if !(pos(self.v_max) && pos(self.omega_max)) {
            return Err(CommandError::Config("velocity limits must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.turning_fraction) {
            return Err(CommandError::Config("turning_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub v_x: f64,
    pub v_y: f64,
    pub omega_z: f64,
}

impl VelocityCommand {
    pub const ZERO: VelocityCommand = VelocityCommand {
        v_x: 0.0,
        v_y: 0.0,
        omega_z: 0.0,
    };
}

/// `v_x = clip(k_v·x_g, 0, v_max)`, `ω_z = clip(k_ω·atan2(y_g, x_g), ±ω_max)`,
/// `v_y = 0`. A target at the origin yields the zero command.
pub fn velocity_command(x_g: f64, y_g: f64, cfg: &CommandConfig) -> VelocityCommand {
    let heading = if x_g == 0.0 && y_g == 0.0 { 0.0 } else { y_g.atan2(x_g) };
    VelocityCommand {
        v_x: (cfg.k_v * x_g).clamp(0.0, cfg.v_max),
        v_y: 0.0,
        omega_z: (cfg.k_omega * heading).clamp(-cfg.omega_max, cfg.omega_max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agent {
    /// Base pose in the world.
    pub pose: Isometry3<f64>,
    /// Whether the agent stands on flat ground and may receive a turning command.
    pub on_flat: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub command: VelocityCommand,
    /// Index into the patch list; `None` for turning-only agents.
    pub target: Option<usize>,
    pub turning: bool,
}

/// Target position in the base frame.
pub fn to_base_frame(pose: &Isometry3<f64>, target: &Point) -> Point {
    pose.inverse_transform_point(target)
}

/// Picks a target for every agent and converts it into a command.
///
/// Agent `i` draws from its own ChaCha8 stream of `seed`. A flat-ground agent
/// becomes a turning agent with probability `turning_fraction`; otherwise it
/// gets a uniformly chosen patch ahead of it (positive base-frame x), or any
/// patch when none is ahead.
pub fn assign_commands(agents: &[Agent], patches: &[FlatPatch], cfg: &CommandConfig, seed: u64) -> Result<Vec<Assignment>, CommandError> {
    cfg.validate()?;
    if patches.is_empty() {
        return Err(CommandError::NoPatches);
    }
    Ok(agents
        .iter()
        .enumerate()
        .map(|(i, agent)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let turn_draw: f64 = rng.random();
            if agent.on_flat && turn_draw < cfg.turning_fraction {
                return Assignment {
                    command: VelocityCommand {
                        v_x: 0.0,
                        v_y: 0.0,
                        omega_z: rng.random_range(-cfg.omega_max..=cfg.omega_max),
                    },
                    target: None,
                    turning: true,
                };
            }
            let local: Vec<Point> = patches.iter().map(|p| to_base_frame(&agent.pose, &p.position())).collect();
            let ahead: Vec<usize> = (0..patches.len()).filter(|&k| local[k].x > 0.0).collect();
            let target = if ahead.is_empty() {
                rng.random_range(0..patches.len())
            } else {
                ahead[rng.random_range(0..ahead.len())]
            };
            Assignment {
                command: velocity_command(local[target].x, local[target].y, cfg),
                target: Some(target),
                turning: false,
            }
        })
        .collect())
}

/// `max(0, 1 − 0.25·(d − 1)²)`.
pub fn style_reward(d: f64) -> f64 {
    (1.0 - 0.25 * (d - 1.0).powi(2)).max(0.0)
}

/// `τ = k_p·(a − q) − k_d·q̇`, elementwise.
pub fn pd_torque(a: &[f64], q: &[f64], qdot: &[f64], k_p: &[f64], k_d: &[f64]) -> Result<Vec<f64>, CommandError> {
    let n = a.len();
    if [q.len(), qdot.len(), k_p.len(), k_d.len()].iter().any(|&l| l != n) {
        return Err(CommandError::LengthMismatch(format!(
            "a={n}, q={}, qdot={}, k_p={}, k_d={}",
            q.len(),
            qdot.len(),
            k_p.len(),
            k_d.len()
        )));
    }
    Ok((0..n).map(|i| k_p[i] * (a[i] - q[i]) - k_d[i] * qdot[i]).collect())
}

/// One row of a command trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub v_x: f64,
    pub omega_z: f64,
    /// Patch index, empty for turning-only commands.
    pub target_id: Option<usize>,
}

/// Writes `t,v_x,omega_z,target_id` CSV.
pub fn write_command_trace<W: Write>(out: W, rows: &[TraceRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Translation3, UnitQuaternion};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn cfg() -> CommandConfig {
        CommandConfig::default()
    }

    #[test]
    fn closed_form_examples() {
        let c = velocity_command(1.0, 0.0, &cfg());
        assert_eq!((c.v_x, c.v_y, c.omega_z), (1.0, 0.0, 0.0));
        let c = velocity_command(-1.0, 0.0, &cfg());
        assert_eq!((c.v_x, c.omega_z), (0.0, 1.0));
        let c = velocity_command(1.0, 1.0, &cfg());
        assert_eq!(c.omega_z, FRAC_PI_4);
        assert_eq!(c.v_x, 1.0);
        assert_eq!(velocity_command(0.0, 0.0, &cfg()), VelocityCommand::ZERO);
    }

    #[test]
    fn reward_and_torque_examples() {
        assert_eq!(style_reward(1.0), 1.0);
        assert_eq!(style_reward(-1.0), 0.0);
        assert_eq!(style_reward(0.0), 0.75);
        assert_eq!(style_reward(1e9), 0.0);
        let t = pd_torque(&[0.1], &[0.0], &[0.5], &[100.0], &[2.0]).unwrap();
        assert!((t[0] - 9.0).abs() < 1e-12);
        assert_eq!(pd_torque(&[1.0], &[1.0], &[0.0], &[5.0], &[5.0]).unwrap(), vec![0.0]);
        assert!(pd_torque(&[1.0, 2.0], &[1.0], &[0.0], &[5.0], &[5.0]).is_err());
    }

    #[test]
    fn single_agent_straight_ahead() {
        let agents = [Agent {
            pose: Isometry3::identity(),
            on_flat: false,
        }];
        let patches = [FlatPatch { x: 2.0, y: 0.0, z: 0.0 }];
        let a = assign_commands(&agents, &patches, &cfg(), 0).unwrap();
        assert_eq!(a[0].target, Some(0));
        assert_eq!(a[0].command.omega_z, 0.0);
        assert_eq!(a[0].command.v_x, 1.5);
    }

    #[test]
    fn targets_use_the_full_base_rotation() {
        let pose = Isometry3::from_parts(Translation3::new(1.0, 1.0, 0.0), UnitQuaternion::from_euler_angles(0.0, 0.0, FRAC_PI_2));
        let p = to_base_frame(&pose, &Point::new(1.0, 3.0, 0.0));
        assert!((p - Point::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn full_turning_fraction_turns_every_flat_agent() {
        let c = CommandConfig {
            turning_fraction: 1.0,
            ..cfg()
        };
        let agents: Vec<Agent> = (0..50)
            .map(|i| Agent {
                pose: Isometry3::translation(i as f64, 0.0, 0.0),
                on_flat: i % 2 == 0,
            })
            .collect();
        let patches = [FlatPatch { x: 100.0, y: 0.0, z: 0.0 }];
        let out = assign_commands(&agents, &patches, &c, 7).unwrap();
        for (a, s) in agents.iter().zip(&out) {
            assert_eq!(s.turning, a.on_flat);
            if a.on_flat {
                assert_eq!(s.command.v_x, 0.0);
                assert!(s.command.omega_z.abs() <= 1.0);
            }
        }
        assert_eq!(assign_commands(&agents, &[], &c, 7), Err(CommandError::NoPatches));
    }

    #[test]
    fn trace_csv_layout() {
        let rows = [
            TraceRow {
                t: 0.0,
                v_x: 1.0,
                omega_z: 0.5,
                target_id: Some(3),
            },
            TraceRow {
                t: 0.02,
                v_x: 0.0,
                omega_z: -0.25,
                target_id: None,
            },
        ];
        let mut buf = Vec::new();
        write_command_trace(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,v_x,omega_z,target_id\n0.0,1.0,0.5,3\n0.02,0.0,-0.25,\n");
    }
}
