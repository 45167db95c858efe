//! Parallel local/edge computation model.
//!
//! Each task is split into a part processed on the device within the
//! deadline and a remainder offloaded over the uplink to the edge server,
//! whose clock is shared among the offloaders in proportion to their
//! offloaded bits. Bits are real-valued throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeConfig {
    /// Maximum local clock of each device, cycles/s.
    pub f_max: f64,
    /// Edge server clock, cycles/s.
    pub f_cpu: f64,
    /// CPU cycles needed per task bit.
    pub cycles_per_bit: f64,
    /// Effective switched capacitance.
    pub switched_capacitance: f64,
    /// Per-task deadline, seconds.
    pub deadline: f64,
    /// Length of one environment step, seconds.
    pub step_duration: f64,
    /// Task sizes are uniform over `[task_min, task_max]` bits.
    pub task_min: f64,
    pub task_max: f64,
}

impl Default for ComputeConfig {
    fn default() -> Self {
        Self {
            f_max: 1e9,
            f_cpu: 100e9,
            cycles_per_bit: 500.0,
            switched_capacitance: 1e-27,
            deadline: 1e-3,
            step_duration: 1e-3,
            task_min: 2500.0,
            task_max: 7500.0,
        }
    }
}

impl ComputeConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("f_max", self.f_max),
            ("f_cpu", self.f_cpu),
            ("cycles_per_bit", self.cycles_per_bit),
            ("switched_capacitance", self.switched_capacitance),
            ("deadline", self.deadline),
            ("step_duration", self.step_duration),
            ("task_min", self.task_min),
            ("task_max", self.task_max),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.task_min > self.task_max {
            return Err(Error::invalid("task_min exceeds task_max"));
        }
        if self.deadline > self.step_duration {
            return Err(Error::invalid("deadline exceeds the step duration"));
        }
        Ok(())
    }

    /// Largest number of bits the device can process before the deadline at
    /// clock `f_local`.
    pub fn local_capacity(&self, f_local: f64) -> f64 {
        self.deadline * f_local / self.cycles_per_bit
    }
}

/// One user's task for the current step, split between device and edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskState {
    pub bits: f64,
    pub local_bits: f64,
    pub offload_bits: f64,
}

fn check_fraction(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// Splits `bits` given the local clock fraction `alpha`.
pub fn split_task(bits: f64, alpha: f64, cfg: &ComputeConfig) -> Result<TaskState> {
    check_fraction("alpha", alpha)?;
    if !(bits >= 0.0) {
        return Err(Error::invalid(format!(
            "task size {bits} must be non-negative"
        )));
    }
    let f_local = alpha * cfg.f_max;
    // Both parts come from subtractions so that they sum to `bits` exactly.
    let offload_bits = bits - bits.min(cfg.local_capacity(f_local));
    let local_bits = bits - offload_bits;
    Ok(TaskState {
        bits,
        local_bits,
        offload_bits,
    })
}

/// Local execution time (s) and energy (J). No local work costs nothing.
pub fn local_exec(task: &TaskState, alpha: f64, cfg: &ComputeConfig) -> (f64, f64) {
    let f_local = alpha * cfg.f_max;
    if task.local_bits == 0.0 || f_local == 0.0 {
        return (0.0, 0.0);
    }
    let cycles = task.local_bits * cfg.cycles_per_bit;
    let time = (cycles / f_local).min(cfg.deadline);
    let energy = cfg.switched_capacitance * cycles * f_local * f_local;
    (time, energy)
}

/// Edge clock given to each user, proportional to its offloaded bits.
pub fn edge_share(offload_bits: &[f64], cfg: &ComputeConfig) -> Vec<f64> {
    let total: f64 = offload_bits.iter().sum();
    if total <= 0.0 {
        return vec![0.0; offload_bits.len()];
    }
    offload_bits.iter().map(|b| b / total * cfg.f_cpu).collect()
}

/// Delays and energy of the offloaded part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffloadCost {
    pub t_tr: f64,
    pub t_comp: f64,
    pub t_offload: f64,
    pub energy: f64,
}

/// Cost of offloading `task.offload_bits` at uplink rate `rate` with power
/// `power` and edge clock share `f_edge`.
///
/// A positive offload over a zero-rate link never completes: the delays are
/// `f64::INFINITY` and no transmit energy is charged.
pub fn offload_exec(
    task: &TaskState,
    rate: f64,
    power: f64,
    f_edge: f64,
    cfg: &ComputeConfig,
) -> OffloadCost {
    let bits = task.offload_bits;
    if bits <= 0.0 {
        return OffloadCost {
            t_tr: 0.0,
            t_comp: 0.0,
            t_offload: 0.0,
            energy: 0.0,
        };
    }
    let t_comp = if f_edge > 0.0 {
        bits * cfg.cycles_per_bit / f_edge
    } else {
        f64::INFINITY
    };
    if !(rate > 0.0) {
        return OffloadCost {
            t_tr: f64::INFINITY,
            t_comp,
            t_offload: f64::INFINITY,
            energy: 0.0,
        };
    }
    let t_tr = bits / rate;
    OffloadCost {
        t_tr,
        t_comp,
        t_offload: t_tr + t_comp,
        energy: power * t_tr,
    }
}

/// Everything that happened to one user during one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserOutcome {
    pub task: TaskState,
    pub alpha: f64,
    pub eta: f64,
    pub power: f64,
    pub rate: f64,
    pub f_edge: f64,
    pub t_local: f64,
    pub t_tr: f64,
    pub t_comp: f64,
    pub t_offload: f64,
    pub delay: f64,
    pub e_local: f64,
    pub e_offload: f64,
    pub energy: f64,
    pub deadline_met: bool,
}

/// Per-step outcome across all users plus the shared reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub users: Vec<UserOutcome>,
    pub reward: f64,
}

impl StepOutcome {
    pub fn total_energy(&self) -> f64 {
        self.users.iter().map(|u| u.energy).sum()
    }

    pub fn deadlines_met(&self) -> usize {
        self.users.iter().filter(|u| u.deadline_met).count()
    }
}

/// Combines the local and offload pieces into a user outcome.
#[allow(clippy::too_many_arguments)]
pub fn total_outcome(
    task: TaskState,
    alpha: f64,
    eta: f64,
    power: f64,
    rate: f64,
    f_edge: f64,
    local: (f64, f64),
    offload: OffloadCost,
    deadline: f64,
) -> UserOutcome {
    let (t_local, e_local) = local;
    let delay = t_local.max(offload.t_offload);
    UserOutcome {
        task,
        alpha,
        eta,
        power,
        rate,
        f_edge,
        t_local,
        t_tr: offload.t_tr,
        t_comp: offload.t_comp,
        t_offload: offload.t_offload,
        delay,
        e_local,
        e_offload: offload.energy,
        energy: e_local + offload.energy,
        deadline_met: delay <= deadline,
    }
}

/// Runs the compute pipeline for all users given their tasks, clock
/// fractions, powers and achieved rates.
pub fn evaluate_step(
    bits: &[f64],
    alpha: &[f64],
    eta: &[f64],
    power: &[f64],
    rates: &[f64],
    cfg: &ComputeConfig,
) -> Result<Vec<UserOutcome>> {
    let k = bits.len();
    if [alpha.len(), eta.len(), power.len(), rates.len()]
        .iter()
        .any(|&n| n != k)
    {
        return Err(Error::invalid("per-user inputs have different lengths"));
    }
    let tasks = bits
        .iter()
        .zip(alpha)
        .map(|(&b, &a)| split_task(b, a, cfg))
        .collect::<Result<Vec<_>>>()?;
    let offloads: Vec<f64> = tasks.iter().map(|t| t.offload_bits).collect();
    let shares = edge_share(&offloads, cfg);
    Ok((0..k)
        .map(|i| {
            let local = local_exec(&tasks[i], alpha[i], cfg);
            let off = offload_exec(&tasks[i], rates[i], power[i], shares[i], cfg);
            total_outcome(
                tasks[i],
                alpha[i],
                eta[i],
                power[i],
                rates[i],
                shares[i],
                local,
                off,
                cfg.deadline,
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ComputeConfig {
        ComputeConfig::default()
    }

    #[test]
    fn split_examples() {
        let c = cfg();
        let t = split_task(5000.0, 0.0, &c).unwrap();
        assert_eq!((t.local_bits, t.offload_bits), (0.0, 5000.0));
        let t = split_task(5000.0, 1.0, &c).unwrap();
        assert!((t.local_bits - 2000.0).abs() < 1e-9);
        assert!((t.offload_bits - 3000.0).abs() < 1e-9);
        let t = split_task(1000.0, 1.0, &c).unwrap();
        assert_eq!((t.local_bits, t.offload_bits), (1000.0, 0.0));
        assert!(split_task(1000.0, 1.2, &c).is_err());
        assert!(split_task(1000.0, -0.1, &c).is_err());
        assert!(split_task(-1.0, 0.5, &c).is_err());
    }

    #[test]
    fn local_exec_examples() {
        let c = cfg();
        let t = split_task(5000.0, 1.0, &c).unwrap();
        let (time, energy) = local_exec(&t, 1.0, &c);
        assert!((time - 1e-3).abs() < 1e-15);
        assert!((energy - 1e-3).abs() < 1e-15);
        let t0 = split_task(5000.0, 0.0, &c).unwrap();
        assert_eq!(local_exec(&t0, 0.0, &c), (0.0, 0.0));
        // fixed local bits, half the clock: a quarter of the energy
        let fixed = TaskState {
            bits: 400.0,
            local_bits: 400.0,
            offload_bits: 0.0,
        };
        let (_, e1) = local_exec(&fixed, 0.8, &c);
        let (_, e2) = local_exec(&fixed, 0.4, &c);
        assert!((e1 / e2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn edge_share_examples() {
        let c = ComputeConfig {
            f_cpu: 1e11,
            ..cfg()
        };
        assert_eq!(edge_share(&[3000.0, 1000.0], &c), vec![7.5e10, 2.5e10]);
        assert_eq!(edge_share(&[0.0, 1234.0], &c), vec![0.0, 1e11]);
        assert_eq!(edge_share(&[0.0, 0.0], &c), vec![0.0, 0.0]);
    }

    #[test]
    fn offload_examples() {
        let c = cfg();
        let t = split_task(5000.0, 1.0, &c).unwrap();
        let o = offload_exec(&t, 1e7, 0.1, 1e11, &c);
        assert!((o.t_tr - 3e-4).abs() < 1e-15);
        assert!((o.energy - 3e-5).abs() < 1e-15);
        let none = split_task(1000.0, 1.0, &c).unwrap();
        let o = offload_exec(&none, 0.0, 0.1, 0.0, &c);
        assert_eq!(
            (o.t_tr, o.t_comp, o.t_offload, o.energy),
            (0.0, 0.0, 0.0, 0.0)
        );
        let stuck = offload_exec(&t, 0.0, 0.0, 1e11, &c);
        assert!(stuck.t_offload.is_infinite());
        assert_eq!(stuck.energy, 0.0);
    }

    #[test]
    fn uniform_edge_delay() {
        let c = cfg();
        let bits = [4000.0, 6000.0, 2500.0];
        let alpha = [0.2, 0.5, 0.0];
        let out = evaluate_step(&bits, &alpha, &[1.0; 3], &[0.1; 3], &[1e7; 3], &c).unwrap();
        let total: f64 = out.iter().map(|u| u.task.offload_bits).sum();
        let want = total * c.cycles_per_bit / c.f_cpu;
        for u in &out {
            assert!((u.t_comp - want).abs() < 1e-15);
        }
    }

    #[test]
    fn outcome_combination() {
        let c = cfg();
        let task = TaskState {
            bits: 5000.0,
            local_bits: 2000.0,
            offload_bits: 3000.0,
        };
        let off = OffloadCost {
            t_tr: 5e-4,
            t_comp: 5e-5,
            t_offload: 5.5e-4,
            energy: 2e-5,
        };
        let u = total_outcome(
            task,
            1.0,
            1.0,
            0.1,
            1e7,
            1e11,
            (1e-3, 1e-3),
            off,
            c.deadline,
        );
        assert_eq!(u.delay, 1e-3);
        assert!(u.deadline_met);
        assert_eq!(u.energy, 1e-3 + 2e-5);
        let late = OffloadCost {
            t_offload: 1.2e-3,
            ..off
        };
        let u = total_outcome(
            task,
            1.0,
            1.0,
            0.1,
            1e7,
            1e11,
            (1e-3, 1e-3),
            late,
            c.deadline,
        );
        assert!(!u.deadline_met);
    }
}
