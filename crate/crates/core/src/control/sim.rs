//! Whole-hand simulation: the central controller, five sensor boards and
//! four driver boards, linked by [`Transport`], around the finger plants.

use nalgebra::Vector3;
use serde::Serialize;

use super::pid::{current_loop_step, Pid, PositionLoop};
use super::plant::step_finger_plant;
use super::watchdog::{protective_decay, LinkState, Watchdog};
use crate::actuation::BridgeCommand;
use crate::bus::{
    counts_to_current, current_to_counts, BoardId, BusLink, BusStats, FrameLogEntry, LossModel, Message, Transport,
};
use crate::config::{HandConfig, MotorSlot, MOTORS_PER_FINGER, MOTOR_COUNT, SLOTS_PER_DRIVER};
use crate::error::{Error, Result};
use crate::kinematics::{HandModel, JointState, FINGER_COUNT, HAND_DOF};
use crate::sensing::{SensorChannel, CHANNELS_PER_FINGER};
use crate::transmission::{joint_to_motor_torque, tendon_tensions, TENDON_COUNT};

const DRIVER_COUNT: usize = BoardId::DRIVER_COUNT as usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransportKind {
    /// Boards exchange messages in memory.
    Direct,
    /// Every message is framed and sent through a seeded lossy channel.
    Bus(LossModel),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub transport: TransportKind,
    pub seed: u64,
    /// Keep a hex log of every frame on the bus.
    pub frame_log: bool,
    /// Include raw ADC codes in telemetry.
    pub raw_codes: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            transport: TransportKind::Direct,
            seed: 0,
            frame_log: false,
            raw_codes: false,
        }
    }
}

/// Per-finger status bits of one outer tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FingerFlags {
    /// No position frame arrived this round; the previous reading is reused.
    pub stale_sensor: bool,
    pub sensor_out_of_range: bool,
    /// The host reference lay outside the joint limits and was clamped.
    pub reference_clamped: bool,
    /// Latched: this finger commands zero current until faults are cleared.
    pub fault: bool,
    pub position_saturated: bool,
    /// A current target was clipped to the driver current limit.
    pub current_saturated: bool,
    /// A motor torque was clipped to the stall torque.
    pub torque_saturated: bool,
}

impl FingerFlags {
    /// Packed form used in host state frames.
    pub fn bits(&self) -> u8 {
        [
            self.stale_sensor,
            self.sensor_out_of_range,
            self.reference_clamped,
            self.fault,
            self.position_saturated,
            self.current_saturated,
            self.torque_saturated,
        ]
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (u8::from(b) << i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DriverFlags {
    /// No current command reached the board this round.
    pub stale_command: bool,
    pub protective_stop: bool,
    /// Outer ticks since the last current command.
    pub link_age: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FingerState {
    pub joints: JointState,
    /// Winding currents of (palm1, palm2, arm), A.
    pub current: Vector3<f64>,
    /// Output-shaft motor torques, N·mm.
    pub motor_torque: Vector3<f64>,
    /// Joint moments, N·mm.
    pub joint_torque: Vector3<f64>,
    pub tendon_tensions: [f64; TENDON_COUNT],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HandState {
    pub fingers: [FingerState; FINGER_COUNT],
    pub outer_ticks: u64,
    pub inner_ticks: u64,
    pub sensor_ticks: u64,
}

impl HandState {
    pub fn joint_angles(&self) -> [f64; HAND_DOF] {
        HandModel::join_joints(&self.fingers.map(|f| f.joints.theta))
    }
}

/// Message counts of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct RoundReport {
    /// Position frames received by the central controller.
    pub sensor_replies: u8,
    /// Command frames that reached a driver board.
    pub commands_delivered: u8,
    /// Driver status frames received by the central controller.
    pub driver_acks: u8,
}

/// One JSON-lines record per outer tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelemetryRecord {
    pub tick: u64,
    pub time_s: f64,
    /// Inner ticks run during this outer tick.
    pub inner_ticks: u32,
    pub inner_ticks_total: u64,
    pub theta: [f64; HAND_DOF],
    pub theta_meas: [f64; HAND_DOF],
    pub theta_ref: [f64; HAND_DOF],
    pub current_a: [f64; MOTOR_COUNT],
    pub current_target_a: [f64; MOTOR_COUNT],
    pub motor_torque_nmm: [f64; MOTOR_COUNT],
    pub joint_torque_nmm: [f64; HAND_DOF],
    pub fingers: [FingerFlags; FINGER_COUNT],
    pub drivers: [DriverFlags; DRIVER_COUNT],
    pub host_link: LinkState,
    pub round: RoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raw_codes: Option<[[u16; CHANNELS_PER_FINGER]; FINGER_COUNT]>,
}

impl TelemetryRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("telemetry contains only finite-safe plain data")
    }
}

#[derive(Debug, Clone)]
struct SensorBoard {
    id: BoardId,
    channels: [SensorChannel; CHANNELS_PER_FINGER],
    codes: [u16; CHANNELS_PER_FINGER],
    out_of_range: bool,
}

impl SensorBoard {
    fn sample(&mut self, joints: &Vector3<f64>, tick: u64, seed: u64) {
        // DIP is locked straight.
        let angles = [joints[0], joints[1], joints[2], 0.0];
        self.out_of_range = false;
        for (c, ch) in self.channels.iter().enumerate() {
            let s = ch.sample(angles[c], tick, seed);
            self.codes[c] = s.code;
            self.out_of_range |= s.out_of_range;
        }
    }

    fn handle(&self, _request: Message) -> Message {
        Message::Positions {
            board: self.id,
            codes: self.codes,
        }
    }
}

#[derive(Debug, Clone)]
struct DriverChannel {
    motor: Option<usize>,
    limit_a: f64,
    pid: Pid,
    setpoint: f64,
    /// Setpoint when the protective stop began.
    stop_from: Option<f64>,
    released: bool,
}

impl DriverChannel {
    /// One inner tick of the channel's current loop.
    fn command(&mut self, protective: bool, alpha: f64, release: f64, measured: f64, dt: f64) -> BridgeCommand {
        if protective && !self.released {
            let from = *self.stop_from.get_or_insert(self.setpoint);
            self.setpoint = protective_decay(self.setpoint, alpha);
            if self.setpoint.abs() <= release * from.abs() {
                self.setpoint = 0.0;
                self.released = true;
                self.pid.reset();
            }
        }
        if self.released {
            BridgeCommand::Release
        } else {
            BridgeCommand::Pwm(current_loop_step(&mut self.pid, self.setpoint, measured, dt))
        }
    }
}

#[derive(Debug, Clone)]
struct DriverBoard {
    id: BoardId,
    channels: [DriverChannel; SLOTS_PER_DRIVER],
    watchdog: Watchdog,
    fresh: bool,
}

impl DriverBoard {
    fn handle(&mut self, request: Message, currents: &[f64; MOTOR_COUNT]) -> Message {
        match request {
            Message::SetCurrents { targets, .. } => {
                for (ch, &t) in self.channels.iter_mut().zip(&targets) {
                    ch.stop_from = None;
                    ch.released = false;
                    ch.setpoint = if ch.motor.is_some() {
                        counts_to_current(t).clamp(-ch.limit_a, ch.limit_a)
                    } else {
                        0.0
                    };
                }
                self.fresh = true;
            }
            Message::ProtectiveStop { .. } => self.watchdog.trip(),
            _ => {}
        }
        Message::DriverStatus {
            board: self.id,
            currents: self
                .channels
                .each_ref()
                .map(|ch| ch.motor.map_or(0, |m| current_to_counts(currents[m]))),
        }
    }

    fn protective(&self) -> bool {
        self.watchdog.tripped()
    }
}

#[derive(Debug, Clone)]
struct Central {
    loops: [PositionLoop; FINGER_COUNT],
    refs: [Vector3<f64>; FINGER_COUNT],
    meas: [Vector3<f64>; FINGER_COUNT],
    faults: [bool; FINGER_COUNT],
    host: Watchdog,
}

/// Deterministic fixed-step simulation of the whole hand.
#[derive(Debug, Clone)]
pub struct HandSimulator {
    config: HandConfig,
    options: SimOptions,
    state: HandState,
    central: Central,
    sensors: Vec<SensorBoard>,
    drivers: Vec<DriverBoard>,
    transport: Transport,
}

fn link_seed(seed: u64) -> u64 {
    seed ^ 0x5EED_B05E_11A7_0001
}

impl HandSimulator {
    pub fn new(config: HandConfig, options: SimOptions) -> Result<Self> {
        config.validate()?;
        let transport = match options.transport {
            TransportKind::Direct => Transport::Direct,
            TransportKind::Bus(model) => {
                model.validate()?;
                let link = BusLink::new(model, link_seed(options.seed));
                Transport::Bus(Box::new(if options.frame_log { link.with_frame_log() } else { link }))
            }
        };
        let sensors = (0..FINGER_COUNT)
            .map(|f| SensorBoard {
                id: BoardId::sensor(f),
                channels: std::array::from_fn(|c| SensorChannel::new(config.sensors, f * CHANNELS_PER_FINGER + c)),
                codes: [0; CHANNELS_PER_FINGER],
                out_of_range: false,
            })
            .collect();
        let mut drivers: Vec<DriverBoard> = (0..DRIVER_COUNT)
            .map(|d| DriverBoard {
                id: BoardId::driver(d),
                channels: std::array::from_fn(|_| DriverChannel {
                    motor: None,
                    limit_a: 0.0,
                    pid: Pid::new(config.control.palm_current_gains),
                    setpoint: 0.0,
                    stop_from: None,
                    released: false,
                }),
                watchdog: Watchdog::new(config.control.timing.watchdog_window),
                fresh: false,
            })
            .collect();
        for (m, &MotorSlot { driver, channel }) in config.bus.motor_map.iter().enumerate() {
            let k = m % MOTORS_PER_FINGER;
            let ch = &mut drivers[driver as usize].channels[channel as usize];
            ch.motor = Some(m);
            ch.limit_a = config.motors.for_slot(k).current_limit_a;
            ch.pid = Pid::new(if k < 2 {
                config.control.palm_current_gains
            } else {
                config.control.forearm_current_gains
            });
        }
        let central = Central {
            loops: std::array::from_fn(|_| PositionLoop::new(config.control.position_gains)),
            refs: [Vector3::zeros(); FINGER_COUNT],
            meas: [Vector3::zeros(); FINGER_COUNT],
            faults: [false; FINGER_COUNT],
            host: Watchdog::new(config.control.timing.watchdog_window),
        };
        let mut sim = Self {
            config,
            options,
            state: HandState::default(),
            central,
            sensors,
            drivers,
            transport,
        };
        sim.set_joints(&[0.0; HAND_DOF])?;
        Ok(sim)
    }

    pub fn config(&self) -> &HandConfig {
        &self.config
    }

    pub fn state(&self) -> &HandState {
        &self.state
    }

    /// Current joint references, radians.
    pub fn references(&self) -> [f64; HAND_DOF] {
        HandModel::join_joints(&self.central.refs)
    }

    /// Places the hand at rest at `joints` (radians) with zero current,
    /// refreshes the sensors and makes `joints` the reference.
    pub fn set_joints(&mut self, joints: &[f64; HAND_DOF]) -> Result<()> {
        crate::error::ensure_finite(joints, "joint angles")?;
        let per_finger = HandModel::split_joints(joints);
        for (f, theta) in per_finger.iter().enumerate() {
            let geom = &self.config.hand.finger(f).geometry;
            if !geom.within_limits(theta) {
                return Err(Error::InvalidArgument(format!(
                    "finger {f} joints {theta:?} outside limits"
                )));
            }
            self.state.fingers[f] = FingerState {
                joints: JointState::at_rest(*theta),
                tendon_tensions: [self.config.plant.tendon_pretension_n; TENDON_COUNT],
                ..FingerState::default()
            };
        }
        self.sample_sensors();
        for (f, refs) in per_finger.iter().enumerate() {
            self.central.meas[f] = self.decode_codes(f);
            self.central.refs[f] = *refs;
            self.central.loops[f].reset();
        }
        for d in &mut self.drivers {
            for ch in &mut d.channels {
                ch.pid.reset();
                ch.setpoint = 0.0;
                ch.stop_from = None;
                ch.released = false;
            }
        }
        Ok(())
    }

    /// Changes the bus fault model mid-run. Fails for a direct transport.
    pub fn set_loss_model(&mut self, model: LossModel) -> Result<()> {
        model.validate()?;
        match &mut self.transport {
            Transport::Bus(link) => {
                link.set_loss_model(model);
                Ok(())
            }
            Transport::Direct => Err(Error::InvalidArgument("direct transport has no loss model".into())),
        }
    }

    pub fn bus_stats(&self) -> BusStats {
        self.transport.stats()
    }

    pub fn take_frame_log(&mut self) -> Vec<FrameLogEntry> {
        self.transport.take_log()
    }

    pub fn clear_faults(&mut self) {
        self.central.faults = [false; FINGER_COUNT];
    }

    /// Present current setpoint of every motor, A.
    pub fn current_targets(&self) -> [f64; MOTOR_COUNT] {
        let mut out = [0.0; MOTOR_COUNT];
        for d in &self.drivers {
            for ch in &d.channels {
                if let Some(m) = ch.motor {
                    out[m] = ch.setpoint;
                }
            }
        }
        out
    }

    fn sample_sensors(&mut self) {
        let tick = self.state.sensor_ticks;
        for (f, board) in self.sensors.iter_mut().enumerate() {
            board.sample(&self.state.fingers[f].joints.theta, tick, self.options.seed);
        }
    }

    fn decode_codes(&self, f: usize) -> Vector3<f64> {
        let codes = self.sensors[f].codes;
        Vector3::from_fn(|j, _| self.config.sensors.code_to_angle(codes[j]))
    }

    /// Advances one outer tick. `refs` (radians) is the host frame of this
    /// tick; `None` means the host sent nothing and the last references hold.
    pub fn tick(&mut self, refs: Option<&[f64; HAND_DOF]>) -> Result<TelemetryRecord> {
        self.tick_observed(refs, |_| {})
    }

    /// [`tick`](Self::tick) that also hands the plant state to `observer`
    /// after every inner tick.
    pub fn tick_observed(
        &mut self,
        refs: Option<&[f64; HAND_DOF]>,
        observer: impl FnMut(&HandState),
    ) -> Result<TelemetryRecord> {
        let timing = self.config.control.timing;
        let outer = self.state.outer_ticks;
        self.transport.set_round(outer);
        let mut flags = [FingerFlags::default(); FINGER_COUNT];
        let mut round = RoundReport::default();

        // Host frame.
        if let Some(refs) = refs {
            for (f, theta) in HandModel::split_joints(refs).iter().enumerate() {
                if theta.iter().any(|v| !v.is_finite()) {
                    self.central.faults[f] = true;
                    continue;
                }
                let geom = &self.config.hand.finger(f).geometry;
                let clamped = geom.clamp_to_limits(theta);
                flags[f].reference_clamped = clamped != *theta;
                self.central.refs[f] = clamped;
            }
        }
        let host_state = self.central.host.tick(refs.is_some());

        // Position reads.
        let Self {
            transport,
            sensors,
            central,
            ..
        } = self;
        for (f, board) in sensors.iter().enumerate() {
            let request = Message::ReadPositions { board: board.id };
            let ex = transport.exchange(request, |m| board.handle(m));
            match ex.response {
                Some(Message::Positions { codes, .. }) => {
                    round.sensor_replies += 1;
                    central.meas[f] = Vector3::from_fn(|j, _| self.config.sensors.code_to_angle(codes[j]));
                }
                _ => flags[f].stale_sensor = true,
            }
            flags[f].sensor_out_of_range = board.out_of_range;
        }

        // Outer position loops and current targets.
        let mut targets = [[0i16; SLOTS_PER_DRIVER]; DRIVER_COUNT];
        let protective = host_state == LinkState::ProtectiveStop;
        if protective {
            central.loops.iter_mut().for_each(PositionLoop::reset);
        } else {
            let dt = timing.outer_dt();
            for (f, flag) in flags.iter_mut().enumerate() {
                let moments = if central.faults[f] {
                    Vector3::zeros()
                } else {
                    match central.loops[f].step(&central.refs[f], &central.meas[f], dt) {
                        Ok(m) => m,
                        Err(_) => {
                            central.faults[f] = true;
                            Vector3::zeros()
                        }
                    }
                };
                flag.position_saturated = central.loops[f].saturated();
                let tau = joint_to_motor_torque(&self.config.routing, &moments);
                for k in 0..MOTORS_PER_FINGER {
                    let m = f * MOTORS_PER_FINGER + k;
                    let motor = self.config.motors.for_slot(k);
                    let ideal = tau[k] / motor.output_torque_constant();
                    let amps = ideal.clamp(-motor.current_limit_a, motor.current_limit_a);
                    flag.current_saturated |= amps != ideal;
                    let slot = self.config.bus.motor_map[m];
                    targets[slot.driver as usize][slot.channel as usize] = current_to_counts(amps);
                }
            }
        }

        // Driver commands.
        let currents = self.motor_currents();
        let Self { transport, drivers, .. } = self;
        let mut driver_flags = [DriverFlags::default(); DRIVER_COUNT];
        for (d, board) in drivers.iter_mut().enumerate() {
            board.fresh = false;
            let request = if protective {
                Message::ProtectiveStop { board: board.id }
            } else {
                Message::SetCurrents {
                    board: board.id,
                    targets: targets[d],
                }
            };
            let ex = transport.exchange(request, |m| board.handle(m, &currents));
            round.commands_delivered += u8::from(ex.request_delivered);
            round.driver_acks += u8::from(matches!(ex.response, Some(Message::DriverStatus { .. })));
            board.watchdog.tick(board.fresh);
            driver_flags[d] = DriverFlags {
                stale_command: !board.fresh,
                protective_stop: board.protective(),
                link_age: board.watchdog.age(),
            };
        }

        // Inner loops and plant.
        let inner = self.run_inner(timing.inner_per_outer(), &mut flags, observer)?;
        for (f, fl) in flags.iter_mut().enumerate() {
            fl.fault = self.central.faults[f];
        }
        self.state.outer_ticks += 1;

        let per_motor = |get: &dyn Fn(&FingerState) -> Vector3<f64>| -> [f64; MOTOR_COUNT] {
            HandModel::join_joints(&self.state.fingers.map(|s| get(&s)))
        };
        Ok(TelemetryRecord {
            tick: outer,
            time_s: self.state.outer_ticks as f64 * timing.outer_dt(),
            inner_ticks: inner,
            inner_ticks_total: self.state.inner_ticks,
            theta: self.state.joint_angles(),
            theta_meas: HandModel::join_joints(&self.central.meas),
            theta_ref: self.references(),
            current_a: per_motor(&|s| s.current),
            current_target_a: self.current_targets(),
            motor_torque_nmm: per_motor(&|s| s.motor_torque),
            joint_torque_nmm: per_motor(&|s| s.joint_torque),
            fingers: flags,
            drivers: driver_flags,
            host_link: host_state,
            round,
            raw_codes: self
                .options
                .raw_codes
                .then(|| std::array::from_fn(|f| self.sensors[f].codes)),
        })
    }

    fn motor_currents(&self) -> [f64; MOTOR_COUNT] {
        HandModel::join_joints(&self.state.fingers.map(|s| s.current))
    }

    fn run_inner(
        &mut self,
        count: u32,
        flags: &mut [FingerFlags; FINGER_COUNT],
        mut observer: impl FnMut(&HandState),
    ) -> Result<u32> {
        let timing = self.config.control.timing;
        let dt = timing.inner_dt();
        let alpha = self.config.control.protective_alpha;
        let release = self.config.control.protective_release;
        let supply = self.config.control.supply_v;
        let per_sensor = u64::from(timing.inner_per_sensor());
        let mut ran = 0;
        for _ in 0..count {
            let currents = self.motor_currents();
            let mut bridge = [BridgeCommand::Release; MOTOR_COUNT];
            for board in &mut self.drivers {
                let protective = board.protective();
                for ch in &mut board.channels {
                    if let Some(m) = ch.motor {
                        bridge[m] = ch.command(protective, alpha, release, currents[m], dt);
                    }
                }
            }
            let motors = [
                &self.config.motors.palm,
                &self.config.motors.palm,
                &self.config.motors.forearm,
            ];
            for (f, fs) in self.state.fingers.iter_mut().enumerate() {
                let base = f * MOTORS_PER_FINGER;
                let step = step_finger_plant(
                    &mut fs.joints,
                    &fs.current,
                    &[bridge[base], bridge[base + 1], bridge[base + 2]],
                    &self.config.hand.finger(f).geometry,
                    &self.config.routing,
                    motors,
                    &self.config.plant,
                    supply,
                    dt,
                )?;
                fs.current = step.current;
                fs.motor_torque = step.motor_torque;
                fs.joint_torque = step.joint_torque;
                fs.tendon_tensions = tendon_tensions(
                    &self.config.routing,
                    &step.motor_torque,
                    self.config.plant.tendon_pretension_n,
                );
                flags[f].torque_saturated |= step.torque_saturated;
            }
            self.state.inner_ticks += 1;
            ran += 1;
            if self.state.inner_ticks.is_multiple_of(per_sensor) {
                self.state.sensor_ticks += 1;
                self.sample_sensors();
            }
            observer(&self.state);
        }
        Ok(ran)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim() -> HandSimulator {
        HandSimulator::new(HandConfig::default(), SimOptions::default()).unwrap()
    }

    #[test]
    fn twenty_inner_ticks_per_outer_tick() {
        let mut s = sim();
        for n in 1..=10 {
            let rec = s.tick(Some(&[0.0; HAND_DOF])).unwrap();
            assert_eq!(rec.inner_ticks, 20);
            assert_eq!(rec.inner_ticks_total, 20 * n);
        }
        assert_eq!(s.state().sensor_ticks, 40);
    }

    #[test]
    fn zero_pose_is_an_equilibrium() {
        let mut s = sim();
        let before = *s.state();
        s.tick(Some(&[0.0; HAND_DOF])).unwrap();
        assert_eq!(s.state().fingers, before.fingers);
    }

    #[test]
    fn out_of_range_reference_is_clamped_and_flagged() {
        let mut s = sim();
        let mut refs = [0.0; HAND_DOF];
        refs[2] = 2.0;
        let rec = s.tick(Some(&refs)).unwrap();
        assert!(rec.fingers[0].reference_clamped);
        assert_eq!(rec.theta_ref[2], std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn non_finite_reference_latches_fault() {
        let mut s = sim();
        let mut refs = [0.0; HAND_DOF];
        refs[4] = f64::NAN;
        let rec = s.tick(Some(&refs)).unwrap();
        assert!(rec.fingers[1].fault);
        assert!(!rec.fingers[0].fault);
        assert!(rec.current_target_a[3..6].iter().all(|&i| i == 0.0));
        s.clear_faults();
        assert!(!s.tick(Some(&[0.0; HAND_DOF])).unwrap().fingers[1].fault);
    }

    #[test]
    fn host_silence_trips_protective_stop() {
        let mut s = sim();
        let window = s.config().control.timing.watchdog_window;
        for _ in 0..window {
            assert_eq!(s.tick(None).unwrap().host_link, LinkState::Normal);
        }
        let rec = s.tick(None).unwrap();
        assert_eq!(rec.host_link, LinkState::ProtectiveStop);
        assert!(rec.drivers.iter().all(|d| d.protective_stop));
    }

    #[test]
    fn telemetry_serializes_to_one_line() {
        let mut s = sim();
        let line = s.tick(Some(&[0.0; HAND_DOF])).unwrap().to_json_line();
        assert!(!line.contains('\n'));
        assert!(line.starts_with("{\"tick\":0,"));
    }
}
