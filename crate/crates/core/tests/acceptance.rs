//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use eelsim::actuation::{ActuatorBiasModel, StrokeGain};
use eelsim::angle::wrap;
use eelsim::control::{
    actuator_mapping, control_step, heading_controller, lateral_controller, ControlOutput,
    ControllerGains, ControllerState, LineReference, PathReference, TurnDirection,
};
use eelsim::dynamics::{propulsor_wrench, step, Disturbance, RobotGeometry, RobotState, Wrench};
use eelsim::harness::config::{best_tail, RunConfig};
use eelsim::harness::sim::{simulate, Driver, Plant, Scenario};
use eelsim::harness::{run_closed_loop, run_open_loop, run_sweep, run_turn};
use eelsim::hydro::{
    calibrate_thrust_map, drag_wrench, mean_thrust, DragModel, TailGeometry, ThrustMap,
};
use eelsim::sensing::{filtered_velocities, FirFilter, FirSpec, MocapNoise, MocapSample};

const FS: f64 = 250.0;
const DT: f64 = 1.0 / FS;

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn e(err: impl std::fmt::Display) -> String {
    err.to_string()
}

fn calibrated_map(cfg: &RunConfig) -> Result<ThrustMap, String> {
    // the same path as the `calibrate` subcommand: table -> map -> JSON -> map
    let drag = cfg.robots.single.drag(&cfg.fluid).map_err(e)?;
    let map = calibrate_thrust_map(&cfg.speed_table().map_err(e)?, &drag).map_err(e)?;
    let json = serde_json::to_string(&map).map_err(e)?;
    serde_json::from_str(&json).map_err(e)
}

fn single_plant<'a>(cfg: &RunConfig, map: &'a ThrustMap, tail: TailGeometry, frequency: f64) -> Result<Plant<'a>, String> {
    Ok(Plant {
        geometry: RobotGeometry::single(),
        drag: cfg.robots.single.drag(&cfg.fluid).map_err(e)?,
        tail,
        map,
        frequency,
        bias_displacement: None,
        offset: cfg.actuation.offset,
        bias: ActuatorBiasModel::default(),
        stroke: StrokeGain::default(),
        envelope_gain: cfg.actuation.envelope_torque_gain,
        disturbance: Disturbance::none(),
    })
}

fn straight() -> PathReference {
    PathReference::Straight(LineReference::new([0.0, 0.0], 0.0))
}

fn noiseless_swim(plant: &Plant<'_>, duty: f64, duration: f64) -> Result<eelsim::harness::sim::TrialLog, String> {
    simulate(
        plant,
        &Scenario {
            initial: RobotState::default(),
            path: straight(),
            driver: Driver::Single { duty },
            duration,
            settle: 0.0,
            sample_rate: FS,
            noise: MocapNoise::none(),
            seed: 0,
            mirror: false,
        },
    )
    .map_err(e)
}

/// 1. Calibrated knots are reproduced by 60 s noiseless swims.
fn calibration_fidelity() -> Outcome {
    let start = Instant::now();
    let cfg = RunConfig::default();
    let map = calibrated_map(&cfg)?;
    let cases = [
        (best_tail(), 5.0, 0.10, 0.0151),
        (TailGeometry::rectangular(0.020, 0.004).map_err(e)?, 1.0, 0.08, 0.0047),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (tail, f, duty, target) in cases {
        let log = noiseless_swim(&single_plant(&cfg, &map, tail, f)?, duty, 60.0)?;
        let s = eelsim::harness::metrics(&log).map_err(e)?;
        let rel = (s.final_windowed_speed - target).abs() / target;
        ok &= rel <= 0.02;
        detail.push(format!("{tail} @ {f} Hz: {:.4} mm/s (rel err {rel:.2e})", s.final_windowed_speed * 1e3));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 5.0;
    Ok((ok, format!("{}; {secs:.2} s", detail.join("; "))))
}

/// 2. Closed loop beats the matched open-loop run.
fn closed_loop_improvement() -> Outcome {
    let start = Instant::now();
    let cfg = RunConfig { trials: 1, ..RunConfig::default() };
    let map = cfg.thrust_map().map_err(e)?;
    let open = run_open_loop(&cfg, &map).map_err(e)?[0].summary.rms_lateral_error;
    let closed = run_closed_loop(&cfg, &map).map_err(e)?[0].summary.rms_lateral_error;
    let gains = cfg.control.gains;
    let paper_gains = gains.kp_lateral == 2.0
        && gains.ki_lateral == 0.1
        && gains.kp_heading == 0.2
        && gains.forward_duty == 0.11;
    let secs = start.elapsed().as_secs_f64();
    let ok = paper_gains
        && (0.015..=0.025).contains(&open)
        && closed <= 0.4 * open
        && closed <= 0.008
        && secs < 10.0;
    Ok((
        ok,
        format!(
            "open-loop RMS {:.2} mm, closed-loop RMS {:.2} mm ({:.0}% of open loop); {secs:.2} s",
            open * 1e3,
            closed * 1e3,
            100.0 * closed / open
        ),
    ))
}

/// 3. 90° turns complete with a plausible turning rate.
fn turning() -> Outcome {
    let start = Instant::now();
    let cfg = RunConfig { trials: 1, ..RunConfig::default() };
    let map = cfg.thrust_map().map_err(e)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for dir in [TurnDirection::Left, TurnDirection::Right] {
        let s = run_turn(&cfg, &map, dir).map_err(e)?[0].summary;
        let heading_ok = s.final_heading_error.abs() < 5f64.to_radians();
        let rate_ok = (0.15..=0.40).contains(&s.max_turn_rate);
        ok &= heading_ok && rate_ok;
        detail.push(format!(
            "{}: max rate {:.3} rad/s, final heading error {:.2} deg",
            dir.as_str(),
            s.max_turn_rate,
            s.final_heading_error.to_degrees()
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    Ok((ok, format!("{}; {secs:.2} s", detail.join("; "))))
}

/// 4. Equal duties on the dual swimmer produce no heading drift.
fn torque_cancellation() -> Outcome {
    let mut cfg = RunConfig { trials: 1, ..RunConfig::default() };
    cfg.robots.dual.disturbance = Disturbance::none();
    let map = cfg.thrust_map().map_err(e)?;
    let log = &run_open_loop(&cfg, &map).map_err(e)?[0].log;
    let psi0 = log.rows[0].state.yaw;
    let drift = log
        .rows
        .iter()
        .map(|r| wrap(r.state.yaw - psi0).abs())
        .fold(0.0, f64::max);
    let end = log.rows.last().unwrap();
    Ok((
        drift < 1e-9 && end.t >= 20.0,
        format!("max |psi - psi0| = {drift:.3e} rad over {:.1} s", end.t),
    ))
}

fn response(taps: &[f64], f: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (k, h) in taps.iter().enumerate() {
        let ph = TAU * f * k as f64 / FS;
        re += h * ph.cos();
        im -= h * ph.sin();
    }
    re.hypot(im)
}

/// 5. Filter response and differentiate + filter on a ramp.
fn signal_pipeline() -> Outcome {
    let spec = FirSpec::default();
    let spec_ok = spec.order == 1000 && spec.cutoff == 40.0 && spec.sample_rate == 250.0;
    let fir = FirFilter::design(&spec).map_err(e)?;
    let dc = response(fir.taps(), 0.0);
    let att_db = -20.0 * response(fir.taps(), 100.0).log10();
    let pass = response(fir.taps(), 1.0);

    let speed = 0.0151;
    let samples: Vec<MocapSample> = (0..5000)
        .map(|i| {
            let t = i as f64 * DT;
            MocapSample { t, r1: speed * t, r2: 0.0, psi: 0.0 }
        })
        .collect();
    let vel = filtered_velocities(&samples, &spec).map_err(e)?;
    let worst = vel.v1.iter().map(|v| (v - speed).abs() / speed).fold(0.0, f64::max);

    let ok = spec_ok && (dc - 1.0).abs() <= 1e-6 && att_db >= 40.0 && (pass - 1.0).abs() < 0.01 && worst <= 0.01;
    Ok((
        ok,
        format!(
            "DC gain {dc:.9}, {att_db:.1} dB at 100 Hz, |H(1 Hz)| = {pass:.6}, ramp error {worst:.2e}"
        ),
    ))
}

/// 6. Controller arithmetic on the documented hand-worked cases.
fn controller_arithmetic() -> Outcome {
    let g = ControllerGains::default();
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let mut cs = ControllerState::default();
    checks.push(("on path", lateral_controller(0.0, 0.0, &mut cs, &g, DT).map_err(e)? == 0.0));
    let mut cs = ControllerState::default();
    let p = lateral_controller(0.05, 0.0, &mut cs, &g, DT).map_err(e)?;
    checks.push(("k_p2 * 0.05", p == 0.1));
    let mut cs = ControllerState::default();
    for _ in 0..2500 {
        lateral_controller(0.01, 0.0, &mut cs, &g, DT).map_err(e)?;
    }
    checks.push(("k_i2 over 10 s", (g.ki_lateral * cs.integral - 0.01).abs() < 1e-12));

    checks.push(("heading zero", heading_controller(0.3, 0.3, &g) == 0.0));
    checks.push(("heading 0.1", heading_controller(0.1, 0.0, &g) == 0.2 * 0.1));
    checks.push(("heading wrap", heading_controller(TAU, 0.0, &g) == 0.0));
    checks.push(("wrap -pi", wrap(-PI) == PI));

    checks.push((
        "mapping symmetric",
        actuator_mapping(0.11, 0.0, &g) == ControlOutput { u_left: 0.11, u_right: 0.11 },
    ));
    let m = actuator_mapping(0.11, 0.02, &g);
    checks.push(("mapping 0.02", (m.u_left - 0.09).abs() < 1e-15 && (m.u_right - 0.13).abs() < 1e-15));
    let m = actuator_mapping(0.11, -5.0, &g);
    checks.push(("mapping clamp", m.u_right == 0.0 && m.u_left == g.duty_max));

    let mut cs = ControllerState::default();
    let sat = lateral_controller(10.0, 0.0, &mut cs, &g, DT).map_err(e)?;
    checks.push(("psi_d saturation", sat == FRAC_PI_2));
    let mut cs = ControllerState::default();
    let mut bounded = true;
    for _ in 0..200_000 {
        lateral_controller(1.0, 0.0, &mut cs, &g, DT).map_err(e)?;
        bounded &= (cs.integral * g.ki_lateral).abs() <= PI / 4.0 + 1e-15;
    }
    checks.push(("anti-windup", bounded));

    let line = LineReference::new([0.0, 0.0], 0.0);
    let sample = MocapSample { t: 0.0, r1: 0.2, r2: 0.05, psi: 0.0 };
    let mut cs = ControllerState::default();
    let s = control_step(&sample, &line, &mut cs, &g, DT).map_err(e)?;
    checks.push(("left of line turns right", s.output.u_right < s.output.u_left));

    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    Ok((
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} cases exact", checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    ))
}

fn run_plant(
    state: RobotState,
    wrench: Wrench,
    geom: &RobotGeometry,
    drag: &DragModel,
    dt: f64,
    duration: f64,
) -> Result<RobotState, String> {
    let mut dist = Disturbance::none().process();
    let mut s = state;
    for _ in 0..(duration / dt).round() as usize {
        s = step(&s, &wrench, geom, drag, &mut dist, dt).map_err(e)?;
    }
    Ok(s)
}

/// 7. Plant properties.
fn physics_properties() -> Outcome {
    let cfg = RunConfig::default();
    let geom = RobotGeometry::single();
    let drag = cfg.robots.single.drag(&cfg.fluid).map_err(e)?;

    // energy sink
    let mut dist = Disturbance::none().process();
    let mut s = RobotState { velocity: [0.012, -0.004], yaw_rate: 0.3, ..RobotState::default() };
    let mut monotone = true;
    for _ in 0..10_000 {
        let next = step(&s, &Wrench::default(), &geom, &drag, &mut dist, DT).map_err(e)?;
        monotone &= next.kinetic_energy(&geom) <= s.kinetic_energy(&geom);
        s = next;
    }

    // quadratic drag
    let at = |u: f64| RobotState { velocity: [u, 0.0], ..RobotState::default() };
    let f1 = drag_wrench(&at(0.01), &drag).force[0];
    let f2 = drag_wrench(&at(0.02), &drag).force[0];
    let quadratic = ((f2 / f1) - 4.0).abs() < 1e-12;

    // steady state against the drag balance
    let map = cfg.thrust_map().map_err(e)?;
    let thrust = mean_thrust(&map, &best_tail(), 5.0, 0.10).map_err(e)?;
    let oracle = (thrust / drag.longitudinal).sqrt();
    let end = run_plant(RobotState::default(), Wrench { force: [thrust, 0.0], torque: 0.0 }, &geom, &drag, DT, 60.0)?;
    let steady_err = (end.speed() - oracle).abs() / oracle;

    // time-step convergence on a curving dual-swimmer run
    let dual = RobotGeometry::dual();
    let ddrag = cfg.robots.dual.drag(&cfg.fluid).map_err(e)?;
    let curve = map.curve(&best_tail(), 5.0).map_err(e)?;
    let w = propulsor_wrench(curve.thrust(0.10), curve.thrust(0.12), &dual).map_err(e)?;
    let a = run_plant(RobotState::default(), w, &dual, &ddrag, DT, 20.0)?;
    let b = run_plant(RobotState::default(), w, &dual, &ddrag, DT / 2.0, 20.0)?;
    let travelled = a.position[0].hypot(a.position[1]);
    let shift = (a.position[0] - b.position[0]).hypot(a.position[1] - b.position[1]) / travelled;

    let ok = monotone && quadratic && steady_err < 0.005 && shift < 0.01;
    Ok((
        ok,
        format!(
            "energy monotone: {monotone}; drag ratio {:.12}; steady speed {:.4} vs {:.4} mm/s ({steady_err:.1e}); dt-halving shift {:.2e}",
            f2 / f1,
            end.speed() * 1e3,
            oracle * 1e3,
            shift
        ),
    ))
}

fn dir_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map_err(e)?
        .map(|entry| {
            let p = entry.map_err(e)?.path();
            Ok((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).map_err(e)?))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

/// 8. Reproducible outputs and zero spread without noise.
fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e)?;
    let bin = env!("CARGO_BIN_EXE_eelsim");
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let status = Command::new(bin)
            .args(["--seed", "7", "--trials", "2", "--out"])
            .arg(&out)
            .arg("closed-loop")
            .status()
            .map_err(e)?;
        if !status.success() {
            return Ok((false, format!("closed-loop run exited with {status}")));
        }
        runs.push(dir_bytes(&out)?);
    }
    let identical = runs[0] == runs[1] && runs[0].iter().any(|(n, _)| n.ends_with(".csv"));

    let mut cfg = RunConfig { trials: 3, duration_s: 5.0, ..RunConfig::default() };
    cfg.sensing.noise = MocapNoise::none();
    cfg.sweep.parabolic_lengths_mm = vec![24.0, 26.0];
    cfg.sweep.rectangular_lengths_mm = vec![20.0];
    cfg.sweep.frequencies_hz = vec![1.0, 5.0];
    cfg.sweep.settle_s = 5.0;
    let map = cfg.thrust_map().map_err(e)?;
    let sweep = run_sweep(&cfg, &map, false).map_err(e)?;
    let zero_esd = !sweep.cells.is_empty() && sweep.cells.iter().all(|c| c.esd_speed == 0.0);

    Ok((
        identical && zero_esd,
        format!(
            "{} output files byte-identical: {identical}; sweep ESD zero over {} cells: {zero_esd}",
            runs[0].len(),
            sweep.cells.len()
        ),
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("calibration fidelity", calibration_fidelity),
        ("closed-loop improvement", closed_loop_improvement),
        ("turning", turning),
        ("torque cancellation", torque_cancellation),
        ("signal pipeline", signal_pipeline),
        ("controller arithmetic", controller_arithmetic),
        ("physics properties", physics_properties),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        if !ok {
            failures += 1;
        }
        println!("[{}] criterion {} {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
