//! Temporary end-to-end debug harness (not part of the final tree).

use std::time::Instant;

use tailsim::model::RobotParams;
use tailsim::sim::{run_drop, ModelErrorSpec, Scenario};
use tailsim::trajopt::{CostWeights, SolverSettings};

fn show(name: &str, scenario: &Scenario) {
    show_weighted(name, scenario, CostWeights::default())
}

fn show_weighted(name: &str, scenario: &Scenario, weights: CostWeights) {
    let params = RobotParams::tailed_a1();
    let settings = SolverSettings::default();
    let t0 = Instant::now();
    match run_drop(scenario, &params, &weights, &settings) {
        Ok(out) => {
            let v = &out.report.verdict;
            println!(
                "{name}: success={} plan(conv={} it={} err={:.2e}) td={:?} err_deg={:?} feet={:?} settle={:?} tail_td={:?} pen(foot={:.1}mm body={:.1}mm) early={} [{:.1}s wall]",
                v.success,
                out.plan.converged,
                out.plan.iterations,
                out.plan.terminal_attitude_error,
                v.touchdown_time,
                v.touchdown_error_deg.map(|e| [
                    (e[0] * 10.0).round() / 10.0,
                    (e[1] * 10.0).round() / 10.0,
                    (e[2] * 10.0).round() / 10.0
                ]),
                v.feet_down_time,
                v.settle_time,
                v.touchdown_tail_length,
                v.max_foot_penetration * 1e3,
                v.max_body_penetration * 1e3,
                v.early_touchdown,
                t0.elapsed().as_secs_f64()
            );
            if !v.success {
                for r in &v.failure_reasons {
                    println!("    reason: {r}");
                }
            }
            for e in &out.report.log.events {
                println!("    [{:.3}] {}", e.t, e.what);
            }
            // Impact window profile.
            let plant = tailsim::model::TailedBodyModel::simulation(params.clone()).unwrap();
            let td = v.touchdown_time.unwrap_or(0.0);
            let mut min_tip = f64::INFINITY;
            let mut min_body = f64::INFINITY;
            for tk in &out.report.log.ticks {
                min_tip = min_tip.min(plant.tail_tip_position(&tk.state).z);
                min_body = min_body.min(plant.body_position(&tk.state).z);
            }
            println!("    min body z {:.3}  min tail tip z {:.3}", min_body, min_tip);
            for tk in &out.report.log.ticks {
                if tk.t < td - 0.005 {
                    continue;
                }
                let ms = (tk.t * 1000.0).round() as i64;
                let fine = tk.t <= td + 0.12;
                if (fine && ms % 10 != 0) || (!fine && ms % 50 != 0) {
                    continue;
                }
                let fz: f64 = tk.foot_forces.iter().map(|f| f.z).sum();
                let e = tailsim::spatial::euler_from_quat(&tk.state.quat)
                    .map(|e| {
                        [
                            e.yaw.to_degrees(),
                            e.pitch.to_degrees(),
                            e.roll.to_degrees(),
                        ]
                    })
                    .unwrap_or([f64::NAN; 3]);
                println!(
                    "    t={:.3} bodyz={:.3} fz={:7.1} legs=[{:5.0} {:5.0} {:5.0} {:5.0}] |w|={:.2} tail=({:5.1},{:5.1},{:.2}) cmd={:.2} fp={:5.1} tip_z={:5.2} ypr=[{:6.1} {:6.1} {:6.1}]",
                    tk.t,
                    plant.body_position(&tk.state).z,
                    fz,
                    tk.foot_forces[0].norm(),
                    tk.foot_forces[1].norm(),
                    tk.foot_forces[2].norm(),
                    tk.foot_forces[3].norm(),
                    tk.state.omega.norm(),
                    tk.state.tail.x.to_degrees(),
                    tk.state.tail.y.to_degrees(),
                    tk.state.tail.z,
                    tk.length_command,
                    tk.prismatic_force,
                    plant.tail_tip_position(&tk.state).z,
                    e[0],
                    e[1],
                    e[2],
                );
            }
        }
        Err(e) => println!("{name}: ERROR {e}"),
    }
}

fn trace(name: &str, scenario: &Scenario, from: f64, to: f64, every_ms: i64) {
    let params = RobotParams::tailed_a1();
    match run_drop(scenario, &params, &CostWeights::default(), &SolverSettings::default()) {
        Ok(out) => {
            let plant = tailsim::model::TailedBodyModel::simulation(params.clone()).unwrap();
            for tk in &out.report.log.ticks {
                let ms = (tk.t * 1000.0).round() as i64;
                if tk.t < from || tk.t > to || ms % every_ms != 0 {
                    continue;
                }
                let e = tailsim::spatial::euler_from_quat(&tk.state.quat)
                    .map(|e| {
                        [
                            e.yaw.to_degrees(),
                            e.pitch.to_degrees(),
                            e.roll.to_degrees(),
                        ]
                    })
                    .unwrap_or([f64::NAN; 3]);
                println!(
                    "{name} t={:.3} ypr=[{:6.1} {:6.1} {:6.1}] w=({:6.2},{:6.2},{:6.2}) tail=({:6.1},{:6.1},{:.3}) tr=({:6.2},{:6.2},{:5.2}) g=({:4.1},{:4.1}) fp={:5.1} cmd={:.2} tip={:.3}",
                    tk.t,
                    e[0],
                    e[1],
                    e[2],
                    tk.state.omega.x,
                    tk.state.omega.y,
                    tk.state.omega.z,
                    tk.state.tail.x.to_degrees(),
                    tk.state.tail.y.to_degrees(),
                    tk.state.tail.z,
                    tk.state.tail_rate.x,
                    tk.state.tail_rate.y,
                    tk.state.tail_rate.z,
                    tk.gimbal_torque.x,
                    tk.gimbal_torque.y,
                    tk.prismatic_force,
                    tk.length_command,
                    plant.tail_tip_position(&tk.state).z,
                );
            }
        }
        Err(e) => println!("{name}: ERROR {e}"),
    }
}

fn main() {
    // Criterion 3: consecutive motion.
    let c3 = Scenario::drop_from(40.0, 40.0, 30.0, 1.85);
    show("crit3  [40,40,30] 1.85m", &c3);
    trace("c3", &c3, 0.37, 0.58, 10);
    let c4n_t = {
        let mut s = Scenario::drop_from(0.0, 30.0, 30.0, 1.0);
        s.retract = false;
        s
    };
    trace("c4n", &c4n_t, 0.4, 3.0, 100);

    // Criterion 1/2: reproduction + robustness.
    let c1 = Scenario::drop_from(15.0, 25.0, 35.0, 1.85);
    show("crit1  [15,25,35] 1.85m", &c1);
    let mut c2 = c1.clone();
    c2.model_error = ModelErrorSpec {
        tail_mass_scale: 1.4,
        ..ModelErrorSpec::default()
    };
    show("crit2  tail mass x1.4", &c2);

    // Criterion 4: hardware demo + ablation.
    let c4 = Scenario::drop_from(0.0, 30.0, 30.0, 1.0);
    show("crit4  [0,30,30] 1.0m", &c4);
    let mut c4n = c4.clone();
    c4n.retract = false;
    show("crit4n no-retract", &c4n);
}
