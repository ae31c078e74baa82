//! Scratch probe for calibrating the acceptance constants; not part of the
//! shipped interface.

use std::time::Instant;

use labcli::converge::{run_convergence, ConvergenceParams};
use labcli::ensemble::{amplitude_of, divergence_time, run_ensemble, EnsembleParams};
use labcli::models::{lookup, reference_trajectory};

fn main() {
    let t = Instant::now();
    lv_convergence();
    println!("lv convergence: {:?}", t.elapsed());

    let t = Instant::now();
    chua(300.0);
    println!("chua 300: {:?}", t.elapsed());

    let t = Instant::now();
    chua(1000.0);
    println!("chua 1000: {:?}", t.elapsed());
}

fn lv_convergence() {
    let spec = lookup("lotka_volterra").unwrap();
    let params = ConvergenceParams {
        steps_list: vec![1, 2, 3, 4, 5],
        h_list: vec![0.1, 0.05, 0.025, 0.0125],
        n: 200,
        seed: 2027,
        probe_t: 10.0,
        probabilistic: true,
    };
    let report = run_convergence(&spec, &params).unwrap();
    println!("reference x({}) = {}", params.probe_t, report.reference_x);
    println!("floor = {:.3e}", report.floor);
    for c in &report.cells {
        println!(
            "  s={} h={:<7} mean|e|={:.6e} floor_limited={} diverged={}",
            c.steps, c.h, c.mean_abs_error, c.floor_limited, c.n_diverged
        );
    }
    for s in &report.slopes {
        println!(
            "slope s={}: {:.3} +- {:.3} floor_limited={}",
            s.steps, s.slope, s.stderr, s.floor_limited
        );
    }
    // error centering at h = 0.025
    for &steps in &[1usize, 2, 3] {
        let cell = report
            .cells
            .iter()
            .find(|c| c.steps == steps && (c.h - 0.025).abs() < 1e-12)
            .unwrap();
        let n = cell.signed_errors.len() as f64;
        let mean = cell.signed_errors.iter().sum::<f64>() / n;
        let var = cell
            .signed_errors
            .iter()
            .map(|e| (e - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        let stderr = (var / n).sqrt();
        println!(
            "centering s={steps}: mean={:.3e} stderr={:.3e} ratio={:.2}",
            mean,
            stderr,
            mean / stderr
        );
    }
}

fn chua(t_end: f64) {
    let spec = lookup("chua").unwrap();
    let reference = reference_trajectory(&spec, 0.0, t_end, 0.001).unwrap();
    let amplitude = amplitude_of(&reference);
    println!("chua amplitude = {amplitude:.4}");
    for &steps in &[1usize, 3, 5] {
        let t = Instant::now();
        let record = run_ensemble(
            &spec,
            &EnsembleParams {
                steps,
                h: 0.01,
                n: 20,
                seed: 99,
                t0: 0.0,
                t_end,
                probabilistic: true,
            },
        )
        .unwrap();
        let dt = divergence_time(&record, amplitude, 0.1);
        let mean_ms = record
            .wall_clock
            .iter()
            .map(|d| d.as_secs_f64() * 1e3)
            .sum::<f64>()
            / record.wall_clock.len() as f64;
        println!(
            "  s={steps}: divergence_time={dt:.2} mean_wall={mean_ms:.1}ms elapsed={:?}",
            t.elapsed()
        );
    }
}
