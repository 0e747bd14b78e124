// temporary exploration harness; removed before release
use asvgd::diagnostics::coverage_stats;
use asvgd::engine::{run_with_observer, InitialDistribution, RunConfig};
use asvgd::kernels::KernelSpec;
use asvgd::schedules::{AnnealingSchedule, ScheduleFamily};
use asvgd::targets::{GaussianMixture, MixtureComponent};

struct Probe {
    target: GaussianMixture,
    steps: usize,
    n: usize,
    eps: f64,
    init_mean: Vec<f64>,
    init_scale: f64,
    kernel: KernelSpec,
    fcf: f64,
}

fn coverage(p: &Probe, family: ScheduleFamily, seed: u64) -> usize {
    let config = RunConfig {
        target: p.target.clone(),
        kernel: p.kernel.clone(),
        schedule: AnnealingSchedule::with_clamp_fraction(family, p.steps, p.fcf).unwrap(),
        step_size: p.eps,
        total_steps: p.steps,
        particle_count: p.n,
        init: InitialDistribution {
            mean: p.init_mean.clone(),
            scale: p.init_scale,
        },
        seed,
        checkpoint_every: p.steps,
    };
    let finals = run_with_observer(&config, |_| {}).unwrap();
    coverage_stats(&finals, &p.target, 2.0).unwrap().modes_covered
}

fn uni(spread: f64, sigma: f64) -> GaussianMixture {
    let comps = (0..5)
        .map(|i| MixtureComponent::new(1.0, vec![(i as f64 - 2.0) * spread / 2.0], sigma))
        .collect();
    GaussianMixture::new(comps).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("uni");

    match which {
        // scratch uni <h|med> <init_scale> <fcf> [spread sigma]
        "uni" => {
            let kernel = match args[2].as_str() {
                "med" => KernelSpec::median_heuristic(),
                h => KernelSpec::fixed(h.parse().unwrap()).unwrap(),
            };
            let init_scale: f64 = args[3].parse().unwrap();
            let fcf: f64 = args[4].parse().unwrap();
            let spread: f64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(8.0);
            let sigma: f64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(0.3);
            let p = Probe {
                target: uni(spread, sigma),
                steps: 2000,
                n: 100,
                eps: 0.1,
                init_mean: vec![-6.0],
                init_scale,
                kernel,
                fcf,
            };
            let mut amin = 5;
            let mut smax = 0;
            for seed in 0..5 {
                let a = coverage(&p, ScheduleFamily::Hyperbolic { p: 5.0 }, seed);
                let s = coverage(&p, ScheduleFamily::Constant { value: 1.0 }, seed);
                print!(" [seed{seed}: a={a} s={s}]");
                amin = amin.min(a);
                smax = smax.max(s);
            }
            println!("\nuni: asvgd_min={amin}/5 svgd_max={smax}/5");
        }
        // scratch grid <h|med> <spacing> <init_x> <init_scale> <eps> <fcf> [steps n]
        "grid" => {
            let kernel = match args[2].as_str() {
                "med" => KernelSpec::median_heuristic(),
                h => KernelSpec::fixed(h.parse().unwrap()).unwrap(),
            };
            let spacing: f64 = args[3].parse().unwrap();
            let init_x: f64 = args[4].parse().unwrap();
            let init_scale: f64 = args[5].parse().unwrap();
            let eps: f64 = args[6].parse().unwrap();
            let fcf: f64 = args[7].parse().unwrap();
            let steps: usize = args.get(8).map(|s| s.parse().unwrap()).unwrap_or(3000);
            let n: usize = args.get(9).map(|s| s.parse().unwrap()).unwrap_or(200);
            let p = Probe {
                target: GaussianMixture::grid16(spacing).unwrap(),
                steps,
                n,
                eps,
                init_mean: vec![init_x, init_x],
                init_scale,
                kernel,
                fcf,
            };
            let mut amin = 16;
            let mut smax = 0;
            for seed in 0..3 {
                let a = coverage(&p, ScheduleFamily::Cyclical { cycles: 5, p: 2.0 }, seed);
                let s = coverage(&p, ScheduleFamily::Constant { value: 1.0 }, seed);
                print!(" [seed{seed}: a={a} s={s}]");
                amin = amin.min(a);
                smax = smax.max(s);
            }
            println!("\ngrid: asvgd_min={amin}/16 svgd_max={smax}/16");
        }
        _ => eprintln!("unknown probe"),
    }
}
