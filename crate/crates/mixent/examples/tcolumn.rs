//! Scratch: full t(3) table column at acceptance scale (not a test).

use mixent::gmm::FitConfig;
use mixent::{run_cell, BootstrapMethod, RngStream, TrueDistribution};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_reps: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(200);
    let n_boot: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(500);
    let n_init: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(5);
    let seed: u64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(20230817);

    let dist = TrueDistribution::StudentT { df: 3.0 };
    let config = FitConfig {
        n_init,
        ..FitConfig::for_dim(1)
    };
    let methods = [
        BootstrapMethod::Nonparametric,
        BootstrapMethod::Parametric,
        BootstrapMethod::Wlb { alpha: 1.0 },
        BootstrapMethod::Wlb { alpha: 4.0 },
        BootstrapMethod::Wlb { alpha: 0.8137 },
    ];
    let master = RngStream::new(seed, 0);
    let t0 = std::time::Instant::now();
    for (ni, n) in [100usize, 200, 500, 1000].into_iter().enumerate() {
        let cell_rng = master.substream(ni as u64);
        for m in methods {
            let r = run_cell(&dist, m, n, n_reps, n_boot, 0.95, &config, &cell_rng).unwrap();
            println!(
                "{:13} n={:5} est={:.4} bias={:+.4} se={:.4} perc=[{:.4},{:.4}] cov={:.3} cperc=[{:.4},{:.4}] cov={:.3} collapsed={}",
                r.method, r.n, r.mean_estimate, r.mean_bias, r.mean_se,
                r.mean_perc_interval.0, r.mean_perc_interval.1, r.coverage_perc,
                r.mean_cperc_interval.0, r.mean_cperc_interval.1, r.coverage_cperc,
                r.n_collapsed,
            );
        }
        println!("-- elapsed {:.0}s", t0.elapsed().as_secs_f64());
    }
}
