//! Scratch probe for table-cell fidelity (not part of the test suite).

use mixent::gmm::FitConfig;
use mixent::{run_cell, BootstrapMethod, RngStream, TrueDistribution};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_reps: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(50);
    let n_boot: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(500);
    let which = args.get(3).cloned().unwrap_or_else(|| "t100".into());

    let (dist, n) = match which.as_str() {
        "t100" => (TrueDistribution::StudentT { df: 3.0 }, 100),
        "t1000" => (TrueDistribution::StudentT { df: 3.0 }, 1000),
        "g1000" => (
            TrueDistribution::Gaussian {
                mu: 0.0,
                sigma: 1.0,
            },
            1000,
        ),
        "g100" => (
            TrueDistribution::Gaussian {
                mu: 0.0,
                sigma: 1.0,
            },
            100,
        ),
        "mix100" => (
            TrueDistribution::MixedGaussian {
                mu: 2.0,
                sigma: 1.0,
            },
            100,
        ),
        "chi100" => (TrueDistribution::IndepChiSq { df: 5.0, d: 10 }, 100),
        other => panic!("unknown cell {other}"),
    };
    let config = FitConfig::for_dim(dist.dim());
    let methods = [
        BootstrapMethod::Nonparametric,
        BootstrapMethod::Parametric,
        BootstrapMethod::Wlb { alpha: 1.0 },
        BootstrapMethod::Wlb { alpha: 4.0 },
        BootstrapMethod::Wlb { alpha: 0.8137 },
    ];
    let rng = RngStream::new(20230817, 0);
    let t0 = std::time::Instant::now();
    for m in methods {
        let r = run_cell(&dist, m, n, n_reps, n_boot, 0.95, &config, &rng).unwrap();
        println!(
            "{:14} n={:5} est={:.4} bias={:.4} se={:.4} perc=[{:.4},{:.4}] cov={:.3} cperc=[{:.4},{:.4}] cov={:.3} ratio={:.3} collapsed={}",
            r.method,
            r.n,
            r.mean_estimate,
            r.mean_bias,
            r.mean_se,
            r.mean_perc_interval.0,
            r.mean_perc_interval.1,
            r.coverage_perc,
            r.mean_cperc_interval.0,
            r.mean_cperc_interval.1,
            r.coverage_cperc,
            r.bias_se_ratio,
            r.n_collapsed,
        );
    }
    println!("elapsed: {:.1}s", t0.elapsed().as_secs_f64());
}
