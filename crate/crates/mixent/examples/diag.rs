//! Scratch diagnostics for one simulation cell (not part of the test suite).

use mixent::gmm::FitConfig;
use mixent::{
    bootstrap_entropy, entropy_estimate, sample, select_model, true_entropy, BootstrapMethod,
    RngStream, TrueDistribution, WeightVector,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_reps: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(60);
    let n_boot: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(300);
    let n: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(100);

    let dist = TrueDistribution::StudentT { df: 3.0 };
    let truth = true_entropy(&dist).unwrap();
    let config = FitConfig::for_dim(1);
    let method = BootstrapMethod::Wlb { alpha: 0.8137 };
    let master = RngStream::new(555, 0);

    let mut points = Vec::new();
    let mut g_counts = [0usize; 8];
    let mut e_count = 0usize;
    let mut covered = 0usize;
    let mut ses = Vec::new();
    let mut biases = Vec::new();
    for r in 0..n_reps {
        let rep = master.substream(r as u64);
        let mut drng = rep.substream(1);
        let data = sample(&dist, n, &mut drng);
        let base = select_model(&data, &WeightVector::unit(n), &config, &rep.substream(2)).unwrap();
        let point = entropy_estimate(&base, &data).unwrap();
        points.push(point);
        g_counts[base.n_components().min(7)] += 1;
        if base.structure() == mixent::CovarianceStructure::UnivariateEqual {
            e_count += 1;
        }
        let boot = bootstrap_entropy(&data, &base, method, n_boot, &config, &rep.substream(3))
            .unwrap();
        ses.push(boot.se().unwrap());
        biases.push(boot.bias());
        let c = boot.centered_percentile_interval(0.95).unwrap();
        if c.lower <= truth && truth <= c.upper {
            covered += 1;
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    println!("truth          {truth:.4}");
    println!(
        "point:  mean {:.4} sd {:.4}  (paper est 1.7565, SE col 0.1124)",
        mean(&points),
        sd(&points)
    );
    println!("boot SE: mean {:.4}", mean(&ses));
    println!("boot bias: mean {:.4}", mean(&biases));
    println!("cperc coverage: {:.3}", covered as f64 / n_reps as f64);
    println!("selected G counts: {:?}  (E structure picked {} times)", g_counts, e_count);
}
