use igc::model::{train, TrainConfig};
use igc::synth::*;
use igc::metrics::kendall_tau;
use igc::rng::stream_rng;

fn main() {
    let specs: Vec<(&str, CopulaSpec)> = vec![
        ("clayton", CopulaSpec::Clayton { theta: 3.0, rotation: Rotation::R0 }),
        ("gumbel", CopulaSpec::Gumbel { theta: 3.0, rotation: Rotation::R0 }),
        ("student_t", CopulaSpec::StudentT { corr: CorrelationMatrix::bivariate(0.7).unwrap(), nu: 4.0 }),
        ("gauss_mix", CopulaSpec::GaussianMixture(random_gaussian_mixture_spec(&mut stream_rng(99, 0)))),
    ];
    for fresh in [false, true] {
        for (name, spec) in &specs {
            let mut errs = Vec::new();
            for seed in 0..5u64 {
                let data = spec.sample(1000, 100 + seed).unwrap();
                let dt = kendall_tau(&data.column(0), &data.column(1)).unwrap();
                let cfg = TrainConfig {
                    seed: 200 + seed, epochs: 100, fresh_noise_per_epoch: fresh,
                    marginal_samples: 200_000, cdf_knots: 1024,
                    ..TrainConfig::default()
                };
                let model = train(&data, &cfg).unwrap();
                let s = model.sample_copula(10_000, 300 + seed).unwrap();
                let tau = kendall_tau(&s.column(0), &s.column(1)).unwrap();
                errs.push(tau - dt);
            }
            let pass = errs.iter().filter(|e| e.abs() < 0.05).count();
            println!("fresh {fresh:5} {name:10}: {}/5 pass, errs {:?}", pass,
                errs.iter().map(|e| format!("{e:+.3}")).collect::<Vec<_>>());
        }
    }
}
