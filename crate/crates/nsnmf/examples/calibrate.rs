// Scratch calibration harness: trains every method on the synthetic presets
// and prints test RMSE, to sanity-check preset statistics.

use nsnmf::baselines::{fit_mf, fit_neighborhood, MfVariant, NeighborhoodMode};
use nsnmf::eval::rmse_over;
use nsnmf::model::{train, TrainConfig};
use nsnmf::synth;
use nsnmf::ActivationKind;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("ml");
    let dims: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(50);

    let spec = match which {
        "ml" => synth::ml100k_like(),
        "ft" => synth::filmtrust_like(),
        "am" => synth::amusic_like(),
        other => panic!("unknown preset {other}"),
    };
    let t0 = std::time::Instant::now();
    let ds = spec_gen(&spec);
    eprintln!(
        "dataset {}: {} triples, {} users, {} items ({:.2}s)",
        spec.name,
        ds.len(),
        ds.n_users(),
        ds.n_items(),
        t0.elapsed().as_secs_f64()
    );
    let plan = ds.split(0.8, 42).unwrap();

    for (label, use_bias, activation) in [
        ("nsnmf-relu-bias", true, ActivationKind::Relu),
        ("nsnmf-softplus", false, ActivationKind::Softplus),
        ("nsnmf-relu", false, ActivationKind::Relu),
    ] {
        let config = TrainConfig {
            eta: 0.01,
            lambda: 0.1,
            dims: vec![dims, dims],
            epochs,
            seed: 7,
            activation,
            use_bias,
            ..TrainConfig::default()
        };
        let t = std::time::Instant::now();
        match train(&plan.train, &config) {
            Ok((model, report)) => {
                let test = rmse_over(&plan.test, &model).unwrap();
                eprintln!(
                    "{label:18} test {test:.4}  (train last {:.4}, {} epochs, {:.1}s)",
                    report.epoch_train_rmse.last().unwrap(),
                    report.epochs_run,
                    t.elapsed().as_secs_f64()
                );
            }
            Err(e) => eprintln!("{label:18} FAILED: {e}"),
        }
    }

    // 3-layer depth probe.
    let config = TrainConfig {
        eta: 0.01,
        lambda: 0.1,
        dims: vec![dims, dims, dims],
        epochs,
        seed: 7,
        activation: ActivationKind::Relu,
        use_bias: false,
        ..TrainConfig::default()
    };
    match train(&plan.train, &config) {
        Ok((model, _)) => {
            let test = rmse_over(&plan.test, &model).unwrap();
            eprintln!("nsnmf-relu-3layer  test {test:.4}");
        }
        Err(e) => eprintln!("nsnmf-relu-3layer  FAILED: {e}"),
    }

    for (label, variant) in [
        ("svd", MfVariant::Svd),
        ("nmf", MfVariant::Nmf),
        ("reg-nmf", MfVariant::RegularizedNmf),
    ] {
        let t = std::time::Instant::now();
        match fit_mf(&plan.train, variant, dims, 0.01, 0.1, epochs, 7) {
            Ok(model) => {
                let test = rmse_over(&plan.test, &model).unwrap();
                eprintln!("{label:18} test {test:.4}  ({:.1}s)", t.elapsed().as_secs_f64());
            }
            Err(e) => eprintln!("{label:18} FAILED: {e}"),
        }
    }

    for (label, mode) in [
        ("user-cf", NeighborhoodMode::UserBased),
        ("item-cf", NeighborhoodMode::ItemBased),
    ] {
        let t = std::time::Instant::now();
        let model = fit_neighborhood(&plan.train, mode, 40, 25.0).unwrap();
        let test = rmse_over(&plan.test, &model).unwrap();
        eprintln!("{label:18} test {test:.4}  ({:.1}s)", t.elapsed().as_secs_f64());
    }
}

fn spec_gen(spec: &synth::SynthSpec) -> nsnmf::RatingDataset {
    synth::generate(spec, 20260810).unwrap()
}
