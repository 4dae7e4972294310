use logper::mc::empirical_logavg_cov;
use logper::models::AutocovModel;
use logper::specfun::trigamma;
use logper::transform::BinPartition;

fn white() -> AutocovModel {
    AutocovModel::White { variance: 1.0 }
}

#[test]
fn white_noise_within_three_standard_errors() {
    let r = empirical_logavg_cov(&white(), BinPartition::new(20, 2).unwrap(), 20_000, 11).unwrap();
    let tg = trigamma(1.0).unwrap();
    let f = r.formula_cov.matrix();
    for i in 0..r.bins {
        for j in 0..r.bins {
            assert_eq!(f[(i, j)], if i == j { tg } else { 0.0 });
        }
    }
    assert!(r.max_dev_in_se_units <= 3.0, "{}", r.max_dev_in_se_units);
}

#[test]
fn same_seed_same_report() {
    let part = BinPartition::new(24, 3).unwrap();
    let a = empirical_logavg_cov(&AutocovModel::arma_paper(), part, 500, 3).unwrap();
    let b = empirical_logavg_cov(&AutocovModel::arma_paper(), part, 500, 3).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let c = empirical_logavg_cov(&AutocovModel::arma_paper(), part, 500, 4).unwrap();
    assert_ne!(a.empirical_cov, c.empirical_cov);
}

#[test]
fn standard_errors_shrink_with_root_n() {
    let part = BinPartition::new(30, 3).unwrap();
    let small = empirical_logavg_cov(&AutocovModel::arma_paper(), part, 10_000, 5).unwrap();
    let large = empirical_logavg_cov(&AutocovModel::arma_paper(), part, 20_000, 5).unwrap();
    let (mut sum, mut n) = (0.0, 0);
    for i in 0..small.bins {
        for j in 0..small.bins {
            sum += large.std_err[i][j] / small.std_err[i][j];
            n += 1;
        }
    }
    let ratio = sum / n as f64;
    let target = 1.0 / 2f64.sqrt();
    assert!((0.9 * target..=1.1 * target).contains(&ratio), "{ratio}");
}

#[test]
fn too_few_replications_rejected() {
    assert!(empirical_logavg_cov(&white(), BinPartition::new(20, 2).unwrap(), 50, 1).is_err());
}

#[test]
fn ragged_partition_drops_remainder() {
    let r = empirical_logavg_cov(&white(), BinPartition::new(22, 4).unwrap(), 200, 1).unwrap();
    assert_eq!(r.bins, 5);
}
