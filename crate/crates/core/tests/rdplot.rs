use rdcensor_core::estimate::estimate_sharp;
use rdcensor_core::rdplot::rdplot_data;
use rdcensor_core::{Side, TransformMethod, TransformedSample};

fn fixture(pseudo_y: Vec<f64>) -> TransformedSample {
    let forcing: Vec<f64> = (0..20).map(|k| (2.0 * k as f64 - 19.0) / 20.0).collect();
    TransformedSample {
        treated: forcing.iter().map(|&w| w >= 0.0).collect(),
        forcing,
        pseudo_y,
        method: TransformMethod::Dr,
    }
}

#[test]
fn two_bins_per_side_match_hand_partition() {
    // Forcing runs -0.95, -0.85, ..., 0.95. The left side [-0.95, 0) splits
    // at -0.475 and the right side [0, 0.95] at 0.475, so each bin holds five
    // consecutive records.
    let ts = fixture((0..20).map(|k| k as f64).collect());
    let est = estimate_sharp(&ts, 0.0, 1.0).unwrap();
    let plot = rdplot_data(&ts, &est, 2).unwrap();
    assert_eq!(plot.bins.len(), 4);
    let means: Vec<f64> = plot.bins.iter().map(|b| b.mean.unwrap()).collect();
    assert_eq!(means, vec![2.0, 7.0, 12.0, 17.0]);
    assert!(plot.bins.iter().all(|b| b.count == 5));
    assert_eq!(plot.bins[0].side, Side::Left);
    assert_eq!(plot.bins[3].side, Side::Right);
    assert!((plot.bins[0].lower + 0.95).abs() < 1e-15);
    assert!((plot.bins[1].upper - 0.0).abs() < 1e-15);
    assert!((plot.bins[2].lower - 0.0).abs() < 1e-15);
    assert!((plot.bins[0].center + 0.7125).abs() < 1e-15);
    assert_eq!(plot.fitted, est.y_fits);
}

#[test]
fn one_bin_per_side_gives_side_means() {
    let ys: Vec<f64> = (0..20).map(|k| ((k * 7) % 11) as f64).collect();
    let ts = fixture(ys.clone());
    let est = estimate_sharp(&ts, 0.0, 1.0).unwrap();
    let plot = rdplot_data(&ts, &est, 1).unwrap();
    let left = ys[..10].iter().sum::<f64>() / 10.0;
    let right = ys[10..].iter().sum::<f64>() / 10.0;
    assert!((plot.bins[0].mean.unwrap() - left).abs() < 1e-14);
    assert!((plot.bins[1].mean.unwrap() - right).abs() < 1e-14);
}

#[test]
fn constant_response_and_empty_bins() {
    let ts = fixture(vec![3.25; 20]);
    let est = estimate_sharp(&ts, 0.0, 1.0).unwrap();
    let plot = rdplot_data(&ts, &est, 40).unwrap();
    assert_eq!(plot.bins.len(), 80);
    assert!(plot.bins.iter().filter_map(|b| b.mean).all(|m| m == 3.25));
    assert!(plot.bins.iter().any(|b| b.count == 0 && b.mean.is_none()));
    assert_eq!(plot.bins.iter().map(|b| b.count).sum::<usize>(), 20);
    // Bins never straddle the cutoff.
    assert!(plot.bins.iter().all(|b| b.upper <= 0.0 || b.lower >= 0.0));
    assert_eq!(rdplot_data(&ts, &est, 0).unwrap_err().kind(), "InvalidArgument");
}
