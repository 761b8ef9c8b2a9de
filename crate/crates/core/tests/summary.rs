use percal::camera::CameraCalibration;
use percal::summary::*;

fn pair(gt_vfov: f64, pred_vfov: f64) -> EstimatePair {
    EstimatePair {
        id: String::new(),
        gt: CameraCalibration::new(gt_vfov, 0.0, 0.0).unwrap(),
        pred: CameraCalibration::new(pred_vfov, 0.0, 0.0).unwrap(),
    }
}

#[test]
fn hand_computed_quartiles() {
    // vfov errors: 0.1, -0.2, 0.05, 0.3, -0.1, 0.0, 0.2, -0.05
    // sorted: -0.2 -0.1 -0.05 0 0.05 0.1 0.2 0.3
    // Q1 at h=1.75: -0.1 + 0.75*0.05 = -0.0625
    // median at h=3.5: 0.025; Q3 at h=5.25: 0.1 + 0.25*0.1 = 0.125
    let errs = [0.1, -0.2, 0.05, 0.3, -0.1, 0.0, 0.2, -0.05];
    let pairs: Vec<_> = errs
        .iter()
        .enumerate()
        .map(|(i, e)| pair(0.5 + 0.1 * i as f64, 0.5 + 0.1 * i as f64 + e))
        .collect();
    let s = summarize_errors(&pairs, 1).unwrap();
    let vfov = s
        .params
        .iter()
        .find(|p| p.param == SummaryParam::Vfov)
        .unwrap();
    let q = vfov.bins[0].quartiles.unwrap();
    assert!((q.q1 + 0.0625).abs() < 1e-12, "{}", q.q1);
    assert!((q.median - 0.025).abs() < 1e-12, "{}", q.median);
    assert!((q.q3 - 0.125).abs() < 1e-12, "{}", q.q3);

    let two = summarize_errors(&pairs, 2).unwrap();
    let vfov2 = two
        .params
        .iter()
        .find(|p| p.param == SummaryParam::Vfov)
        .unwrap();
    assert_eq!(vfov2.bins[0].count, 4);
    assert_eq!(vfov2.bins[1].count, 4);
    // First half: 0.1, -0.2, 0.05, 0.3 -> sorted -0.2 0.05 0.1 0.3, median 0.075
    assert!((vfov2.bins[0].quartiles.unwrap().median - 0.075).abs() < 1e-12);

    let cdf = &s.vfov_abs_cdf;
    assert!(cdf
        .windows(2)
        .all(|w| w[0].abs_error < w[1].abs_error && w[0].fraction <= w[1].fraction));
    assert_eq!(cdf.last().unwrap().fraction, 1.0);
    assert_eq!(cdf[0].abs_error, 0.0);
}
