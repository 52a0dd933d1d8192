mod common;

use common::{oracle, rand_tensor, rgb_tensor};
use fourierisp::imaging::RgbImage;
use fourierisp::metrics::*;
use fourierisp::{Error, Tensor};

fn noisy(x: &Tensor, sigma: f64, seed: u64) -> Tensor {
    x.zip_map(&rand_tensor(x.shape(), -1.0, 1.0, seed), |v, n| (v + sigma * n).clamp(0.0, 1.0))
}

#[test]
fn psnr_matches_mse_formula() {
    let a = rgb_tensor(9, 7, 1);
    let b = rgb_tensor(9, 7, 2);
    let mse = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
    assert!((psnr(&a, &b, 1.0).unwrap() - 10.0 * (1.0 / mse).log10()).abs() < 1e-10);
    assert!((psnr(&a, &b, 255.0).unwrap() - 10.0 * (255.0f64.powi(2) / mse).log10()).abs() < 1e-10);
}

#[test]
fn ssim_matches_direct_window_oracle() {
    let a = rgb_tensor(14, 17, 3);
    let b = noisy(&a, 0.2, 4);
    assert!((ssim(&a, &b).unwrap() - oracle::ssim(&a, &b)).abs() < 1e-12);
    assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn ssim_of_binary_image_and_its_inverse_is_low() {
    let a = Tensor::from_fn([1, 3, 32, 32], |[_, _, y, x]| ((y / 4 + x / 4) % 2) as f64);
    let inv = a.map(|v| 1.0 - v);
    assert!(ssim(&a, &inv).unwrap() < 0.1);
}

#[test]
fn ms_ssim_matches_oracle() {
    let a = rand_tensor([1, 1, 176, 176], 0.0, 1.0, 5);
    let b = noisy(&a, 0.3, 6);
    let got = ms_ssim(&a, &b, 5).unwrap();
    assert!((got - oracle::ms_ssim(&a, &b)).abs() < 1e-10, "{got}");
    assert!((ms_ssim(&a, &a, 5).unwrap() - 1.0).abs() < 1e-12);
    assert!(matches!(ms_ssim(&a.item(0), &b, 6), Err(Error::Parameter(_))));
    let small = rand_tensor([1, 1, 175, 176], 0.0, 1.0, 5);
    assert!(matches!(ms_ssim(&small, &small, 5), Err(Error::Dimension(_))));
}

#[test]
fn similarity_decreases_with_noise() {
    let a = rgb_tensor(48, 48, 7).map(|v| 0.25 + 0.5 * v);
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for sigma in [0.0, 0.02, 0.05, 0.1, 0.2] {
        let b = noisy(&a, sigma, 100);
        let cur = (psnr(&a, &b, 1.0).unwrap(), ssim(&a, &b).unwrap());
        if sigma > 0.0 {
            assert!(cur.0 < prev.0 && cur.1 < prev.1, "sigma {sigma}");
        }
        prev = cur;
    }
}

#[test]
fn metrics_are_symmetric() {
    let a = rgb_tensor(32, 32, 8);
    let b = noisy(&a, 0.1, 9);
    assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&b, &a, 1.0).unwrap());
    assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-14);
}

#[test]
fn invariance_to_common_circular_shifts() {
    let a = rgb_tensor(24, 28, 10);
    let b = noisy(&a, 0.15, 11);
    let (sa, sb) = (a.roll(5, -3), b.roll(5, -3));
    assert!((ssim(&a, &b).unwrap() - ssim(&sa, &sb).unwrap()).abs() < 1e-12);
    assert!((psnr(&a, &b, 1.0).unwrap() - psnr(&sa, &sb, 1.0).unwrap()).abs() < 1e-9);
    // Pooling keeps MS-SSIM shift-invariant only on the coarsest grid.
    let a = rand_tensor([1, 1, 176, 176], 0.0, 1.0, 12);
    let b = noisy(&a, 0.2, 13);
    let shifted = ms_ssim(&a.roll(16, -32), &b.roll(16, -32), 5).unwrap();
    assert!((ms_ssim(&a, &b, 5).unwrap() - shifted).abs() < 1e-12);
}

#[test]
fn report_mean_and_skips() {
    let gt = RgbImage::from_tensor(rgb_tensor(16, 16, 14)).unwrap();
    let p1 = RgbImage::from_tensor(noisy(gt.tensor(), 0.05, 15)).unwrap();
    let p2 = RgbImage::from_tensor(noisy(gt.tensor(), 0.1, 16)).unwrap();
    let opts = EvalOptions { quantize_8bit: false, ..EvalOptions::default() };
    let items = vec![
        ("a".to_string(), Ok((p1.clone(), gt.clone()))),
        ("bad".to_string(), Ok((RgbImage::zeros(16, 12), gt.clone()))),
        ("b".to_string(), Ok((p2.clone(), gt.clone()))),
    ];
    let mut calls = 0;
    let mut scorer = |_: &RgbImage, _: &RgbImage| {
        calls += 1;
        0.5
    };
    let report = evaluate_pairs(items, &opts, Some(&mut scorer));
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].0, "bad");
    let mean = report.mean().unwrap();
    let expected = (psnr_rgb(&p1, &gt).unwrap() + psnr_rgb(&p2, &gt).unwrap()) / 2.0;
    assert!((mean.psnr_db - expected).abs() < 1e-12);
    assert_eq!(mean.ms_ssim, None);
    assert_eq!(mean.lpips, Some(0.5));
    assert_eq!(calls, 2);

    let dir = tempfile::tempdir().unwrap();
    report.write(dir.path(), "metrics").unwrap();
    let kv = std::fs::read_to_string(dir.path().join("metrics.kv")).unwrap();
    assert!(kv.contains("psnr"));
    assert!(dir.path().join("metrics.txt").exists());
}

#[test]
fn quantized_evaluation_rounds_prediction() {
    let gt = RgbImage::from_tensor(rgb_tensor(12, 12, 17)).unwrap().quantized_8bit();
    let off = RgbImage::from_tensor(gt.tensor().map(|v| v + 0.001)).unwrap();
    let r = MetricReport::compute(&off, &gt, &EvalOptions::default(), None).unwrap();
    assert!(r.psnr_db.is_infinite() || r.psnr_db > 60.0);
    let raw = MetricReport::compute(&off, &gt, &EvalOptions { quantize_8bit: false, ..EvalOptions::default() }, None).unwrap();
    assert!(raw.psnr_db < 61.0);
}
