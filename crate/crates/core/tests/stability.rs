use fhbvm::stability::{
    butcher_tableau, eigen_condition, hausdorff_distance, region_boundary, segment_points, stability_at_infinity,
    stability_value, GridSpec,
};
use fhbvm::special::gamma;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn one_stage_closed_forms() {
    for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let tab = butcher_tableau(1, alpha).unwrap();
        assert!((tab.c[0] - 1.0 / (1.0 + alpha)).abs() < 1e-15);
        let g = gamma(alpha + 1.0);
        let a = (1.0 + alpha).powf(-alpha) / g;
        for q in [Complex64::new(-2.0, 0.5), Complex64::new(-0.3, -4.0), Complex64::new(1.5, 2.0)] {
            let want = 1.0 + (q / g) / (1.0 - q * a);
            let got = stability_value(&tab, q).unwrap();
            assert!((got - want).norm() < 1e-14 * want.norm().max(1.0));
        }
        let inf = stability_at_infinity(&tab).unwrap();
        assert!((inf - (1.0 - (1.0 + alpha).powf(alpha))).abs() < 1e-12);
    }
}

#[test]
fn near_one_reduces_to_the_gauss_method() {
    // α → 1 turns the weight into Lebesgue measure and R into the (2,2) Padé approximant.
    let tab = butcher_tableau(2, 0.999).unwrap();
    for q in [Complex64::new(-1.0, 0.0), Complex64::new(-0.5, 2.0), Complex64::new(-6.0, -1.0)] {
        let pade = (1.0 + q / 2.0 + q * q / 12.0) / (1.0 - q / 2.0 + q * q / 12.0);
        let got = stability_value(&tab, q).unwrap();
        assert!((got - pade).norm() < 1e-2, "q = {q}: {got} vs {pade}");
    }
}

#[test]
fn stiff_limit_decreases_with_stage_count() {
    let values: Vec<f64> = (1..=30)
        .map(|s| stability_at_infinity(&butcher_tableau(s, 0.5).unwrap()).unwrap().abs())
        .collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}

#[test]
fn eigenvalues_lie_in_the_sector() {
    for alpha in [0.1, 0.5, 0.9] {
        let cond = eigen_condition(&butcher_tableau(22, alpha).unwrap());
        assert_eq!(cond.eigenvalues.len(), 22);
        assert!(cond.holds(), "alpha = {alpha}: ratio {}", cond.worst_ratio);
        assert!(cond.eigenvalues.iter().all(|mu| mu.re > 0.0));
    }
}

#[test]
fn decays_on_the_negative_axis() {
    for alpha in [0.3, 0.5, 0.7] {
        for s in [1, 5, 22] {
            let tab = butcher_tableau(s, alpha).unwrap();
            for x in [0.1, 1.0, 10.0, 1e3] {
                let r = stability_value(&tab, Complex64::new(-x, 0.0)).unwrap();
                assert!(r.norm() < 1.0, "alpha = {alpha}, s = {s}, q = -{x}: {r}");
            }
        }
    }
}

#[test]
fn level_curves_approach_the_exact_one() {
    let grid = GridSpec {
        width: 161,
        height: 161,
        ..GridSpec::default()
    };
    let distance = |s| {
        let data = region_boundary(s, 0.5, grid).unwrap();
        hausdorff_distance(&segment_points(&data.r_boundary), &segment_points(&data.e_boundary))
    };
    let (d1, d22) = (distance(1), distance(22));
    assert!(d22 < d1, "{d1} vs {d22}");
}

#[test]
fn region_output_layout() {
    let grid = GridSpec {
        width: 21,
        height: 11,
        ..GridSpec::default()
    };
    let data = region_boundary(3, 0.5, grid).unwrap();
    assert_eq!(data.samples.len(), 21 * 11);
    assert_eq!(data.samples[1].q, grid.point(1, 0));
    assert_eq!(data.samples[21].q, grid.point(0, 1));
    for [(x0, y0), (x1, y1)] in &data.lambda_rays {
        assert_eq!((*x0, *y0), (0.0, 0.0));
        assert!(((y1 / x1).abs() - 1.0).abs() < 1e-12);
    }
    let mut csv = Vec::new();
    data.write_samples_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some("re,im,abs_r,abs_e"));
    assert_eq!(text.lines().count(), 1 + 21 * 11);
    let mut csv = Vec::new();
    data.write_boundary_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("R,") || l.starts_with("E,") || l.starts_with("ray,")));
}

#[test]
fn degenerate_grid_is_rejected() {
    let grid = GridSpec {
        width: 1,
        ..GridSpec::default()
    };
    assert!(region_boundary(2, 0.5, grid).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugate_symmetry(alpha in 0.05f64..0.95, s in 1usize..12, re in -50.0f64..5.0, im in -50.0f64..50.0) {
        let tab = butcher_tableau(s, alpha).unwrap();
        let q = Complex64::new(re, im);
        if let (Ok(a), Ok(b)) = (stability_value(&tab, q), stability_value(&tab, q.conj())) {
            prop_assert!((a.conj() - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }
}
