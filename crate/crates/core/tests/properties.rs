use limitcurve::analytic::*;
use limitcurve::continuation::{trace_ll_indirect, ScheduleOptions};
use limitcurve::fem::return_mapping::{mc_return_mapping, return_map_plane_strain, yield_value};
use limitcurve::fem::MohrCoulomb;
use limitcurve::limitanalysis::brackets_from_trace;
use limitcurve::potential::{scaled_value, LoadVector, Potential};
use nalgebra::{DMatrix, Matrix3};
use proptest::prelude::*;

fn models() -> Vec<AnalyticModel> {
    vec![
        make_scalar_example(ScalarKind::Quadratic),
        make_scalar_example(ScalarKind::CappedQuadratic),
        make_scalar_example(ScalarKind::Exponential),
        make_psd_quadratic(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0])).unwrap(),
        make_psd_quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap(),
        make_ball_family(0.5).unwrap(),
        make_wedge_family(0.5).unwrap(),
    ]
}

fn point(m: &AnalyticModel, xs: &[f64]) -> Vec<f64> {
    xs[..m.dim()].to_vec()
}

proptest! {
    #[test]
    fn convexity_inequality(
        v in prop::collection::vec(-10.0..10.0f64, 2),
        w in prop::collection::vec(-10.0..10.0f64, 2),
        a in 0.0..1.0f64,
    ) {
        for m in models() {
            let (v, w) = (point(&m, &v), point(&m, &w));
            let mix: Vec<f64> = v.iter().zip(&w).map(|(x, y)| a * x + (1.0 - a) * y).collect();
            let (fv, fw, fm) = (m.value(&v), m.value(&w), m.value(&mix));
            let tol = 1e-9 * (1.0 + fv.abs() + fw.abs());
            prop_assert!(fm <= a * fv + (1.0 - a) * fw + tol, "{}", m.name());
        }
    }

    #[test]
    fn scaled_value_nondecreasing(v in prop::collection::vec(-5.0..5.0f64, 2), o in 0.01..100.0f64) {
        for m in models() {
            let v = point(&m, &v);
            let (lo, hi) = (scaled_value(&m, &v, o), scaled_value(&m, &v, 1.5 * o));
            prop_assert!(lo <= hi + 1e-12 * (1.0 + hi.abs()), "{}", m.name());
        }
    }

    #[test]
    fn hessian_symmetric_psd(v in prop::collection::vec(-5.0..5.0f64, 2)) {
        for m in models() {
            let h = m.hessian(&point(&m, &v));
            prop_assert_eq!(h.symmetry_defect(), 0.0);
            prop_assert!(h.to_dense().symmetric_eigen().eigenvalues.min() >= -1e-8);
        }
    }

    #[test]
    fn traces_are_monotone_and_bracketed(b0 in 0.2..2.0f64, b1 in -2.0..2.0f64) {
        for m in models() {
            let b = LoadVector::new(point(&m, &[b0, b1]), "b").unwrap();
            let t = trace_ll_indirect(&m, &b, &ScheduleOptions { max_steps: 60, ..Default::default() });
            let br = brackets_from_trace(&t);
            for w in br.windows(2) {
                let tol = 1e-8 * (1.0 + w[1].upper.abs());
                prop_assert!(w[1].upper >= w[0].upper - tol, "{}", m.name());
                prop_assert!(w[1].lower >= w[0].lower - tol, "{}", m.name());
            }
            for x in &br {
                prop_assert!(x.lower <= x.upper + 1e-9 * (1.0 + x.upper.abs()), "{} {:?}", m.name(), x);
            }
        }
    }

    #[test]
    fn return_mapping_is_admissible(
        e in prop::collection::vec(-3e-3..3e-3f64, 6),
        lambda in 0.5..2.0f64,
    ) {
        let mat = MohrCoulomb::default();
        let strain = Matrix3::new(e[0], e[3], e[4], e[3], e[1], e[5], e[4], e[5], e[2]);
        let up = mc_return_mapping(&strain, &mat, lambda);
        let c = mat.reduced(lambda).yield_constant();
        prop_assert!(yield_value(&up.stress, &mat, lambda) <= 1e-8 * c);
        // the energy is the value of the maximized function at the stress
        let (lame, shear) = mat.lame();
        let s = up.stress;
        let tr = s.trace();
        let compl = (s.norm_squared() - lame / (3.0 * lame + 2.0 * shear) * tr * tr) / (2.0 * shear);
        let value = s.component_mul(&strain).sum() - 0.5 * compl;
        prop_assert!((up.energy - value).abs() <= 1e-10 * (1.0 + value.abs()), "{} {}", up.energy, value);
    }

    #[test]
    fn stress_is_lipschitz_in_strain(
        e in prop::collection::vec(-3e-3..3e-3f64, 3),
        d in prop::collection::vec(-1e-5..1e-5f64, 3),
    ) {
        let mat = MohrCoulomb::default();
        let a = return_map_plane_strain([e[0], e[1], e[2]], &mat, 1.0);
        let b = return_map_plane_strain([e[0] + d[0], e[1] + d[1], e[2] + d[2]], &mat, 1.0);
        let (lame, shear) = mat.lame();
        let bound = (3.0 * lame + 2.0 * shear) * (d[0] * d[0] + d[1] * d[1] + 0.5 * d[2] * d[2]).sqrt();
        let ds = ((a.stress[0] - b.stress[0]).powi(2)
            + (a.stress[1] - b.stress[1]).powi(2)
            + 2.0 * (a.stress[2] - b.stress[2]).powi(2)
            + (a.stress_zz - b.stress_zz).powi(2))
        .sqrt();
        prop_assert!(ds <= bound * (1.0 + 1e-9) + 1e-12, "{ds} {bound}");
    }
}
