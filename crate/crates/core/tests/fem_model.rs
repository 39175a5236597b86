use std::path::Path;

use limitcurve::fem::model::deviatoric_norm;
use limitcurve::fem::return_mapping::Regime;
use limitcurve::fem::vtk::write_vtk;
use limitcurve::fem::{FemModel, Mesh, MohrCoulomb};
use limitcurve::potential::{check_gradient, check_monotone_family, ParamFamily, Potential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture_mesh() -> Mesh {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/unit_square.mesh");
    let (mesh, warnings) = Mesh::load_native(&path).unwrap();
    assert!(warnings.is_empty());
    mesh
}

fn fixture(material: MohrCoulomb) -> FemModel {
    FemModel::new(fixture_mesh(), material, 0.5).unwrap()
}

fn unsupported_square() -> FemModel {
    let (mesh, _) = Mesh::parse_native("nodes 4\n0 0\n1 0\n1 1\n0 1\nelements 2\n0 1 2\n0 2 3\ndirichlet 0\n").unwrap();
    FemModel::new(mesh, MohrCoulomb::default(), 0.5).unwrap()
}

/// Displacement of the free dofs sampled from a field on the node coordinates.
fn interpolate(m: &FemModel, field: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let mut u = Vec::with_capacity(m.n_free());
    for (p, f) in m.mesh.nodes.iter().zip(&m.mesh.fixed) {
        let v = field(*p);
        for d in 0..2 {
            if !f[d] {
                u.push(v[d]);
            }
        }
    }
    assert_eq!(u.len(), m.n_free());
    u
}

fn random_u(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

#[test]
fn fixture_lifts_to_quadratic_mesh() {
    let m = fixture_mesh();
    assert_eq!((m.n_corner, m.n_nodes()), (4, 9));
}

#[test]
fn truncated_file_names_the_missing_section() {
    let e = Mesh::parse_native("nodes 4\n0 0\n1 0\n1 1\n0 1\n").unwrap_err().to_string();
    assert!(e.contains("elements"), "{e}");
}

#[test]
fn gravity_balances_weight() {
    let mat = MohrCoulomb {
        unit_weight: 20e3,
        ..Default::default()
    };
    let m = fixture(mat);
    let total: f64 = m.nodal_gravity().iter().map(|f| f[1]).sum();
    assert!((total + 20e3).abs() < 1e-9 * 20e3, "{total}");
    let doubled = fixture(MohrCoulomb {
        unit_weight: 40e3,
        ..Default::default()
    });
    let (a, b) = (m.load().as_slice(), doubled.load().as_slice());
    assert!(a.iter().zip(b).all(|(x, y)| 2.0 * x == *y));
}

#[test]
fn fully_supported_mesh_is_rejected() {
    let (mesh, _) = Mesh::parse_native(
        "nodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 2\ndirichlet 3\n0 1 1\n1 1 1\n2 1 1\n",
    )
    .unwrap();
    let e = FemModel::new(mesh, MohrCoulomb::default(), 0.5).err().unwrap();
    assert!(e.to_string().contains("free"), "{e}");
}

#[test]
fn linear_field_has_elastic_energy() {
    let m = fixture(MohrCoulomb::default());
    let (alpha, beta) = (2e-5, -1e-5);
    let u = interpolate(&m, |p| [alpha * p[1], beta * p[1]]);
    let mat = MohrCoulomb::default();
    let lame = mat.young * mat.poisson / ((1.0 + mat.poisson) * (1.0 - 2.0 * mat.poisson));
    let shear = mat.young / (2.0 * (1.0 + mat.poisson));
    // strain (0, beta, alpha) in engineering notation
    let energy = 0.5 * ((lame + 2.0 * shear) * beta * beta + shear * alpha * alpha);
    assert!((m.value(&u) - energy).abs() < 1e-12 * energy, "{} {}", m.value(&u), energy);
    let g = m.grad(&u);
    let ku = m.hessian(&vec![0.0; m.n_free()]).matvec(&u);
    for (a, b) in g.iter().zip(&ku) {
        assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
    }
    assert!(m.grad(&vec![0.0; m.n_free()]).iter().all(|x| *x == 0.0));
}

#[test]
fn gradient_matches_finite_differences() {
    let m = fixture(MohrCoulomb::default());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for lambda in [0.5, 1.0, 1.5] {
        let model = limitcurve::model_at(&m, lambda);
        for _ in 0..20 {
            let u = random_u(&mut rng, m.n_free(), 3e-3);
            let h = 1e-6 * (1.0 + limitcurve::potential::norm(&u));
            let err = check_gradient(&model, &u, h);
            assert!(err <= 1e-5, "lambda {lambda} err {err}");
        }
    }
}

#[test]
fn tangent_matches_directional_differences() {
    let m = fixture(MohrCoulomb::default());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    let mut checked = 0;
    let mut plastic = 0;
    for _ in 0..50 {
        let u = random_u(&mut rng, m.n_free(), 3e-3);
        let d = random_u(&mut rng, m.n_free(), 1e-3);
        let shifted: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + h * b).collect();
        // skip points where the step crosses into another regime
        if m.regimes(1.0, &u) != m.regimes(1.0, &shifted) {
            continue;
        }
        checked += 1;
        plastic += m.regimes(1.0, &u).iter().any(|r| *r != Regime::Elastic) as usize;
        let (g0, g1) = (m.grad(&u), m.grad(&shifted));
        let kd = m.hessian(&u).matvec(&d);
        let fd: Vec<f64> = g1.iter().zip(&g0).map(|(a, b)| (a - b) / h).collect();
        let diff: f64 = fd.iter().zip(&kd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = kd.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(diff <= 1e-4 * scale.max(1e-12), "{diff} {scale}");
        assert_eq!(m.hessian(&u).symmetry_defect(), 0.0);
    }
    assert!(checked > 25 && plastic > 10, "{checked} {plastic}");
}

#[test]
fn deviatoric_strain_field() {
    let m = unsupported_square();
    let zero = vec![0.0; m.n_free()];
    assert!(m.deviatoric_strain(&zero).iter().all(|x| *x == 0.0));
    let shift = interpolate(&m, |_| [0.3, -0.2]);
    assert!(m.deviatoric_strain(&shift).iter().all(|x| x.abs() < 1e-15));
    let a = 1e-3;
    let vol = interpolate(&m, |p| [a * p[0], a * p[1]]);
    // dev of diag(a, a, 0) is a/3 (1, 1, -2)
    let expected = a / 3.0 * 6f64.sqrt();
    for v in m.deviatoric_strain(&vol) {
        assert!((v - expected).abs() < 1e-14);
    }
    assert!((deviatoric_norm([a, a, 0.0]) - expected).abs() < 1e-18);
}

#[test]
fn strength_reduction_lowers_the_potential() {
    let m = fixture(MohrCoulomb::default());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<Vec<f64>> = (0..30).map(|_| random_u(&mut rng, m.n_free(), 1e-2)).collect();
    check_monotone_family(&m, &[0.5, 0.8, 1.0, 1.5, 2.0], &pts).unwrap();
    assert!(pts.iter().any(|u| m.value_at(2.0, u) < m.value_at(0.5, u)));
}

#[test]
fn vtk_output_lists_corner_nodes() {
    let m = fixture(MohrCoulomb::default());
    let u = vec![1e-3; m.n_free()];
    let text = write_vtk(&m.mesh, &m.full_displacement(&u), &m.deviatoric_strain(&u), "square");
    assert!(text.contains("POINTS 4 double"));
    assert!(text.contains("CELLS 2 8"));
    assert!(text.contains("CELL_DATA 2"));
    // supported corners have zero displacement
    assert!(text.contains("POINT_DATA 4\nVECTORS displacement double\n0.0000000000000000e0 0.0000000000000000e0 0"));
}
