use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fem::LameBounds;
use crate::mesh::generate_disk_mesh;

fn tight() -> SolverOptions {
    SolverOptions {
        tolerance: 1e-13,
        ..Default::default()
    }
}

fn random_field(mesh: &Mesh, rng: &mut ChaCha8Rng) -> LameField {
    let n = mesh.num_elements();
    LameField::new(
        (0..n).map(|_| rng.random_range(0.5..4.0)).collect(),
        (0..n).map(|_| rng.random_range(0.5..8.0)).collect(),
        LameBounds::default(),
    )
    .unwrap()
}

fn constant(mesh: &Mesh, l: f64, m: f64) -> LameField {
    LameField::constant(mesh.num_elements(), l, m, LameBounds::default()).unwrap()
}

#[test]
fn inverse_crime_is_stationary() {
    let mesh = generate_disk_mesh(0.2).unwrap();
    let truth = constant(&mesh, 3.0, 7.0);
    let data = MeasurementSet::synthesize(&mesh, &truth, &standard_loads(), tight()).unwrap();
    let ev = KohnVogelius::new(&mesh, &data, 0.0, tight())
        .unwrap()
        .evaluate(&truth, true)
        .unwrap();
    assert!(ev.value <= 1e-18, "J = {}", ev.value);
    assert!(ev.gradient.unwrap().sup_norm() <= 1e-9);
}

#[test]
fn regularizer_gradient_is_exact_when_data_match() {
    let mesh = generate_disk_mesh(0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let truth = random_field(&mesh, &mut rng);
    let data = MeasurementSet::synthesize(&mesh, &truth, &standard_loads(), tight()).unwrap();
    let rho = 0.01;
    let g = kv_gradient(&mesh, &truth, &data, rho, tight()).unwrap();
    let areas = mesh.areas();
    for e in 0..mesh.num_elements() {
        let l = rho * truth.lambda()[e] * areas[e];
        let m = rho * truth.mu()[e] * areas[e];
        assert!((g.lambda[e] - l).abs() <= 1e-12 * l);
        assert!((g.mu[e] - m).abs() <= 1e-12 * m);
    }
}

#[test]
fn misfit_is_nonnegative() {
    let mesh = generate_disk_mesh(0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth = random_field(&mesh, &mut rng);
    let data = MeasurementSet::synthesize(&mesh, &truth, &standard_loads(), tight()).unwrap();
    for _ in 0..5 {
        let f = random_field(&mesh, &mut rng);
        assert!(kohn_vogelius(&mesh, &f, &data, 0.0, tight()).unwrap() > 0.0);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mesh = generate_disk_mesh(0.25).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = random_field(&mesh, &mut rng);
    let data = MeasurementSet::synthesize(&mesh, &truth, &standard_loads(), tight()).unwrap();
    let field = random_field(&mesh, &mut rng);
    let kv = KohnVogelius::new(&mesh, &data, 1e-3, tight()).unwrap();
    let g = kv.evaluate(&field, true).unwrap().gradient.unwrap();
    let x = field.to_stacked();
    let n = mesh.num_elements();
    let h = 1e-6;
    for _ in 0..6 {
        let e = rng.random_range(0..n);
        for (k, analytic) in [(e, g.lambda[e]), (n + e, g.mu[e])] {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let jp = kv.evaluate(&LameField::from_stacked(&xp, field.bounds()).unwrap(), false).unwrap().value;
            let jm = kv.evaluate(&LameField::from_stacked(&xm, field.bounds()).unwrap(), false).unwrap().value;
            let fd = (jp - jm) / (2.0 * h);
            assert!((fd - analytic).abs() <= 1e-5 * analytic.abs(), "{fd} vs {analytic}");
        }
    }
}

#[test]
fn gradient_permutes_with_elements() {
    let mesh = generate_disk_mesh(0.25).unwrap();
    let n = mesh.num_elements();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let triangles = perm.iter().map(|&p| mesh.triangles()[p]).collect();
    let shuffled = Mesh::new(mesh.nodes().to_vec(), triangles, mesh.boundary_edges().to_vec()).unwrap();
    let truth = constant(&mesh, 3.0, 7.0);
    let data = MeasurementSet::synthesize(&mesh, &truth, &standard_loads(), tight()).unwrap();
    let field = random_field(&mesh, &mut rng);
    let g = kv_gradient(&mesh, &field, &data, 1e-4, tight()).unwrap();
    let gp = kv_gradient(&shuffled, &field.permuted(&perm).unwrap(), &data, 1e-4, tight()).unwrap();
    for (i, &p) in perm.iter().enumerate() {
        assert!((gp.lambda[i] - g.lambda[p]).abs() <= 1e-12 * g.sup_norm());
        assert!((gp.mu[i] - g.mu[p]).abs() <= 1e-12 * g.sup_norm());
    }
}

#[test]
fn starting_at_truth_stops_immediately() {
    let mesh = generate_disk_mesh(0.25).unwrap();
    let truth = constant(&mesh, 3.0, 7.0);
    let data = MeasurementSet::synthesize(&mesh, &truth, &standard_loads(), tight()).unwrap();
    let p = ConstantParameterization {
        elements: mesh.num_elements(),
        bounds: LameBounds::default(),
    };
    let run = reconstruct(&mesh, &data, &p, &truth, &InversionConfig::default()).unwrap();
    assert!(run.converged);
    assert_eq!(run.iterations(), 0);
}

#[test]
fn constant_reconstruction_on_coarse_mesh() {
    let mesh = generate_disk_mesh(0.2).unwrap();
    let truth = constant(&mesh, 3.0, 7.0);
    let data = MeasurementSet::synthesize(&mesh, &truth, &standard_loads(), SolverOptions::default()).unwrap();
    let p = ConstantParameterization {
        elements: mesh.num_elements(),
        bounds: LameBounds::default(),
    };
    let run = reconstruct(&mesh, &data, &p, &constant(&mesh, 1.0, 1.0), &InversionConfig::default()).unwrap();
    let x = p.from_field(&run.final_field);
    assert!((x[0] - 3.0).abs() / 3.0 < 1e-3, "{x:?} {:?}", run.stop);
    assert!((x[1] - 7.0).abs() / 7.0 < 1e-3, "{x:?}");
    assert!(run.history.windows(2).all(|w| w[1].value < w[0].value));
    assert!(run.history_csv().lines().count() == run.history.len() + 1);
}
