use nalgebra::DMatrix;

use super::*;
use crate::mesh::generate_disk_mesh;

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Deterministic pseudo-random values in [0, 1) without pulling an RNG.
fn lcg(seed: u64, n: usize) -> Vec<f64> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

fn varying_field(mesh: &Mesh, seed: u64) -> LameField {
    let r = lcg(seed, 2 * mesh.num_elements());
    let n = mesh.num_elements();
    LameField::new(
        r[..n].iter().map(|v| 0.5 + 4.0 * v).collect(),
        r[n..].iter().map(|v| 0.5 + 8.0 * v).collect(),
        LameBounds::default(),
    )
    .unwrap()
}

#[test]
fn stress_examples() {
    let id = [[1.0, 0.0], [0.0, 1.0]];
    assert_eq!(isotropic_stress(1.0, 1.0, &id), [[4.0, 0.0], [0.0, 4.0]]);
    assert_eq!(isotropic_stress(2.5, 9.0, &[[0.0; 2]; 2]), [[0.0; 2]; 2]);
    assert_eq!(
        isotropic_stress(3.0, 7.0, &[[1.0, 2.0], [2.0, -1.0]]),
        [[14.0, 28.0], [28.0, -14.0]]
    );
}

#[test]
fn energy_density_matches_stress_contraction() {
    let s = [[0.3, -0.2], [-0.2, 1.1]];
    let e = energy_density(2.0, 5.0, &s);
    assert!(rel(e, contract(&isotropic_stress(2.0, 5.0, &s), &s)) < 1e-15);
}

#[test]
fn doubling_parameters_doubles_stiffness() {
    let mesh = generate_disk_mesh(0.3).unwrap();
    let f = varying_field(&mesh, 1);
    let load = SurfaceLoad::Constant([0.1, 0.1]);
    let k1 = assemble(&mesh, &f, &load).unwrap().stiffness;
    let k2 = assemble(&mesh, &f.scaled(2.0).unwrap(), &load).unwrap().stiffness;
    assert_eq!(k1.scale(2.0), k2);
}

#[test]
fn stiffness_is_exactly_symmetric() {
    let mesh = generate_disk_mesh(0.2).unwrap();
    let sys = assemble(&mesh, &varying_field(&mesh, 2), &SurfaceLoad::Constant([0.0, 0.0])).unwrap();
    assert_eq!(sys.stiffness.asymmetry(), 0.0);
}

#[test]
fn quadratic_form_matches_elementwise_energy() {
    let mesh = generate_disk_mesh(0.25).unwrap();
    let field = varying_field(&mesh, 3);
    let sys = assemble(&mesh, &field, &SurfaceLoad::Constant([0.0, 0.0])).unwrap();
    let u = lcg(4, sys.dof_map.num_free_dofs());
    let disp = sys.dof_map.expand(&u, mesh.num_nodes());
    // independent oracle: gradient from the linear interpolant through the
    // three vertices, solved as a 2x2 system per component
    let mut oracle = 0.0;
    for (e, t) in mesh.triangles().iter().enumerate() {
        let p = t.map(|i| mesh.nodes()[i]);
        let a = nalgebra::Matrix2::new(
            p[1][0] - p[0][0],
            p[1][1] - p[0][1],
            p[2][0] - p[0][0],
            p[2][1] - p[0][1],
        );
        let inv = a.try_inverse().unwrap();
        let mut grad = [[0.0; 2]; 2];
        for c in 0..2 {
            let rhs = nalgebra::Vector2::new(
                disp[t[1]][c] - disp[t[0]][c],
                disp[t[2]][c] - disp[t[0]][c],
            );
            let g = inv * rhs;
            grad[c] = [g[0], g[1]];
        }
        let off = 0.5 * (grad[0][1] + grad[1][0]);
        let s = [[grad[0][0], off], [off, grad[1][1]]];
        let area = 0.5 * a.determinant();
        let sigma = isotropic_stress(field.lambda()[e], field.mu()[e], &s);
        oracle += area * contract(&sigma, &s);
    }
    assert!(rel(sys.stiffness.quadratic_form(&u), oracle) < 1e-12);
}

#[test]
fn stiffness_is_positive_definite_on_coarse_mesh() {
    let mesh = generate_disk_mesh(0.4).unwrap();
    let sys = assemble(&mesh, &varying_field(&mesh, 5), &SurfaceLoad::Constant([0.0, 0.0])).unwrap();
    let n = sys.stiffness.dim();
    let dense = DMatrix::from_fn(n, n, |i, j| sys.stiffness.get(i, j));
    let min = dense.symmetric_eigenvalues().min();
    assert!(min > 0.0, "smallest eigenvalue {min}");
}

#[test]
fn zero_load_gives_zero_displacement() {
    let mesh = generate_disk_mesh(0.2).unwrap();
    let f = LameField::constant(mesh.num_elements(), 3.0, 7.0, LameBounds::default()).unwrap();
    let s = solve_neumann(&mesh, &f, &SurfaceLoad::Constant([0.0, 0.0]), opts()).unwrap();
    assert!(s.displacement.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn neumann_solution_is_linear_in_load() {
    let mesh = generate_disk_mesh(0.2).unwrap();
    let solver = ForwardSolver::new(&mesh, &varying_field(&mesh, 6), opts()).unwrap();
    let u1 = solver.solve_neumann(&SurfaceLoad::Constant([0.1, 0.2])).unwrap();
    let u2 = solver.solve_neumann(&SurfaceLoad::Constant([0.2, 0.4])).unwrap();
    let scale = u1.displacement.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in u1.displacement.iter().zip(&u2.displacement) {
        for c in 0..2 {
            assert!((2.0 * a[c] - b[c]).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn dirichlet_nodes_are_exactly_zero() {
    let mesh = generate_disk_mesh(0.2).unwrap();
    let f = LameField::constant(mesh.num_elements(), 3.0, 7.0, LameBounds::default()).unwrap();
    let s = solve_neumann(&mesh, &f, &SurfaceLoad::Constant([0.3, 0.5]), opts()).unwrap();
    for &n in mesh.dirichlet_nodes() {
        assert_eq!(s.displacement[n], [0.0, 0.0]);
    }
    for (st, d) in s.per_element_strain.iter().zip(&s.per_element_div) {
        assert_eq!(st[0][0] + st[1][1], *d);
        assert_eq!(st[0][1], st[1][0]);
    }
}

#[test]
fn energy_identity_for_first_standard_load() {
    let mesh = generate_disk_mesh(0.08).unwrap();
    let field = LameField::constant(mesh.num_elements(), 3.0, 7.0, LameBounds::default()).unwrap();
    let solver = ForwardSolver::new(&mesh, &field, opts()).unwrap();
    let load = SurfaceLoad::Constant([0.1, 0.1]);
    let s = solver.solve_neumann(&load).unwrap();
    let g = load.nodal_values(&mesh).unwrap();
    let boundary = boundary_inner(solver.boundary_mass(), &g, &s.trace_on_neumann);
    let interior = solver.strain_energy(&s);
    assert!(boundary > 0.0);
    assert!(rel(boundary, interior) < 1e-10, "{boundary} vs {interior}");
}

#[test]
fn boundary_mass_integrates_constants_to_arc_length() {
    let mesh = generate_disk_mesh(0.1).unwrap();
    let m = boundary_mass(&mesh);
    let ones = vec![1.0; m.dim()];
    let len: f64 = mesh
        .boundary_edges()
        .iter()
        .filter(|e| e.tag == BoundaryTag::Neumann)
        .map(|e| crate::mesh::distance(mesh.nodes()[e.a], mesh.nodes()[e.b]))
        .sum();
    assert!(rel(m.quadratic_form(&ones), len) < 1e-14);
    // the polygonal half circle approaches length pi
    assert!((len - std::f64::consts::PI).abs() < 0.01);
}

#[test]
fn galerkin_residual_is_small() {
    let mesh = generate_disk_mesh(0.1).unwrap();
    let solver = ForwardSolver::new(&mesh, &varying_field(&mesh, 7), opts()).unwrap();
    let load = SurfaceLoad::Constant([0.3, 0.5]);
    let s = solver.solve_neumann(&load).unwrap();
    let b = solver.load_vector(&load).unwrap();
    let r: Vec<f64> = solver
        .stiffness()
        .mul_vec(&s.free_vector(solver.dofs()))
        .iter()
        .zip(&b)
        .map(|(ku, bi)| ku - bi)
        .collect();
    assert!(solver::norm(&r) <= 1e-12 * solver::norm(&b));
}

#[test]
fn dirichlet_solve_reproduces_neumann_solution() {
    let mesh = generate_disk_mesh(0.12).unwrap();
    let solver = ForwardSolver::new(&mesh, &varying_field(&mesh, 8), opts()).unwrap();
    let n = solver.solve_neumann(&SurfaceLoad::Constant([0.2, 0.1])).unwrap();
    let d = solver.solve_dirichlet(&n.trace_on_neumann).unwrap();
    let scale = n.displacement.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in n.displacement.iter().zip(&d.displacement) {
        for c in 0..2 {
            assert!((a[c] - b[c]).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn dirichlet_solve_is_linear_and_zero_preserving() {
    let mesh = generate_disk_mesh(0.2).unwrap();
    let solver = ForwardSolver::new(&mesh, &varying_field(&mesh, 9), opts()).unwrap();
    let m = mesh.neumann_nodes().len();
    let zero = solver.solve_dirichlet(&vec![[0.0; 2]; m]).unwrap();
    assert!(zero.displacement.iter().flatten().all(|&v| v == 0.0));
    let r = lcg(10, 2 * m);
    let trace: Vec<[f64; 2]> = r.chunks(2).map(|c| [c[0], c[1]]).collect();
    let scaled: Vec<[f64; 2]> = trace.iter().map(|v| [-3.0 * v[0], -3.0 * v[1]]).collect();
    let a = solver.solve_dirichlet(&trace).unwrap();
    let b = solver.solve_dirichlet(&scaled).unwrap();
    for (x, y) in a.displacement.iter().zip(&b.displacement) {
        for c in 0..2 {
            assert!((-3.0 * x[c] - y[c]).abs() <= 1e-12);
        }
    }
    // junction nodes are forced to zero
    for (slot, &node) in mesh.neumann_nodes().iter().enumerate() {
        if mesh.dirichlet_nodes().contains(&node) {
            assert_eq!(a.trace_on_neumann[slot], [0.0, 0.0]);
        }
    }
}

#[test]
fn stiffer_material_stores_less_boundary_energy() {
    let mesh = generate_disk_mesh(0.15).unwrap();
    let soft = varying_field(&mesh, 11);
    let stiff = LameField::new(
        soft.lambda().iter().map(|v| v + 0.7).collect(),
        soft.mu().iter().map(|v| v * 1.3).collect(),
        LameBounds::default(),
    )
    .unwrap();
    let load = SurfaceLoad::Constant([0.3, 0.5]);
    let g = load.nodal_values(&mesh).unwrap();
    let m = boundary_mass(&mesh);
    let e_soft = boundary_inner(&m, &g, &solve_neumann(&mesh, &soft, &load, opts()).unwrap().trace_on_neumann);
    let e_stiff = boundary_inner(&m, &g, &solve_neumann(&mesh, &stiff, &load, opts()).unwrap().trace_on_neumann);
    assert!(e_stiff < e_soft);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let mesh = generate_disk_mesh(0.3).unwrap();
    let f = LameField::constant(3, 1.0, 1.0, LameBounds::default()).unwrap();
    assert!(assemble(&mesh, &f, &SurfaceLoad::Constant([1.0, 0.0])).is_err());
    let f = LameField::constant(mesh.num_elements(), 1.0, 1.0, LameBounds::default()).unwrap();
    assert!(assemble(&mesh, &f, &SurfaceLoad::Nodal(vec![[0.0; 2]; 2])).is_err());
    assert!(assemble(&mesh, &f, &SurfaceLoad::Constant([f64::NAN, 0.0])).is_err());
    let solver = ForwardSolver::new(&mesh, &f, opts()).unwrap();
    assert!(solver.solve_dirichlet(&[[0.0; 2]; 3]).is_err());
}
