//! End-to-end checks across modules on coarse grids.

use halfspace_core::asymptotics::io::{read_points_csv, sweep_records, write_csv};
use halfspace_core::asymptotics::{fit_power_law, solve_hydrogen, sweep_w};
use halfspace_core::config::ConfigFile;
use halfspace_core::eigensolver::{
    assemble_hydrogen_plate, feshbach_fixed_point, lowest_eigenpair, EigOptions, GridCyl, GridSpec,
    Projection, SparseFeshbach,
};
use halfspace_core::model::{validate_molecule, Vec3, E_H};
use halfspace_core::multipole::{compute_cv, grid_cv, interaction_coefficients, GroundBasis};
use halfspace_core::wavefn::GridFn;

fn coarse() -> GridSpec {
    GridSpec::new(0.5, 0.5, 20.0, 20.0).unwrap()
}

#[test]
fn sweep_csv_fit_round_trip() {
    let r_values = [8.0, 10.0, 12.0, 14.0];
    let table = sweep_w(&r_values, 1.0, &coarse(), &EigOptions::default(), 2).unwrap();
    assert_eq!(table.failures(), 0);
    let mut buf = Vec::new();
    let cfg = vec![("command".to_string(), "sweep".to_string())];
    write_csv(&mut buf, &cfg, &sweep_records(&table)).unwrap();
    let points = read_points_csv(&buf[..]).unwrap();
    assert_eq!(points, table.points());
    let fit = fit_power_law(&points, &[3, 5]).unwrap();
    let c3 = fit.coefficient(3).unwrap();
    // Coarse grid: sign and order of magnitude only.
    assert!((-1.5..-0.5).contains(&c3), "{c3}");
}

#[test]
fn same_grid_reference_cancels_discretization_offset() {
    let row = solve_hydrogen(12.0, 0.0, &coarse(), &EigOptions::default()).unwrap();
    let e = row.energy.unwrap();
    assert!((e - row.reference.unwrap()).abs() < 1e-12);
    assert!((e - E_H).abs() < 5e-3);
}

/// The Feshbach fixed point on the grid Hamiltonian, with `P` projecting onto
/// the free-atom ground state, reproduces the direct Lanczos eigenvalue.
#[test]
fn grid_feshbach_fixed_point_matches_lanczos() {
    let r = 6.0;
    let spec = GridSpec::new(0.6, 0.6, 9.0, 9.0).unwrap();
    let grid = GridCyl::new(&spec, r).unwrap();
    let opts = EigOptions::default();
    let free = lowest_eigenpair(&assemble_hydrogen_plate(&grid, r, 0.0).unwrap(), &opts).unwrap();
    let h = assemble_hydrogen_plate(&grid, r, 1.0).unwrap();
    let direct = lowest_eigenpair(&h, &opts).unwrap();
    let map = SparseFeshbach::new(&h, Projection::rank_one(&free.vector).unwrap(), &opts).unwrap();
    let fp = feshbach_fixed_point(&map, None, 1e-12).unwrap();
    assert!(
        (fp.lambda - direct.eigenvalue).abs() < 1e-8,
        "{} vs {}",
        fp.lambda,
        direct.eigenvalue
    );
}

#[test]
fn grid_ground_state_has_unit_cv() {
    let r = 30.0;
    let spec = GridSpec::new(0.25, 0.25, 15.0, 15.0).unwrap();
    let grid = GridCyl::new(&spec, r).unwrap();
    let h = assemble_hydrogen_plate(&grid, r, 0.0).unwrap();
    let ground = lowest_eigenpair(&h, &EigOptions::default()).unwrap();
    let g = GridFn::from_symmetrized(grid, &h, &ground.vector).unwrap();
    let c = grid_cv(&g, Vec3::E1).unwrap();
    let analytic = compute_cv(&GroundBasis::hydrogen().unwrap(), Vec3::E1).unwrap();
    assert!((c - analytic).abs() < 2e-2, "{c} vs {analytic}");
}

#[test]
fn config_file_drives_geometry_and_coefficients() {
    let text = "\
r = 50
v = 0, 0, 1
nucleus = 1 0 0 0
";
    let cfg = ConfigFile::parse(text).unwrap();
    let plate = cfg.plate().unwrap();
    let mol = cfg.molecule().unwrap();
    assert!(validate_molecule(&mol, &plate).is_valid());
    let electron = [Vec3::new(0.3, -0.4, 1.2)];
    let a = interaction_coefficients(&mol, plate.v, &electron, plate.r).unwrap();
    // Neutral atom: the 1/r and 1/r² terms cancel, the 1/r³ term is the
    // dipole form -((s·v)² + |s|²)/16 of the electron position s. Four sample
    // distances alias the neglected higher orders into the fitted terms.
    assert!(a[0].abs() < 1e-8 && a[1].abs() < 1e-5, "{a:?}");
    let s = electron[0];
    let expected = -(s.dot(plate.v).powi(2) + s.norm_squared()) / 16.0;
    assert!(
        (a[2] - expected).abs() < 1e-2 * expected.abs(),
        "{} vs {expected}",
        a[2]
    );
}
