use num_complex::Complex64;
use scatter_cs::forward::{born_amplitude, exact_amplitude, foldy_lax_solve, IncidentField};
use scatter_cs::scene::{draw_target, AmplitudeLaw, Lattice};
use scatter_cs::sensing::{build_mimo_born_dirs, build_simo_farfield_dirs};
use scatter_cs::specfun::Wavenumber;
use std::f64::consts::PI;

fn dir2(t: f64) -> [f64; 3] {
    [t.cos(), 0.0, t.sin()]
}

fn close(a: &[Complex64], b: &[Complex64], tol: f64) {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).norm() <= tol * scale, "{x} vs {y}");
    }
}

#[test]
fn born_data_is_mimo_matrix_times_strengths() {
    let lat = Lattice::square(1.0, 5).unwrap();
    let w = Wavenumber::new(12.0).unwrap();
    let target = draw_target(&lat, 4, AmplitudeLaw::Constant(0.3), 21).unwrap();
    let inc: Vec<_> = [0.1, 1.3, 2.9].into_iter().map(dir2).collect();
    let samp: Vec<_> = [0.4, -1.0, 2.2, 3.0, -2.5].into_iter().map(dir2).collect();
    let scale = 4.0 * PI / 144.0;
    let mut y = Vec::new();
    for &d in &inc {
        for &r in &samp {
            y.push(born_amplitude(&target, &lat, w, d, r).unwrap() * scale);
        }
    }
    let phi = build_mimo_born_dirs(&lat, &inc, &samp, w).unwrap();
    close(&phi.entries.mul_vec(target.nu()), &y, 1e-12);
}

#[test]
fn exact_data_is_simo_matrix_times_field_weighted_strengths() {
    let lat = Lattice::square(1.0, 5).unwrap();
    let w = Wavenumber::new(7.0).unwrap();
    let target = draw_target(&lat, 3, AmplitudeLaw::Constant(0.5), 4).unwrap();
    let d = dir2(0.7);
    let samp: Vec<_> = (0..9).map(|k| dir2(0.7 * k as f64 - 3.0)).collect();
    let field = foldy_lax_solve(&target, &lat, &IncidentField::PlaneWave(d), w).unwrap();
    let mut x = vec![Complex64::new(0.0, 0.0); lat.len()];
    for (&j, &u) in field.sites.iter().zip(&field.u) {
        x[j] = target.nu()[j] * u;
    }
    let scale = 4.0 * PI / 49.0;
    let y: Vec<_> = samp.iter().map(|&r| exact_amplitude(&target, &lat, w, d, r).unwrap() * scale).collect();
    let phi = build_simo_farfield_dirs(&lat, &samp, w).unwrap();
    close(&phi.entries.mul_vec(&x), &y, 1e-12);
}

#[test]
fn weak_scatterers_approach_born() {
    let lat = Lattice::square(1.0, 4).unwrap();
    let w = Wavenumber::new(5.0).unwrap();
    let (d, r) = (dir2(0.3), dir2(2.0));
    let mut prev = f64::INFINITY;
    for a in [1e-2, 1e-3, 1e-4] {
        let t = draw_target(&lat, 3, AmplitudeLaw::Constant(a), 8).unwrap();
        let exact = exact_amplitude(&t, &lat, w, d, r).unwrap();
        let born = born_amplitude(&t, &lat, w, d, r).unwrap();
        let rel = (exact - born).norm() / born.norm();
        assert!(rel < prev);
        prev = rel;
    }
    assert!(prev < 1e-3);
}
