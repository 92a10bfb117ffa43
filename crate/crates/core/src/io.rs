//! Plain-text matrix, data-vector and scene files.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a
//! written file reproduces every binary64 value exactly.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::real::Real;
use crate::scene::{Lattice, SensorSet, Target};
use crate::sensing::{MatrixKind, SensingMatrix};

fn fmt_f<T: Real>(x: T) -> String {
    format!("{:?}", x.to_f64_lossy())
}

fn parse_f<T: Real>(tok: &str, line: usize) -> Result<T> {
    tok.parse::<f64>()
        .map(T::lit)
        .map_err(|e| Error::Parse { line, msg: format!("bad number {tok:?}: {e}") })
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|e| Error::Parse { line, msg: format!("bad integer {tok:?}: {e}") })
}

/// Non-blank lines with their 1-based numbers, comments (`#`) removed.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Header `rows cols kind omega`, a `# n p` comment, then one line per row
/// of interleaved `re im` pairs.
pub fn write_matrix<T: Real>(phi: &SensingMatrix<T>) -> String {
    let mut out = format!(
        "{} {} {} {}\n# n p: {} {}\n",
        phi.rows(),
        phi.cols(),
        phi.kind.as_str(),
        fmt_f(phi.omega),
        phi.n,
        phi.p
    );
    for i in 0..phi.rows() {
        let row: Vec<String> = phi
            .entries
            .row(i)
            .iter()
            .map(|z| format!("{} {}", fmt_f(z.re), fmt_f(z.im)))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix<T: Real>(text: &str) -> Result<SensingMatrix<T>> {
    let mut n_p: Option<(usize, usize)> = None;
    for l in text.lines() {
        if let Some(rest) = l.trim().strip_prefix("# n p:") {
            let v: Vec<&str> = rest.split_whitespace().collect();
            if v.len() == 2 {
                n_p = Some((parse_usize(v[0], 2)?, parse_usize(v[1], 2)?));
            }
        }
    }
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty matrix file".into() })?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 {
        return Err(Error::Parse { line: hl, msg: "expected header `rows cols kind omega`".into() });
    }
    let rows = parse_usize(h[0], hl)?;
    let cols = parse_usize(h[1], hl)?;
    let kind = MatrixKind::parse(h[2]).ok_or_else(|| Error::Parse { line: hl, msg: format!("unknown kind {:?}", h[2]) })?;
    let omega: T = parse_f(h[3], hl)?;
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 2 * cols {
            return Err(Error::Parse { line: ln, msg: format!("expected {} numbers, found {}", 2 * cols, toks.len()) });
        }
        for pair in toks.chunks(2) {
            data.push(Complex::new(parse_f(pair[0], ln)?, parse_f(pair[1], ln)?));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::Parse { line: hl, msg: format!("header promises {rows} rows, found {seen}") });
    }
    let (n, p) = n_p.unwrap_or((rows, 1));
    if n * p != rows {
        return Err(Error::Parse { line: 2, msg: format!("n·p = {} does not match {rows} rows", n * p) });
    }
    Ok(SensingMatrix { entries: CMatrix::from_row_major(rows, cols, data)?, kind, omega, n, p })
}

/// One `re im` pair per line after a `# scatter-cs data v1` header.
pub fn write_vector<T: Real>(v: &[Complex<T>]) -> String {
    let mut out = String::from("# scatter-cs data v1\n");
    for z in v {
        let _ = writeln!(out, "{} {}", fmt_f(z.re), fmt_f(z.im));
    }
    out
}

pub fn read_vector<T: Real>(text: &str) -> Result<Vec<Complex<T>>> {
    content_lines(text)
        .map(|(ln, l)| {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 2 {
                return Err(Error::Parse { line: ln, msg: "expected `re im`".into() });
            }
            Ok(Complex::new(parse_f(t[0], ln)?, parse_f(t[1], ln)?))
        })
        .collect()
}

/// A lattice, a target on it and optionally a sensor set.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene<T> {
    pub lattice: Lattice<T>,
    pub target: Target<T>,
    pub sensors: Option<SensorSet<T>>,
}

/// Serialises a scene:
///
/// ```text
/// # scatter-cs scene v1
/// [lattice]
/// ell = 1.0
/// side = 8
/// dim = 2
/// [target]
/// 3 0.01 0.0          # index re im
/// [sensors]
/// kind = far-field-2d # or far-field-3d, near-field
/// incident 0.3        # θ (2D) or θ φ (3D)
/// sampling 1.2
/// aperture = 2.0      # near field only, with standoff and
/// point 4.5 0.0 -1.0  # x y z
/// ```
pub fn write_scene<T: Real>(scene: &Scene<T>) -> String {
    let lat = &scene.lattice;
    let mut out = String::from("# scatter-cs scene v1\n[lattice]\n");
    let _ = writeln!(out, "ell = {}\nside = {}\ndim = {}", fmt_f(lat.ell()), lat.side(), lat.dim());
    out.push_str("[target]\n# index re im\n");
    for &j in scene.target.support() {
        let v = scene.target.nu()[j];
        let _ = writeln!(out, "{j} {} {}", fmt_f(v.re), fmt_f(v.im));
    }
    if let Some(s) = &scene.sensors {
        let _ = writeln!(out, "[sensors]\nkind = {}", s.kind_name());
        match s {
            SensorSet::FarField2d { incident, sampling } => {
                for t in incident {
                    let _ = writeln!(out, "incident {}", fmt_f(*t));
                }
                for t in sampling {
                    let _ = writeln!(out, "sampling {}", fmt_f(*t));
                }
            }
            SensorSet::FarField3d { incident, sampling } => {
                for (t, f) in incident {
                    let _ = writeln!(out, "incident {} {}", fmt_f(*t), fmt_f(*f));
                }
                for (t, f) in sampling {
                    let _ = writeln!(out, "sampling {} {}", fmt_f(*t), fmt_f(*f));
                }
            }
            SensorSet::NearField { points, aperture, standoff } => {
                let _ = writeln!(out, "aperture = {}\nstandoff = {}", fmt_f(*aperture), fmt_f(*standoff));
                for p in points {
                    let _ = writeln!(out, "point {} {} {}", fmt_f(p[0]), fmt_f(p[1]), fmt_f(p[2]));
                }
            }
        }
    }
    out
}

pub fn read_scene<T: Real>(text: &str) -> Result<Scene<T>> {
    let mut section = "";
    let (mut ell, mut side, mut dim): (Option<T>, Option<usize>, Option<usize>) = (None, None, None);
    let mut entries: Vec<(usize, Complex<T>)> = Vec::new();
    let mut kind: Option<String> = None;
    let (mut aperture, mut standoff): (Option<T>, Option<T>) = (None, None);
    let mut incident: Vec<Vec<T>> = Vec::new();
    let mut sampling: Vec<Vec<T>> = Vec::new();
    let mut points: Vec<[T; 3]> = Vec::new();
    for (ln, l) in content_lines(text) {
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = match name.trim() {
                "lattice" => "lattice",
                "target" => "target",
                "sensors" => "sensors",
                other => return Err(Error::Parse { line: ln, msg: format!("unknown section [{other}]") }),
            };
            continue;
        }
        let kv = l.split_once('=').map(|(k, v)| (k.trim(), v.trim()));
        match (section, kv) {
            ("lattice", Some(("ell", v))) => ell = Some(parse_f(v, ln)?),
            ("lattice", Some(("side", v))) => side = Some(parse_usize(v, ln)?),
            ("lattice", Some(("dim", v))) => dim = Some(parse_usize(v, ln)?),
            ("target", None) => {
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(Error::Parse { line: ln, msg: "expected `index re im`".into() });
                }
                entries.push((parse_usize(t[0], ln)?, Complex::new(parse_f(t[1], ln)?, parse_f(t[2], ln)?)));
            }
            ("sensors", Some(("kind", v))) => kind = Some(v.to_string()),
            ("sensors", Some(("aperture", v))) => aperture = Some(parse_f(v, ln)?),
            ("sensors", Some(("standoff", v))) => standoff = Some(parse_f(v, ln)?),
            ("sensors", None) => {
                let mut t = l.split_whitespace();
                let tag = t.next().unwrap_or("");
                let nums = t.map(|x| parse_f(x, ln)).collect::<Result<Vec<T>>>()?;
                match tag {
                    "incident" => incident.push(nums),
                    "sampling" => sampling.push(nums),
                    "point" if nums.len() == 3 => points.push([nums[0], nums[1], nums[2]]),
                    _ => return Err(Error::Parse { line: ln, msg: format!("unexpected sensor line {l:?}") }),
                }
            }
            _ => return Err(Error::Parse { line: ln, msg: format!("unexpected line {l:?} in section [{section}]") }),
        }
    }
    let missing = |k: &str| Error::Parse { line: 0, msg: format!("[lattice] is missing `{k}`") };
    let lattice = Lattice::new(ell.ok_or_else(|| missing("ell"))?, side.ok_or_else(|| missing("side"))?, dim.ok_or_else(|| missing("dim"))?)?;
    let target = Target::from_entries(lattice.len(), &entries)?;
    let angles = |v: &[Vec<T>], width: usize| -> Result<Vec<Vec<T>>> {
        if v.iter().any(|a| a.len() != width) {
            return Err(Error::Parse { line: 0, msg: format!("far-field angles need {width} value(s) per line") });
        }
        Ok(v.to_vec())
    };
    let sensors = match kind.as_deref() {
        None => None,
        Some("far-field-2d") => Some(SensorSet::FarField2d {
            incident: angles(&incident, 1)?.into_iter().map(|a| a[0]).collect(),
            sampling: angles(&sampling, 1)?.into_iter().map(|a| a[0]).collect(),
        }),
        Some("far-field-3d") => Some(SensorSet::FarField3d {
            incident: angles(&incident, 2)?.into_iter().map(|a| (a[0], a[1])).collect(),
            sampling: angles(&sampling, 2)?.into_iter().map(|a| (a[0], a[1])).collect(),
        }),
        Some("near-field") => Some(SensorSet::NearField {
            points,
            aperture: aperture.ok_or(Error::Parse { line: 0, msg: "near-field sensors need `aperture`".into() })?,
            standoff: standoff.ok_or(Error::Parse { line: 0, msg: "near-field sensors need `standoff`".into() })?,
        }),
        Some(other) => return Err(Error::Parse { line: 0, msg: format!("unknown sensor kind {other:?}") }),
    };
    Ok(Scene { lattice, target, sensors })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    Ok(std::fs::write(path, text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{draw_far_field_2d, draw_near_field, draw_target, rng_from_seed, AmplitudeLaw, AngleDensity};
    use crate::sensing::{build_dt_nearfield, build_mimo_born};
    use crate::specfun::Wavenumber;
    use proptest::prelude::*;

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let lat = Lattice::square(0.7, 3).unwrap();
        let phi = build_mimo_born(&lat, &[0.1, 2.0], &[-1.0, 0.3, 3.0], Wavenumber::new(13.37).unwrap()).unwrap();
        let back: SensingMatrix<f64> = read_matrix(&write_matrix(&phi)).unwrap();
        assert_eq!(back, phi);
        let mut rng = rng_from_seed(3);
        let s = draw_near_field(&lat, 4, 2.0, 1.0, &mut rng).unwrap();
        let nf = build_dt_nearfield(&lat, &s, Wavenumber::new(5.0).unwrap()).unwrap();
        assert_eq!(read_matrix::<f64>(&write_matrix(&nf)).unwrap(), nf);
    }

    proptest! {
        #[test]
        fn vector_round_trip(v in proptest::collection::vec((any::<f64>(), any::<f64>()), 0..20)) {
            let v: Vec<Complex<f64>> = v.into_iter()
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(a, b)| Complex::new(a, b)).collect();
            prop_assert_eq!(read_vector::<f64>(&write_vector(&v)).unwrap(), v);
        }
    }

    #[test]
    fn matrix_reader_rejects_malformed_input() {
        assert!(read_matrix::<f64>("").is_err());
        assert!(read_matrix::<f64>("2 1 mimo-born 1.0\n1 0\n").is_err());
        assert!(read_matrix::<f64>("1 1 bogus 1.0\n1 0\n").is_err());
        assert!(read_matrix::<f64>("1 2 simo-far-field 1.0\n1 0 1\n").is_err());
        assert!(matches!(read_matrix::<f64>("1 1 simo-far-field x\n1 0\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn scene_round_trips() {
        let lat = Lattice::square(1.0, 4).unwrap();
        let target = draw_target(&lat, 3, AmplitudeLaw::Uniform { lo: 0.5, hi: 2.0 }, 7).unwrap();
        let mut rng = rng_from_seed(1);
        let ff = draw_far_field_2d(2, 5, &AngleDensity::uniform(), &AngleDensity::uniform(), &mut rng);
        let scene = Scene { lattice: lat.clone(), target: target.clone(), sensors: Some(ff) };
        assert_eq!(read_scene::<f64>(&write_scene(&scene)).unwrap(), scene);
        let nf = draw_near_field(&lat, 3, 2.0, 0.5, &mut rng).unwrap();
        let scene = Scene { lattice: lat.clone(), target: target.clone(), sensors: Some(nf) };
        assert_eq!(read_scene::<f64>(&write_scene(&scene)).unwrap(), scene);
        let cube = Lattice::cubic(1.0, 2).unwrap();
        let ff3 = SensorSet::FarField3d { incident: vec![(0.1, 0.2)], sampling: vec![(0.3, -1.0), (-0.5, 2.0)] };
        let scene = Scene { lattice: cube.clone(), target: Target::from_dense(vec![Complex::new(0.0, 0.0); 8]), sensors: Some(ff3) };
        assert_eq!(read_scene::<f64>(&write_scene(&scene)).unwrap(), scene);
        let bare = Scene { lattice: lat, target, sensors: None };
        assert_eq!(read_scene::<f64>(&write_scene(&bare)).unwrap(), bare);
    }

    #[test]
    fn scene_reader_reports_errors() {
        assert!(read_scene::<f64>("[lattice]\nell = 1\nside = 2\n").is_err());
        assert!(read_scene::<f64>("[lattice]\nell = 1\nside = 2\ndim = 2\n[target]\n9 1 0\n").is_err());
        assert!(matches!(read_scene::<f64>("[bogus]\n"), Err(Error::Parse { line: 1, .. })));
        assert!(read_scene::<f64>("[lattice]\nell = 1\nside = 2\ndim = 2\n[sensors]\nkind = near-field\npoint 1 2 3\n").is_err());
    }
}
