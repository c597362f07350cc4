use crate::vector::Vector;

use super::Particle;

/// Relative tolerance below which a contact is treated as grazing and skipped:
/// contacts whose discriminant is at most `GRAZING_TOL * |u|² ε²`.
pub const GRAZING_TOL: f64 = 1e-14;

/// Specular reflection of a colliding pair along the unit vector `omega`.
#[inline]
pub fn reflect_velocities(vi: Vector, vj: Vector, omega: Vector) -> (Vector, Vector) {
    let k = (vi - vj).dot(&omega);
    let dv = omega * k;
    (vi - dv, vj + dv)
}

/// First time `t >= 0` with `|r + u t| = eps` while approaching, for relative
/// position `r` and relative velocity `u`. Overlapping, approaching pairs get
/// `t = 0`. Grazing and missing pairs give `None`.
#[inline]
pub fn contact_time(r: Vector, u: Vector, eps: f64) -> Option<f64> {
    let b = r.dot(&u);
    if b >= 0.0 {
        return None;
    }
    let uu = u.norm2();
    let c = r.norm2() - eps * eps;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - uu * c;
    if disc <= GRAZING_TOL * uu * eps * eps {
        return None;
    }
    // stable form of (-b - sqrt(disc)) / uu
    Some(c / (-b + disc.sqrt()))
}

/// Next contact time of two particles on the unit torus, scanning the
/// minimal image and its neighbouring images. Contacts that require a relative
/// displacement longer than one period are not reported.
pub fn predict_pair_collision(pi: &Particle, pj: &Particle, epsilon: f64) -> Option<f64> {
    let r0 = (pi.position - pj.position).min_image();
    let u = pi.velocity - pj.velocity;
    let speed = u.norm();
    if speed == 0.0 {
        return None;
    }
    let dz: &[f64] = if pi.position.0[2] == 0.0 && pj.position.0[2] == 0.0 && u.0[2] == 0.0 {
        &[0.0]
    } else {
        &[-1.0, 0.0, 1.0]
    };
    let mut best: Option<f64> = None;
    for &ox in &[-1.0, 0.0, 1.0] {
        for &oy in &[-1.0, 0.0, 1.0] {
            for &oz in dz {
                let r = r0 + Vector([ox, oy, oz]);
                if let Some(t) = contact_time(r, u, epsilon) {
                    if speed * t <= 1.0 && best.is_none_or(|b| t < b) {
                        best = Some(t);
                    }
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2(x: f64, y: f64, vx: f64, vy: f64) -> Particle {
        Particle::new(Vector::new2(x, y), Vector::new2(vx, vy))
    }

    #[test]
    fn head_on_exchange() {
        let (a, b) = reflect_velocities(Vector::new2(1.0, 0.0), Vector::new2(-1.0, 0.0), Vector::new2(1.0, 0.0));
        assert_eq!(a, Vector::new2(-1.0, 0.0));
        assert_eq!(b, Vector::new2(1.0, 0.0));
    }

    #[test]
    fn grazing_is_fixed_point() {
        let vi = Vector::new2(1.0, 0.0);
        let vj = Vector::new2(0.0, 0.0);
        let (a, b) = reflect_velocities(vi, vj, Vector::new2(0.0, 1.0));
        assert_eq!((a, b), (vi, vj));
    }

    #[test]
    fn generic_reflection_matches_normal_tangential_split() {
        let vi = Vector::new2(1.0, 2.0);
        let vj = Vector::new2(0.0, -1.0);
        let w = Vector::new2(0.6, 0.8);
        let (a, b) = reflect_velocities(vi, vj, w);
        // oracle: centre-of-mass frame, relative velocity's normal part flips
        let cm = (vi + vj) * 0.5;
        let u = vi - vj;
        let un = w * u.dot(&w);
        let u2 = u - un * 2.0;
        let ea = cm + u2 * 0.5;
        let eb = cm - u2 * 0.5;
        assert!((a - ea).max_abs() < 1e-15 && (b - eb).max_abs() < 1e-15);
        assert!((a - Vector::new2(-0.8, -0.4)).max_abs() < 1e-14);
        assert!((b - Vector::new2(1.8, 1.4)).max_abs() < 1e-14);
        assert!((a + b - vi - vj).max_abs() < 1e-15);
        assert!((a.norm2() + b.norm2() - vi.norm2() - vj.norm2()).abs() < 1e-14);
        let (c, d) = reflect_velocities(a, b, w);
        assert!((c - vi).max_abs() < 1e-15 && (d - vj).max_abs() < 1e-15);
    }

    #[test]
    fn head_on_prediction() {
        let t = predict_pair_collision(&p2(0.2, 0.5, 1.0, 0.0), &p2(0.5, 0.5, -1.0, 0.0), 0.05).unwrap();
        assert!((t - (0.3 - 0.05) / 2.0).abs() < 1e-15);
        // receding pair whose wrapped image is missed laterally
        assert!(predict_pair_collision(&p2(0.2, 0.5, -1.0, 0.3), &p2(0.5, 0.5, 1.0, 0.0), 0.05).is_none());
        // receding collinear pair meets its periodic image on the far side
        let t = predict_pair_collision(&p2(0.2, 0.5, -1.0, 0.0), &p2(0.5, 0.5, 1.0, 0.0), 0.05).unwrap();
        assert!((t - (0.7 - 0.05) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn wraparound_prediction_matches_time_stepping() {
        let a = p2(0.95, 0.30, 0.7, 0.1);
        let b = p2(0.10, 0.33, -0.4, 0.0);
        let eps = 0.03;
        let t = predict_pair_collision(&a, &b, eps).unwrap();
        // oracle: step the free flights with dt = 1e-6 and watch the torus distance
        let dt = 1e-6;
        let mut k = 0u64;
        let hit = loop {
            let s = k as f64 * dt;
            let xa = (a.position + a.velocity * s).wrap_unit();
            let xb = (b.position + b.velocity * s).wrap_unit();
            if (xa - xb).min_image().norm() <= eps {
                break s;
            }
            k += 1;
            assert!(s < 2.0);
        };
        assert!((t - hit).abs() <= dt, "{t} vs {hit}");
    }

    #[test]
    fn grazing_contact_is_skipped() {
        // tangent trajectories: closest approach exactly eps
        let eps = 0.1;
        let r = Vector::new2(-0.5, eps);
        let u = Vector::new2(1.0, 0.0);
        assert!(contact_time(r, u, eps).is_none());
    }
}
