use crate::boltzmann::{CollisionQuadrature, VelocityGridFn, NEGATIVE_MASS_TOL};
use crate::error::{Error, Result};

/// Largest exponent `Δp` accepted before reporting overflow.
const MAX_EXPONENT: f64 = 700.0;

/// Positive part of a density, refusing densities with more than
/// [`NEGATIVE_MASS_TOL`] negative mass.
pub(crate) fn positive_part(phi: &VelocityGridFn) -> Result<Vec<f64>> {
    let dv = phi.grid.cell_volume();
    let neg: f64 = phi.values.iter().map(|x| (-x).max(0.0)).sum::<f64>() * dv;
    if !(neg <= NEGATIVE_MASS_TOL) {
        return Err(Error::Precondition(format!("density has negative mass {neg:e}")));
    }
    Ok(phi.values.iter().map(|x| x.max(0.0)).collect())
}

fn check(q: &CollisionQuadrature, phi: &VelocityGridFn, p: &VelocityGridFn) -> Result<()> {
    if phi.grid != q.grid || p.grid != q.grid {
        return Err(Error::GridMismatch("density, field and quadrature must share a grid".into()));
    }
    Ok(())
}

/// `ℋ` and, if requested, its gradient as a density: `ΔV Σ_c q_c grad_c` is
/// the derivative of `ℋ(φ, p + s q)` at `s = 0`.
pub(crate) fn value_and_grad(q: &CollisionQuadrature, phi: &[f64], p: &[f64], want_grad: bool) -> Result<(f64, Vec<f64>)> {
    let dv = q.grid.cell_volume();
    let mut value = crate::stats::KahanSum::new();
    let mut grad = if want_grad { vec![0.0; phi.len()] } else { Vec::new() };
    let mut overflow = None;
    q.visit(|a, b, w, sv, sw| {
        let ff = phi[a] * phi[b];
        if ff == 0.0 || overflow.is_some() {
            return;
        }
        let dp = sv.eval(p) + sw.eval(p) - p[a] - p[b];
        if dp > MAX_EXPONENT {
            overflow = Some((a, dp));
            return;
        }
        let coef = 0.5 * w * ff * dv * dv;
        value.add(coef * dp.exp_m1());
        if want_grad {
            let g = coef * dp.exp() / dv;
            sv.deposit(&mut grad, g);
            sw.deposit(&mut grad, g);
            grad[a] -= g;
            grad[b] -= g;
        }
    });
    if let Some((node, exponent)) = overflow {
        return Err(Error::Overflow { node, exponent });
    }
    Ok((value.value(), grad))
}

/// `ℋ(φ, p) = ½ ∫ dμ φ φ (exp(Δp) - 1)` on the quadrature grid, with the
/// positive part of `φ`.
pub fn hamiltonian(q: &CollisionQuadrature, phi: &VelocityGridFn, p: &VelocityGridFn) -> Result<f64> {
    check(q, phi, p)?;
    Ok(value_and_grad(q, &positive_part(phi)?, &p.values, false)?.0)
}

/// Functional gradient of [`hamiltonian`] in `p`, as a density on the grid.
/// At `p = 0` it is the collision operator `C(φ, φ)`.
pub fn hamiltonian_grad_p(q: &CollisionQuadrature, phi: &VelocityGridFn, p: &VelocityGridFn) -> Result<Vec<f64>> {
    check(q, phi, p)?;
    Ok(value_and_grad(q, &positive_part(phi)?, &p.values, true)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boltzmann::{collision_operator, VelocityGrid};
    use crate::init_gc::{DensityProfile, ProfileKind};
    use proptest::prelude::*;

    fn setup() -> (CollisionQuadrature, VelocityGridFn) {
        let grid = VelocityGrid::new(2, 5.0, 12).unwrap();
        let q = CollisionQuadrature::new(grid, 6).unwrap();
        let f = DensityProfile::new(2, ProfileKind::Bimodal { beta: 1.5, shift: 1.0 }).unwrap();
        (q, VelocityGridFn::from_profile(grid, &f).unwrap())
    }

    fn field(q: &CollisionQuadrature, f: impl Fn(&crate::Vector) -> f64) -> VelocityGridFn {
        VelocityGridFn::new(q.grid, q.grid.sample(f), 0.0).unwrap()
    }

    #[test]
    fn vanishes_on_invariants() {
        let (q, phi) = setup();
        assert_eq!(hamiltonian(&q, &phi, &field(&q, |_| 0.0)).unwrap(), 0.0);
        let inv = field(&q, |v| 0.3 - 0.2 * v.0[0] + 0.7 * v.0[1] + 0.4 * v.norm2());
        assert!(hamiltonian(&q, &phi, &inv).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gradient_at_zero_is_collision_operator() {
        let (q, phi) = setup();
        let grad = hamiltonian_grad_p(&q, &phi, &field(&q, |_| 0.0)).unwrap();
        let c = collision_operator(&q, &phi).unwrap();
        let qf = q.grid.sample(|v| v.0[0] * v.0[0] - v.0[1] * v.0[1] + 0.1 * v.0[0].powi(4) + (0.7 * v.0[0]).sin());
        let lhs = q.grid.pairing(&qf, &grad);
        let rhs = q.grid.pairing(&qf, &c);
        assert!(rhs.abs() > 1e-3, "degenerate test function: {rhs}");
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs(), "{lhs} {rhs}");
        // small p: ℋ is linear to first order
        let s = 1e-6;
        let small = VelocityGridFn::new(q.grid, qf.iter().map(|x| s * x).collect(), 0.0).unwrap();
        let h = hamiltonian(&q, &phi, &small).unwrap() / s;
        assert!((h - rhs).abs() <= 1e-5 * rhs.abs(), "{h} {rhs}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (q, phi) = setup();
        let p = field(&q, |v| 0.3 * (v.0[0] - 0.5).tanh() + 0.05 * v.0[1] * v.0[1]);
        let grad = hamiltonian_grad_p(&q, &phi, &p).unwrap();
        let dv = q.grid.cell_volume();
        for node in [0usize, 17, 50, 77, 143] {
            let step = 1e-5;
            let mut up = p.clone();
            up.values[node] += step;
            let mut down = p.clone();
            down.values[node] -= step;
            let fd = (hamiltonian(&q, &phi, &up).unwrap() - hamiltonian(&q, &phi, &down).unwrap()) / (2.0 * step) / dv;
            let scale = grad.iter().map(|x| x.abs()).fold(0.0, f64::max);
            assert!((fd - grad[node]).abs() < 1e-6 * scale, "node {node}: fd {fd} grad {}", grad[node]);
        }
    }

    #[test]
    fn zero_density_gives_zero() {
        let (q, _) = setup();
        let phi = VelocityGridFn::zeros(q.grid);
        let p = field(&q, |v| v.0[0]);
        assert!(hamiltonian_grad_p(&q, &phi, &p).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn overflow_is_reported() {
        let (q, phi) = setup();
        let p = field(&q, |v| if v.0[0] > 2.0 { 800.0 } else { 0.0 });
        assert!(matches!(hamiltonian(&q, &phi, &p), Err(Error::Overflow { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn convex_in_the_field(c1 in prop::collection::vec(-1.0f64..1.0, 4), c2 in prop::collection::vec(-1.0f64..1.0, 4)) {
            let (q, phi) = setup();
            let make = |c: &[f64]| field(&q, |v| c[0] * v.0[0] * v.0[1] + c[1] * (v.0[0]).sin() + c[2] * 0.1 * v.norm2() * v.0[0] + c[3] * (-v.norm2()).exp());
            let (p1, p2) = (make(&c1), make(&c2));
            let mid = VelocityGridFn::new(q.grid, p1.values.iter().zip(&p2.values).map(|(a, b)| 0.5 * (a + b)).collect(), 0.0).unwrap();
            let h1 = hamiltonian(&q, &phi, &p1).unwrap();
            let h2 = hamiltonian(&q, &phi, &p2).unwrap();
            let hm = hamiltonian(&q, &phi, &mid).unwrap();
            prop_assert!(hm <= 0.5 * (h1 + h2) + 1e-12 * (h1.abs() + h2.abs()));
        }
    }
}
