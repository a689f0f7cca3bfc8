use crate::state::ShellState;

/// Leading eigenvalue of the linearized renormalization map for the dyadic
/// cutoff family.
pub const DYADIC_EIGENVALUE: f64 = -0.5;

fn shape(n: usize) -> f64 {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * 2f64.powi(n as i32) - 1.0
}

/// Stationary amplitude of shell `n` for the dyadic `(level, 1)` cutoff
/// model with `b_0 = 1`; zero beyond the last dissipative shell.
pub fn stationary_dyadic_exact(level: usize, n: usize) -> f64 {
    if n == 0 || n > level + 1 {
        return 0.0;
    }
    let nf = n as f64;
    let decay = DYADIC_EIGENVALUE.powi(level as i32);
    (-nf / 3.0 - decay * shape(n) / 9.0).exp2()
}

/// The whole stationary state `u_1..u_{level+1}`.
pub fn stationary_dyadic_state(level: usize) -> ShellState {
    ShellState::real((1..=level + 1).map(|n| stationary_dyadic_exact(level, n)).collect())
        .expect("closed form is finite")
}

/// Limit `2^(-n/3)` of the stationary states as the level grows.
pub fn stationary_limit(n: usize) -> f64 {
    (-(n as f64) / 3.0).exp2()
}

/// First-order correction: `u^(N)_n ~ 2^(-n/3) + rho^N v_n`.
pub fn stationary_eigvec(n: usize) -> f64 {
    -shape(n) * stationary_limit(n) * std::f64::consts::LN_2 / 9.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundarySpec;
    use crate::model::ModelSpec;
    use crate::regularization::RegularizationSpec;
    use crate::system::Problem;
    use num_complex::Complex64;

    #[test]
    fn examples() {
        assert_eq!(stationary_dyadic_exact(0, 1), 1.0);
        assert_eq!(stationary_dyadic_exact(5, 7), 0.0);
        assert!((stationary_limit(3) - 0.5).abs() < 1e-16);
        // large level approaches the limit
        assert!((stationary_dyadic_exact(60, 3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn closed_form_is_an_equilibrium() {
        let bc = BoundarySpec::constant(&[Complex64::from(1.0)]);
        for level in 0..=12 {
            let problem = Problem::new(ModelSpec::DYADIC, RegularizationSpec::canonical(level, 1), bc.clone()).unwrap();
            let state = stationary_dyadic_state(level);
            let mut dy = vec![0.0; level + 1];
            problem.rhs_flat(0.0, state.as_flat(), &mut dy);
            for (n, d) in dy.iter().enumerate() {
                let scale = 2f64.powi(n as i32 + 1);
                assert!(d.abs() < 1e-14 * scale, "level {level} shell {} residual {d}", n + 1);
            }
        }
    }

    #[test]
    fn remainder_decays_like_rho_squared() {
        let rho = DYADIC_EIGENVALUE;
        for n in 1..=3 {
            let remainder = |level: usize| {
                stationary_dyadic_exact(level, n) - stationary_limit(n) - rho.powi(level as i32) * stationary_eigvec(n)
            };
            for level in 6..12 {
                let ratio = remainder(level + 1) / remainder(level);
                assert!((ratio - rho * rho).abs() < 0.01, "n {n} level {level} ratio {ratio}");
            }
        }
    }
}
