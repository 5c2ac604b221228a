/// Upwind flux `upw{g} (a·ν) = avg{g} (a·ν) + sign(a·ν)/2 · (g⁻ − g⁺)(a·ν)`
/// for a face with normal `ν` pointing from the minus to the plus side.
/// `sign(0)` is taken as zero, where the flux vanishes anyway.
pub fn upwind_flux(a_dot_nu: f64, g_minus: f64, g_plus: f64) -> f64 {
    let sign = if a_dot_nu > 0.0 {
        1.0
    } else if a_dot_nu < 0.0 {
        -1.0
    } else {
        0.0
    };
    0.5 * (g_minus + g_plus) * a_dot_nu + 0.5 * sign * (g_minus - g_plus) * a_dot_nu
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn picks_the_upstream_value() {
        assert_eq!(upwind_flux(2.0, 3.0, 1.0), 6.0);
        assert_eq!(upwind_flux(-2.0, 3.0, 1.0), -2.0);
        assert_eq!(upwind_flux(0.0, 3.0, 1.0), 0.0);
    }

    proptest! {
        #[test]
        fn continuous_traces_give_central_flux(a in -10.0..10.0f64, g in -5.0..5.0f64) {
            prop_assert!((upwind_flux(a, g, g) - g * a).abs() <= 1e-12 * (1.0 + (g * a).abs()));
        }

        #[test]
        fn equals_one_sided_value(a in -10.0..10.0f64, gm in -5.0..5.0f64, gp in -5.0..5.0f64) {
            let expected = if a >= 0.0 { gm * a } else { gp * a };
            prop_assert!((upwind_flux(a, gm, gp) - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }
}
